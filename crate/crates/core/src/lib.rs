//! Layered natural-language explanations from provenance-style proof traces.
//!
//! A [`ProofTrace`](trace::ProofTrace) is turned into an
//! [`ExplanationGraph`](graph::ExplanationGraph), simplified by combinations
//! of three rewrites (flatten logic, flatten rules, filter knowledge) and
//! rendered layer by layer. The [`study`] module holds the pairwise
//! comparison harness and its rank statistics.

pub mod abstraction;
pub mod complexity;
pub mod graph;
pub mod render;
pub mod study;
pub mod trace;

pub use abstraction::{
    apply_combo, default_chain, filter_knowledge, flatten_logic, flatten_rules, generate_layers,
    nofr_chain, parse_chain, preserves_conclusion, AbstractionError, AbstractionRule, Abstractor,
    FilterPolicy, LayeredExplanation, PreservationReport, RuleCombo,
};
pub use complexity::{compare_layers, node_simplicity, Abstraction, ComplexityScore};
pub use graph::{build_graph, reaches, root_causes, ExplanationGraph, GraphError, NodeKind};
pub use render::{
    export_document, export_layers, export_text, render_layer, ExportDocument, RenderError,
    RenderedExplanation, TemplateSet,
};
pub use trace::{canonicalize, parse_trace, validate_trace, Domain, ProofTrace, TraceError};

/// Builds the graph for `trace` and its layers for `chain`,
/// tagged with the trace's scenario metadata.
pub fn explain_trace(
    trace: &ProofTrace,
    chain: &[RuleCombo],
) -> Result<LayeredExplanation, ExplainError> {
    let graph = build_graph(trace)?;
    Ok(generate_layers(&graph, chain)?.with_provenance(trace.scenario.clone(), trace.domain))
}

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
}
