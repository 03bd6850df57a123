//! Natural-language rendering of explanation layers and the JSON export.
//!
//! Each non-rule node becomes one sentence, emitted roots first and
//! conclusion last. Rule nodes still present in a layer become numbered
//! footnotes attached to the sentence of the statement they conclude.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{LayeredExplanation, RuleCombo};
use crate::complexity::{node_simplicity, ComplexityScore};
use crate::graph::{ExplanationGraph, NodeKind};
use crate::trace::{canonicalize, Domain, Predicate};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error(
        "template for `{predicate}` has {slots} slot(s) but the predicate has {arity} argument(s)"
    )]
    TemplateArity {
        predicate: String,
        slots: usize,
        arity: usize,
    },
    #[error("layer graph is cyclic")]
    Cyclic,
    #[error("malformed template set: {0}")]
    Malformed(String),
}

/// Sentence templates keyed by predicate name, with `{0}`, `{1}`, ... slots
/// for the predicate arguments. Statements whose predicate has no template
/// fall back to their own text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemplateSet {
    pub templates: BTreeMap<String, String>,
    /// Prefixed to the conclusion sentence.
    pub conclusion_prefix: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            templates: BTreeMap::new(),
            conclusion_prefix: "Therefore, ".to_string(),
        }
    }
}

fn slot_indices(template: &str) -> BTreeSet<usize> {
    let mut slots = BTreeSet::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        rest = &rest[open + 1..];
        if let Some(close) = rest.find('}') {
            if let Ok(n) = rest[..close].parse::<usize>() {
                slots.insert(n);
            }
        }
    }
    slots
}

impl TemplateSet {
    pub fn from_json(bytes: &[u8]) -> Result<Self, RenderError> {
        let set: TemplateSet =
            serde_json::from_slice(bytes).map_err(|e| RenderError::Malformed(e.to_string()))?;
        Ok(set.normalized())
    }

    pub fn with_template(mut self, predicate: &str, template: &str) -> Self {
        self.templates
            .insert(predicate.to_string(), template.to_string());
        self.normalized()
    }

    fn normalized(self) -> Self {
        TemplateSet {
            templates: self
                .templates
                .into_iter()
                .map(|(k, v)| (k.trim().to_lowercase(), v))
                .collect(),
            ..self
        }
    }

    /// Realizes a statement, using its predicate's template when one exists.
    pub fn realize(&self, predicate: &Predicate, fallback: &str) -> Result<String, RenderError> {
        let Some(template) = self.templates.get(&canonicalize(predicate).name) else {
            return Ok(fallback.to_string());
        };
        let slots = slot_indices(template);
        let arity = predicate.arity();
        let contiguous = slots.iter().copied().eq(0..slots.len());
        if slots.len() != arity || !contiguous {
            return Err(RenderError::TemplateArity {
                predicate: predicate.name.clone(),
                slots: slots.len(),
                arity,
            });
        }
        let mut out = template.clone();
        for (i, arg) in predicate.args.iter().enumerate() {
            out = out.replace(&format!("{{{i}}}"), arg.trim());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sentence {
    pub node: String,
    pub kind: NodeKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Footnote {
    pub marker: usize,
    pub rule: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedExplanation {
    pub combo: RuleCombo,
    pub sentences: Vec<Sentence>,
    pub footnotes: Vec<Footnote>,
    pub complexity: ComplexityScore,
}

const LEADING_FUNCTION_WORDS: [&str; 9] = [
    "The", "A", "An", "There", "This", "These", "Those", "It", "Its",
];

fn after_connective(text: &str) -> String {
    let first = text.split_whitespace().next().unwrap_or_default();
    if LEADING_FUNCTION_WORDS.contains(&first) {
        let mut chars = text.chars();
        let head = chars.next().map(|c| c.to_lowercase().collect::<String>());
        head.unwrap_or_default() + chars.as_str()
    } else {
        text.to_string()
    }
}

pub fn render_layer(
    g: &ExplanationGraph,
    templates: &TemplateSet,
    combo: &RuleCombo,
) -> Result<RenderedExplanation, RenderError> {
    let order = g.topological_order().ok_or(RenderError::Cyclic)?;

    // Footnotes are shared between rule nodes with the same name and
    // definition; markers follow first reference in sentence order.
    let mut footnotes: Vec<Footnote> = Vec::new();
    let mut sentences = Vec::new();
    for id in order {
        let node = &g.nodes()[id];
        let Some(predicate) = node.predicate() else {
            continue;
        };
        let mut text = templates.realize(predicate, node.label())?;
        if id == g.conclusion() && !templates.conclusion_prefix.is_empty() {
            text = format!("{}{}", templates.conclusion_prefix, after_connective(&text));
        }
        for parent in g.parents(id) {
            let Some((name, definition)) = g.node(parent).and_then(|n| n.rule()) else {
                continue;
            };
            let marker = match footnotes
                .iter()
                .find(|f| f.rule == name && f.definition == definition)
            {
                Some(f) => f.marker,
                None => {
                    let marker = footnotes.len() + 1;
                    footnotes.push(Footnote {
                        marker,
                        rule: name.to_string(),
                        definition: definition.to_string(),
                    });
                    marker
                }
            };
            let _ = write!(text, " [{marker}]");
        }
        sentences.push(Sentence {
            node: id.to_string(),
            kind: node.kind,
            text,
        });
    }

    Ok(RenderedExplanation {
        combo: combo.clone(),
        sentences,
        footnotes,
        complexity: node_simplicity(g),
    })
}

impl RenderedExplanation {
    /// Plain text: one sentence per line, then the footnote list.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&s.text);
            out.push('\n');
        }
        if !self.footnotes.is_empty() {
            out.push_str("\n---\n");
            for f in &self.footnotes {
                let _ = writeln!(out, "[{}] {}: {}", f.marker, f.rule, f.definition);
            }
        }
        out
    }

    pub fn body_text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// One layer of the export document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportLayer {
    pub combo: RuleCombo,
    pub cause_count: usize,
    pub rule_count: usize,
    pub sentences: Vec<Sentence>,
    pub footnotes: Vec<Footnote>,
}

/// The layered-explanation document written by `explain` and served at
/// `/explanations/{id}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportDocument {
    pub scenario: String,
    pub domain: Domain,
    pub conclusion_text: String,
    pub layers: Vec<ExportLayer>,
}

impl From<RenderedExplanation> for ExportLayer {
    fn from(r: RenderedExplanation) -> Self {
        ExportLayer {
            combo: r.combo,
            cause_count: r.complexity.cause_count,
            rule_count: r.complexity.rule_count,
            sentences: r.sentences,
            footnotes: r.footnotes,
        }
    }
}

impl ExportDocument {
    pub fn from_json(bytes: &[u8]) -> Result<Self, String> {
        let doc: ExportDocument = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
        doc.check()?;
        Ok(doc)
    }

    /// Schema-level checks beyond field shapes.
    pub fn check(&self) -> Result<(), String> {
        let first = self.layers.first().ok_or("no layers")?;
        if !first.combo.is_empty() {
            return Err(format!("first layer is {}, expected none", first.combo));
        }
        for layer in &self.layers {
            if layer.sentences.len() != layer.cause_count {
                return Err(format!(
                    "layer {}: {} sentences for {} causes",
                    layer.combo,
                    layer.sentences.len(),
                    layer.cause_count
                ));
            }
            if layer.sentences.iter().any(|s| s.kind == NodeKind::Rule) {
                return Err(format!(
                    "layer {}: rule node rendered as sentence",
                    layer.combo
                ));
            }
            for (i, f) in layer.footnotes.iter().enumerate() {
                if f.marker != i + 1 {
                    return Err(format!(
                        "layer {}: footnote markers not consecutive",
                        layer.combo
                    ));
                }
            }
            if layer
                .combo
                .contains(crate::abstraction::AbstractionRule::FlattenRules)
                && !layer.footnotes.is_empty()
            {
                return Err(format!("layer {}: footnotes after FR", layer.combo));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("export serializes");
        out.push(b'\n');
        out
    }
}

pub fn export_document(
    le: &LayeredExplanation,
    templates: &TemplateSet,
) -> Result<ExportDocument, RenderError> {
    let conclusion = le.layers[0].graph.conclusion_node();
    let layers = le
        .layers
        .iter()
        .map(|l| render_layer(&l.graph, templates, &l.combo).map(ExportLayer::from))
        .collect::<Result<_, _>>()?;
    Ok(ExportDocument {
        scenario: le.provenance.scenario.clone(),
        domain: le.provenance.domain,
        conclusion_text: conclusion.label().to_string(),
        layers,
    })
}

pub fn export_layers(
    le: &LayeredExplanation,
    templates: &TemplateSet,
) -> Result<Vec<u8>, RenderError> {
    Ok(export_document(le, templates)?.to_json())
}

/// Markdown-flavoured text for every layer, most complex first.
pub fn export_text(
    le: &LayeredExplanation,
    templates: &TemplateSet,
) -> Result<String, RenderError> {
    let conclusion = le.layers[0].graph.conclusion_node();
    let mut out = format!("# Why: {}\n", conclusion.label());
    for layer in &le.layers {
        let rendered = render_layer(&layer.graph, templates, &layer.combo)?;
        let _ = write!(
            out,
            "\n## Layer {} (causes: {}, rules: {})\n\n{}",
            layer.combo,
            rendered.complexity.cause_count,
            rendered.complexity.rule_count,
            rendered.to_text()
        );
    }
    Ok(out)
}
