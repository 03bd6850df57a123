//! Proof-trace documents.
//!
//! A trace records what a reasoner did to reach a conclusion, using the PROV
//! vocabulary loosely: statements play the role of entities, rule
//! applications are activities, premises are `used` edges and a rule's
//! conclusion is `wasGeneratedBy` that activity.
//!
//! ```json
//! {
//!   "scenario": "heatwave",
//!   "domain": "weather",
//!   "conclusion": "I4",
//!   "statements": [{"id": "T1", "text": "...", "predicate": {"name": "forecast", "args": ["adelaide"]}, "kind": "told"}],
//!   "rules": [{"id": "R1", "name": "restatement", "definition": "...", "premises": ["T1"], "conclusion": "I1"}]
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rule name marking a told/background statement being restated as inferred.
pub const RESTATEMENT: &str = "restatement";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnowledgeKind {
    Told,
    Background,
    Inferred,
}

impl fmt::Display for KnowledgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KnowledgeKind::Told => "told",
            KnowledgeKind::Background => "background",
            KnowledgeKind::Inferred => "inferred",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Maritime,
    Weather,
    Other,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Maritime => "maritime",
            Domain::Weather => "weather",
            Domain::Other => "other",
        })
    }
}

/// Symbolic form of a statement: a predicate name applied to string tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Predicate {
    pub name: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl Predicate {
    pub fn new<N, I, A>(name: N, args: I) -> Self
    where
        N: Into<String>,
        I: IntoIterator<Item = A>,
        A: Into<String>,
    {
        Predicate {
            name: name.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn canonical(&self) -> CanonicalForm {
        canonicalize(self)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.args.join(", "))
    }
}

/// Case- and whitespace-folded predicate. Argument order is significant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm {
    pub name: String,
    pub args: Vec<String>,
}

pub fn canonicalize(predicate: &Predicate) -> CanonicalForm {
    fn fold(token: &str) -> String {
        token.trim().to_lowercase()
    }
    CanonicalForm {
        name: fold(&predicate.name),
        args: predicate.args.iter().map(|a| fold(a)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Statement {
    pub id: String,
    pub text: String,
    pub predicate: Predicate,
    pub kind: KnowledgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleApplication {
    pub id: String,
    pub name: String,
    /// Human-readable definition of the rule; reused verbatim as footnote text.
    pub definition: String,
    pub premises: Vec<String>,
    pub conclusion: String,
}

impl RuleApplication {
    pub fn is_restatement(&self) -> bool {
        self.name.trim().eq_ignore_ascii_case(RESTATEMENT)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofTrace {
    pub scenario: String,
    pub domain: Domain,
    pub conclusion: String,
    pub statements: Vec<Statement>,
    pub rules: Vec<RuleApplication>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed trace document: {0}")]
    Syntax(String),
    #[error("reference to undeclared id `{0}`")]
    DanglingReference(String),
    #[error("derivation cycle through `{0}`")]
    Cycle(String),
    #[error("conclusion `{0}` is not a declared inferred statement")]
    MissingConclusion(String),
    #[error("invalid trace: {0}")]
    Invalid(ValidationReport),
}

impl ProofTrace {
    /// Decodes a document without checking trace invariants.
    pub fn from_json(bytes: &[u8]) -> Result<Self, TraceError> {
        let text = std::str::from_utf8(bytes).map_err(|e| TraceError::Syntax(e.to_string()))?;
        serde_json::from_str(text).map_err(|e| TraceError::Syntax(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("trace serializes");
        out.push('\n');
        out
    }

    pub fn statement(&self, id: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.id == id)
    }

    pub fn statements_of(&self, kind: KnowledgeKind) -> impl Iterator<Item = &Statement> {
        self.statements.iter().filter(move |s| s.kind == kind)
    }
}

/// Decodes and validates a trace document. The first violation found decides
/// the error variant.
pub fn parse_trace(bytes: &[u8]) -> Result<ProofTrace, TraceError> {
    let trace = ProofTrace::from_json(bytes)?;
    let report = validate_trace(&trace);
    if let Some(first) = report.violations.first() {
        return Err(match first.invariant {
            Invariant::DanglingReference => TraceError::DanglingReference(first.id.clone()),
            Invariant::Cycle => TraceError::Cycle(first.id.clone()),
            Invariant::MissingConclusion | Invariant::ConclusionNotInferred => {
                TraceError::MissingConclusion(first.id.clone())
            }
            _ => TraceError::Invalid(report),
        });
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Invariant {
    DuplicateId,
    EmptyPredicateName,
    EmptyPremises,
    DanglingReference,
    RuleConcludesNonInferred,
    MissingConclusion,
    ConclusionNotInferred,
    Cycle,
}

impl Invariant {
    pub fn describe(self) -> &'static str {
        match self {
            Invariant::DuplicateId => "duplicate id",
            Invariant::EmptyPredicateName => "empty predicate name",
            Invariant::EmptyPremises => "rule has no premises",
            Invariant::DanglingReference => "reference to undeclared statement",
            Invariant::RuleConcludesNonInferred => "rule concludes non-inferred statement",
            Invariant::MissingConclusion => "conclusion not declared",
            Invariant::ConclusionNotInferred => "conclusion is not inferred knowledge",
            Invariant::Cycle => "cycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: Invariant,
    /// Offending statement or rule id.
    pub id: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.invariant.describe(), self.id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, invariant: Invariant, id: impl Into<String>) {
        self.violations.push(Violation {
            invariant,
            id: id.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

pub fn validate_trace(trace: &ProofTrace) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = BTreeSet::new();
    let ids = trace
        .statements
        .iter()
        .map(|s| s.id.as_str())
        .chain(trace.rules.iter().map(|r| r.id.as_str()));
    for id in ids {
        if !seen.insert(id) {
            report.push(Invariant::DuplicateId, id);
        }
    }

    let kinds: BTreeMap<&str, KnowledgeKind> = trace
        .statements
        .iter()
        .map(|s| (s.id.as_str(), s.kind))
        .collect();

    for s in &trace.statements {
        if s.predicate.name.trim().is_empty() {
            report.push(Invariant::EmptyPredicateName, &s.id);
        }
    }

    for rule in &trace.rules {
        if rule.premises.is_empty() {
            report.push(Invariant::EmptyPremises, &rule.id);
        }
        for premise in &rule.premises {
            if !kinds.contains_key(premise.as_str()) {
                report.push(Invariant::DanglingReference, premise);
            }
        }
        match kinds.get(rule.conclusion.as_str()) {
            None => report.push(Invariant::DanglingReference, &rule.conclusion),
            Some(KnowledgeKind::Inferred) => {}
            Some(_) => report.push(Invariant::RuleConcludesNonInferred, &rule.id),
        }
    }

    match kinds.get(trace.conclusion.as_str()) {
        None => report.push(Invariant::MissingConclusion, &trace.conclusion),
        Some(KnowledgeKind::Inferred) => {}
        Some(_) => report.push(Invariant::ConclusionNotInferred, &trace.conclusion),
    }

    // Statement-level derivation graph: premise -> conclusion for every rule.
    let mut graph = DiGraph::<&str, ()>::new();
    let index: BTreeMap<&str, _> = trace
        .statements
        .iter()
        .map(|s| (s.id.as_str(), graph.add_node(s.id.as_str())))
        .collect();
    for rule in &trace.rules {
        let Some(&to) = index.get(rule.conclusion.as_str()) else {
            continue;
        };
        for premise in &rule.premises {
            if let Some(&from) = index.get(premise.as_str()) {
                graph.update_edge(from, to, ());
            }
        }
    }
    let mut cyclic: Vec<&str> = tarjan_scc(&graph)
        .into_iter()
        .filter(|scc| scc.len() > 1 || graph.contains_edge(scc[0], scc[0]))
        .filter_map(|scc| scc.iter().map(|&n| graph[n]).min())
        .collect();
    cyclic.sort_unstable();
    for id in cyclic {
        report.push(Invariant::Cycle, id);
    }

    report
}
