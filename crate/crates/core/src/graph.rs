//! Explanation graphs built from proof traces.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{validate_trace, KnowledgeKind, Predicate, ProofTrace, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Told,
    Background,
    Inferred,
    Rule,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] = [
        NodeKind::Told,
        NodeKind::Background,
        NodeKind::Inferred,
        NodeKind::Rule,
    ];

    pub fn is_cause(self) -> bool {
        self != NodeKind::Rule
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Told => "told",
            NodeKind::Background => "background",
            NodeKind::Inferred => "inferred",
            NodeKind::Rule => "rule",
        }
    }
}

impl From<KnowledgeKind> for NodeKind {
    fn from(kind: KnowledgeKind) -> Self {
        match kind {
            KnowledgeKind::Told => NodeKind::Told,
            KnowledgeKind::Background => NodeKind::Background,
            KnowledgeKind::Inferred => NodeKind::Inferred,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeContent {
    Statement { text: String, predicate: Predicate },
    Rule { name: String, definition: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub kind: NodeKind,
    pub content: NodeContent,
}

impl Node {
    /// Statement text, or the rule name for rule nodes.
    pub fn label(&self) -> &str {
        match &self.content {
            NodeContent::Statement { text, .. } => text,
            NodeContent::Rule { name, .. } => name,
        }
    }

    pub fn predicate(&self) -> Option<&Predicate> {
        match &self.content {
            NodeContent::Statement { predicate, .. } => Some(predicate),
            NodeContent::Rule { .. } => None,
        }
    }

    pub fn rule(&self) -> Option<(&str, &str)> {
        match &self.content {
            NodeContent::Rule { name, definition } => Some((name, definition)),
            NodeContent::Statement { .. } => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("trace is not valid: {0}")]
    InvalidTrace(ValidationReport),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

/// Nodes keyed by id, a set of directed edges and a distinguished conclusion.
///
/// Graphs are compared structurally; two graphs are equal when they carry the
/// same nodes, edge set and conclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplanationGraph {
    nodes: BTreeMap<String, Node>,
    edges: BTreeSet<(String, String)>,
    conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphViolation {
    DanglingEdge(String, String),
    Cycle,
    MissingConclusion(String),
    ConclusionNotInferred(String),
    RuleWithoutPremise(String),
    RuleOutDegree(String, usize),
    RootWithParent(String),
    ConclusionUnreachable(String),
}

impl ExplanationGraph {
    pub fn new(
        nodes: BTreeMap<String, Node>,
        edges: BTreeSet<(String, String)>,
        conclusion: impl Into<String>,
    ) -> Self {
        ExplanationGraph {
            nodes,
            edges,
            conclusion: conclusion.into(),
        }
    }

    pub fn conclusion(&self) -> &str {
        &self.conclusion
    }

    pub fn conclusion_node(&self) -> &Node {
        &self.nodes[&self.conclusion]
    }

    pub fn nodes(&self) -> &BTreeMap<String, Node> {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.contains(&(from.to_string(), to.to_string()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.values().filter(|n| n.kind == kind).count()
    }

    pub fn ids_of(&self, kind: NodeKind) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(move |(_, n)| n.kind == kind)
            .map(|(id, _)| id.as_str())
    }

    pub fn parents(&self, id: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(_, to)| to == id)
            .map(|(from, _)| from.as_str())
            .collect()
    }

    pub fn children(&self, id: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(from, _)| from == id)
            .map(|(_, to)| to.as_str())
            .collect()
    }

    pub fn in_degree(&self, id: &str) -> usize {
        self.edges.iter().filter(|(_, to)| to == id).count()
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.edges.iter().filter(|(from, _)| from == id).count()
    }

    pub(crate) fn adjacency(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut adj: BTreeMap<&str, Vec<&str>> = self
            .nodes
            .keys()
            .map(|id| (id.as_str(), Vec::new()))
            .collect();
        for (from, to) in &self.edges {
            adj.entry(from.as_str()).or_default().push(to.as_str());
        }
        adj
    }

    /// Every node reachable from `from`, including `from` itself.
    pub fn descendants(&self, from: &str) -> BTreeSet<&str> {
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let Some((start, _)) = self.nodes.get_key_value(from) else {
            return seen;
        };
        let mut queue = VecDeque::from([start.as_str()]);
        seen.insert(start.as_str());
        while let Some(id) = queue.pop_front() {
            for &next in adj.get(id).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Deterministic topological order: among ready nodes, root causes come
    /// first, then the smallest id; the conclusion is held back until no
    /// other node is ready. Returns `None` for cyclic graphs.
    pub fn topological_order(&self) -> Option<Vec<&str>> {
        let mut indegree: BTreeMap<&str, usize> =
            self.nodes.keys().map(|id| (id.as_str(), 0)).collect();
        for (_, to) in &self.edges {
            *indegree.get_mut(to.as_str())? += 1;
        }
        let adj = self.adjacency();
        let key = |id: &str, root: bool| (id == self.conclusion, !root, id.to_string());
        let mut ready: BinaryHeap<Reverse<(bool, bool, String)>> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&id, _)| Reverse(key(id, true)))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse((_, _, id))) = ready.pop() {
            let (id, _) = self.nodes.get_key_value(id.as_str())?;
            order.push(id.as_str());
            for &next in adj.get(id.as_str()).into_iter().flatten() {
                let d = indegree.get_mut(next)?;
                *d -= 1;
                if *d == 0 {
                    ready.push(Reverse(key(next, false)));
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Structural invariants every explanation graph must satisfy.
    pub fn violations(&self) -> Vec<GraphViolation> {
        let mut out = Vec::new();
        for (from, to) in &self.edges {
            if !self.contains(from) || !self.contains(to) {
                out.push(GraphViolation::DanglingEdge(from.clone(), to.clone()));
            }
        }
        if !out.is_empty() {
            return out;
        }
        if !self.is_acyclic() {
            out.push(GraphViolation::Cycle);
        }
        match self.nodes.get(&self.conclusion) {
            None => out.push(GraphViolation::MissingConclusion(self.conclusion.clone())),
            Some(n) if n.kind != NodeKind::Inferred => out.push(
                GraphViolation::ConclusionNotInferred(self.conclusion.clone()),
            ),
            Some(_) => {}
        }
        for (id, node) in &self.nodes {
            match node.kind {
                NodeKind::Rule => {
                    if self.in_degree(id) == 0 {
                        out.push(GraphViolation::RuleWithoutPremise(id.clone()));
                    }
                    let outs = self.out_degree(id);
                    if outs != 1 {
                        out.push(GraphViolation::RuleOutDegree(id.clone(), outs));
                    }
                }
                NodeKind::Told | NodeKind::Background => {
                    if self.in_degree(id) > 0 {
                        out.push(GraphViolation::RootWithParent(id.clone()));
                    }
                }
                NodeKind::Inferred => {}
            }
        }
        if self.contains(&self.conclusion) && !conclusion_grounded(self) {
            out.push(GraphViolation::ConclusionUnreachable(
                self.conclusion.clone(),
            ));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    pub(crate) fn remove_node(&mut self, id: &str) -> Option<Node> {
        let node = self.nodes.remove(id)?;
        self.edges.retain(|(from, to)| from != id && to != id);
        Some(node)
    }

    pub(crate) fn add_edge(&mut self, from: &str, to: &str) {
        self.edges.insert((from.to_string(), to.to_string()));
    }
}

fn conclusion_grounded(g: &ExplanationGraph) -> bool {
    root_causes(g)
        .iter()
        .any(|root| g.descendants(root).contains(g.conclusion()))
}

/// One node per statement and per rule application; each rule application
/// contributes `premise -> rule` and `rule -> conclusion` edges. Told and
/// background knowledge reaches its inferred restatement through the
/// restatement rule node.
pub fn build_graph(trace: &ProofTrace) -> Result<ExplanationGraph, GraphError> {
    let report = validate_trace(trace);
    if !report.is_empty() {
        return Err(GraphError::InvalidTrace(report));
    }
    let mut nodes = BTreeMap::new();
    for s in &trace.statements {
        nodes.insert(
            s.id.clone(),
            Node {
                kind: s.kind.into(),
                content: NodeContent::Statement {
                    text: s.text.clone(),
                    predicate: s.predicate.clone(),
                },
            },
        );
    }
    let mut edges = BTreeSet::new();
    for r in &trace.rules {
        nodes.insert(
            r.id.clone(),
            Node {
                kind: NodeKind::Rule,
                content: NodeContent::Rule {
                    name: r.name.clone(),
                    definition: r.definition.clone(),
                },
            },
        );
        for p in &r.premises {
            edges.insert((p.clone(), r.id.clone()));
        }
        edges.insert((r.id.clone(), r.conclusion.clone()));
    }
    Ok(ExplanationGraph::new(
        nodes,
        edges,
        trace.conclusion.clone(),
    ))
}

/// Parentless told or background nodes.
///
/// Abstraction can leave an inferred node without parents (its only causes
/// were filtered out); such orphans are not root causes and are reported by
/// [`orphaned_inferred`] instead.
pub fn root_causes(g: &ExplanationGraph) -> BTreeSet<String> {
    let with_parent: BTreeSet<&str> = g.edges().iter().map(|(_, to)| to.as_str()).collect();
    g.nodes()
        .iter()
        .filter(|(id, n)| {
            !with_parent.contains(id.as_str())
                && matches!(n.kind, NodeKind::Told | NodeKind::Background)
        })
        .map(|(id, _)| id.clone())
        .collect()
}

pub fn orphaned_inferred(g: &ExplanationGraph) -> BTreeSet<String> {
    g.ids_of(NodeKind::Inferred)
        .filter(|id| g.in_degree(id) == 0)
        .map(str::to_string)
        .collect()
}

pub fn reaches(g: &ExplanationGraph, from: &str, to: &str) -> Result<bool, GraphError> {
    for id in [from, to] {
        if !g.contains(id) {
            return Err(GraphError::UnknownNode(id.to_string()));
        }
    }
    Ok(g.descendants(from).contains(to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{RuleApplication, Statement};

    fn stmt(id: &str, kind: KnowledgeKind, pred: &str) -> Statement {
        Statement {
            id: id.into(),
            text: format!("{id} holds."),
            predicate: Predicate::new(pred, ["x"]),
            kind,
        }
    }

    fn rule(id: &str, name: &str, premises: &[&str], conclusion: &str) -> RuleApplication {
        RuleApplication {
            id: id.into(),
            name: name.into(),
            definition: format!("definition of {name}"),
            premises: premises.iter().map(|p| p.to_string()).collect(),
            conclusion: conclusion.into(),
        }
    }

    fn restatement_trace() -> ProofTrace {
        ProofTrace {
            scenario: "restate".into(),
            domain: crate::trace::Domain::Other,
            conclusion: "I1".into(),
            statements: vec![
                stmt("T1", KnowledgeKind::Told, "p"),
                stmt("I1", KnowledgeKind::Inferred, "p"),
            ],
            rules: vec![rule("R1", "restatement", &["T1"], "I1")],
        }
    }

    #[test]
    fn restatement_graph_shape() {
        let g = build_graph(&restatement_trace()).unwrap();
        assert_eq!(g.node_count(), 3);
        let edges: Vec<_> = g.edges().iter().cloned().collect();
        assert_eq!(
            edges,
            vec![("R1".into(), "I1".into()), ("T1".into(), "R1".into())]
        );
        assert!(g.is_valid());
        assert_eq!(root_causes(&g), BTreeSet::from(["T1".to_string()]));
    }

    #[test]
    fn conjunction_graph_shape() {
        let trace = ProofTrace {
            scenario: "conj".into(),
            domain: crate::trace::Domain::Other,
            conclusion: "I3".into(),
            statements: vec![
                stmt("T1", KnowledgeKind::Told, "a"),
                stmt("T2", KnowledgeKind::Told, "b"),
                stmt("I1", KnowledgeKind::Inferred, "a"),
                stmt("I2", KnowledgeKind::Inferred, "b"),
                stmt("I3", KnowledgeKind::Inferred, "ab"),
            ],
            rules: vec![
                rule("R1", "restatement", &["T1"], "I1"),
                rule("R2", "restatement", &["T2"], "I2"),
                rule("R", "conjunction-introduction", &["I1", "I2"], "I3"),
            ],
        };
        let g = build_graph(&trace).unwrap();
        for (a, b) in [("I1", "R"), ("I2", "R"), ("R", "I3")] {
            assert!(g.has_edge(a, b), "{a}->{b}");
        }
        assert_eq!(g.in_degree("R"), 2);
        assert_eq!(g.out_degree("R"), 1);
    }

    #[test]
    fn invalid_trace_rejected() {
        let mut trace = restatement_trace();
        trace.rules[0].premises = vec!["S3".into()];
        assert!(matches!(
            build_graph(&trace),
            Err(GraphError::InvalidTrace(_))
        ));
    }

    #[test]
    fn reaches_basics() {
        let g = build_graph(&restatement_trace()).unwrap();
        assert!(reaches(&g, "T1", "T1").unwrap());
        assert!(reaches(&g, "T1", "I1").unwrap());
        assert!(!reaches(&g, "I1", "T1").unwrap());
        assert_eq!(
            reaches(&g, "T1", "nope"),
            Err(GraphError::UnknownNode("nope".into()))
        );
    }

    #[test]
    fn topological_order_puts_roots_first_and_conclusion_last() {
        let g = build_graph(&restatement_trace()).unwrap();
        assert_eq!(g.topological_order().unwrap(), vec!["T1", "R1", "I1"]);
    }

    #[test]
    fn told_fan_out_is_allowed() {
        let mut trace = restatement_trace();
        trace
            .statements
            .push(stmt("I2", KnowledgeKind::Inferred, "p"));
        trace.rules.push(rule("R2", "restatement", &["T1"], "I2"));
        let g = build_graph(&trace).unwrap();
        assert_eq!(g.children("T1"), vec!["R1", "R2"]);
        assert!(g.is_valid());
    }
}
