//! Node simplicity: an explanation with fewer causes is simpler.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{ExplanationGraph, NodeKind};

/// Causes are told, background and inferred nodes; rule nodes are counted
/// separately.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityScore {
    pub cause_count: usize,
    pub rule_count: usize,
    pub by_kind: BTreeMap<NodeKind, usize>,
}

pub fn node_simplicity(g: &ExplanationGraph) -> ComplexityScore {
    let by_kind: BTreeMap<NodeKind, usize> = NodeKind::ALL
        .iter()
        .map(|&k| (k, g.count_kind(k)))
        .collect();
    let cause_count = by_kind
        .iter()
        .filter(|(k, _)| k.is_cause())
        .map(|(_, n)| n)
        .sum();
    ComplexityScore {
        cause_count,
        rule_count: by_kind[&NodeKind::Rule],
        by_kind,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abstraction {
    MoreAbstract,
    Equal,
    LessAbstract,
}

impl Abstraction {
    pub fn describe(self) -> &'static str {
        match self {
            Abstraction::MoreAbstract => "more abstract than",
            Abstraction::Equal => "as abstract as",
            Abstraction::LessAbstract => "less abstract than",
        }
    }
}

/// Orders `a` relative to `b`: fewer causes is more abstract, ties go to
/// fewer rule nodes.
pub fn compare_layers(a: &ExplanationGraph, b: &ExplanationGraph) -> Abstraction {
    let (sa, sb) = (node_simplicity(a), node_simplicity(b));
    match (sa.cause_count, sa.rule_count).cmp(&(sb.cause_count, sb.rule_count)) {
        Ordering::Less => Abstraction::MoreAbstract,
        Ordering::Equal => Abstraction::Equal,
        Ordering::Greater => Abstraction::LessAbstract,
    }
}
