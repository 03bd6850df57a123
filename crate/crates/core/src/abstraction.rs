//! Simplifying rewrites over explanation graphs and the layered explanations
//! built from them.
//!
//! Three rewrites are available:
//!
//! * **FL** (flatten logic) removes conjunction-style logic rule nodes, wiring
//!   their premises straight to the conclusion, and collapses restatements:
//!   `T -> R(restatement) -> I` becomes `T` carrying `I`'s outgoing edges.
//! * **FR** (flatten rules) removes every rule node, wiring premises to the
//!   rule's conclusion.
//! * **FK** (filter knowledge) removes nodes selected by a [`FilterPolicy`]
//!   (background knowledge by default) and connects each removed node's
//!   parents to its children.
//!
//! All three only ever splice nodes out, so reachability between the nodes
//! that survive is unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{orphaned_inferred, root_causes, ExplanationGraph, NodeKind};
use crate::trace::{canonicalize, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AbstractionRule {
    #[serde(rename = "FL")]
    FlattenLogic,
    #[serde(rename = "FR")]
    FlattenRules,
    #[serde(rename = "FK")]
    FilterKnowledge,
}

impl AbstractionRule {
    pub fn code(self) -> &'static str {
        match self {
            AbstractionRule::FlattenLogic => "FL",
            AbstractionRule::FlattenRules => "FR",
            AbstractionRule::FilterKnowledge => "FK",
        }
    }
}

impl fmt::Display for AbstractionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for AbstractionRule {
    type Err = AbstractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FL" => Ok(AbstractionRule::FlattenLogic),
            "FR" => Ok(AbstractionRule::FlattenRules),
            "FK" => Ok(AbstractionRule::FilterKnowledge),
            _ => Err(AbstractionError::InvalidCombo(s.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AbstractionError {
    #[error("invalid rule combination `{0}`")]
    InvalidCombo(String),
    #[error("invalid layer chain: {0}")]
    InvalidChain(String),
}

use AbstractionRule::{FilterKnowledge as FK, FlattenLogic as FL, FlattenRules as FR};

/// An ordered rule combination naming one explanation layer.
///
/// Only the five combinations `[]`, `[FL]`, `[FL,FR]`, `[FL,FR,FK]` and
/// `[FL,FK]` can be constructed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<AbstractionRule>", into = "Vec<AbstractionRule>")]
pub struct RuleCombo(Vec<AbstractionRule>);

const VALID_COMBOS: [&[AbstractionRule]; 5] = [&[], &[FL], &[FL, FR], &[FL, FR, FK], &[FL, FK]];

impl RuleCombo {
    pub fn new(rules: Vec<AbstractionRule>) -> Result<Self, AbstractionError> {
        if VALID_COMBOS.contains(&rules.as_slice()) {
            Ok(RuleCombo(rules))
        } else {
            let codes: Vec<_> = rules.iter().map(|r| r.code()).collect();
            Err(AbstractionError::InvalidCombo(format!(
                "[{}]",
                codes.join(",")
            )))
        }
    }

    pub fn none() -> Self {
        RuleCombo(Vec::new())
    }

    pub fn fl() -> Self {
        RuleCombo(vec![FL])
    }

    pub fn fl_fr() -> Self {
        RuleCombo(vec![FL, FR])
    }

    pub fn fl_fr_fk() -> Self {
        RuleCombo(vec![FL, FR, FK])
    }

    pub fn fl_fk() -> Self {
        RuleCombo(vec![FL, FK])
    }

    /// All constructible combinations, most complex first.
    pub fn all() -> Vec<RuleCombo> {
        VALID_COMBOS.iter().map(|c| RuleCombo(c.to_vec())).collect()
    }

    pub fn rules(&self) -> &[AbstractionRule] {
        &self.0
    }

    pub fn contains(&self, rule: AbstractionRule) -> bool {
        self.0.contains(&rule)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `FL-FR` style label; the empty combination is `none`.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            "none".to_string()
        } else {
            self.0
                .iter()
                .map(|r| r.code())
                .collect::<Vec<_>>()
                .join("-")
        }
    }
}

impl TryFrom<Vec<AbstractionRule>> for RuleCombo {
    type Error = AbstractionError;

    fn try_from(rules: Vec<AbstractionRule>) -> Result<Self, Self::Error> {
        RuleCombo::new(rules)
    }
}

impl From<RuleCombo> for Vec<AbstractionRule> {
    fn from(combo: RuleCombo) -> Self {
        combo.0
    }
}

impl fmt::Display for RuleCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for RuleCombo {
    type Err = AbstractionError;

    /// Accepts `none`, `[]` or rule codes joined by `-`, e.g. `FL-FR`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() || t == "[]" || t.eq_ignore_ascii_case("none") {
            return Ok(RuleCombo::none());
        }
        let rules = t
            .trim_start_matches('[')
            .trim_end_matches(']')
            .split(['-', ','])
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| AbstractionError::InvalidCombo(s.to_string()))?;
        RuleCombo::new(rules).map_err(|_| AbstractionError::InvalidCombo(s.to_string()))
    }
}

/// Selects the nodes filter-knowledge removes. Told knowledge, rule nodes and
/// the conclusion are never removed, whatever the policy says.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterPolicy {
    pub kinds: BTreeSet<NodeKind>,
    /// Canonical predicate names marked as less relevant.
    pub predicates: BTreeSet<String>,
    pub ids: BTreeSet<String>,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            kinds: BTreeSet::from([NodeKind::Background]),
            predicates: BTreeSet::new(),
            ids: BTreeSet::new(),
        }
    }
}

impl FilterPolicy {
    pub fn nothing() -> Self {
        FilterPolicy {
            kinds: BTreeSet::new(),
            predicates: BTreeSet::new(),
            ids: BTreeSet::new(),
        }
    }

    pub fn with_predicate(mut self, name: &str) -> Self {
        self.predicates.insert(name.trim().to_lowercase());
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.ids.insert(id.into());
        self
    }

    fn selects(&self, g: &ExplanationGraph, id: &str) -> bool {
        let Some(node) = g.node(id) else {
            return false;
        };
        if matches!(node.kind, NodeKind::Told | NodeKind::Rule) {
            return false;
        }
        self.kinds.contains(&node.kind)
            || self.ids.contains(id)
            || node
                .predicate()
                .is_some_and(|p| self.predicates.contains(&canonicalize(p).name))
    }
}

/// A rule node dropped by a rewrite, kept for footnotes and expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovedRule {
    pub rule: String,
    pub name: String,
    pub definition: String,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteEvent {
    FlattenedLogic(RemovedRule),
    CollapsedRestatement {
        source: String,
        rule: String,
        restated: String,
    },
    FlattenedRule(RemovedRule),
    Filtered(String),
    /// The policy selected the conclusion; it was kept anyway.
    ConclusionRetained(String),
    /// A rule node lost all of its premises to filtering and was dropped.
    OrphanedRule(RemovedRule),
    /// An inferred node lost every parent to filtering.
    OrphanedInferred(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    pub graph: ExplanationGraph,
    pub events: Vec<RewriteEvent>,
}

impl Rewrite {
    /// Footnote candidates: rule nodes this rewrite flattened away.
    pub fn removed_rules(&self) -> Vec<&RemovedRule> {
        self.events
            .iter()
            .filter_map(|e| match e {
                RewriteEvent::FlattenedLogic(r) | RewriteEvent::FlattenedRule(r) => Some(r),
                _ => None,
            })
            .collect()
    }
}

/// Rewrite configuration: which rule names count as trivial logic for FL, and
/// what FK filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abstractor {
    pub logic_rules: BTreeSet<String>,
    pub filter: FilterPolicy,
}

impl Default for Abstractor {
    fn default() -> Self {
        Abstractor {
            logic_rules: BTreeSet::from([
                "conjunction-introduction".to_string(),
                "conjunction-elimination".to_string(),
            ]),
            filter: FilterPolicy::default(),
        }
    }
}

fn splice_rule(g: &mut ExplanationGraph, rule: &str) -> RemovedRule {
    let premises: Vec<String> = g.parents(rule).into_iter().map(str::to_string).collect();
    let conclusion = g
        .children(rule)
        .first()
        .map(|c| c.to_string())
        .unwrap_or_default();
    let node = g.remove_node(rule).expect("rule node present");
    let (name, definition) = node.rule().expect("rule node");
    let removed = RemovedRule {
        rule: rule.to_string(),
        name: name.to_string(),
        definition: definition.to_string(),
        conclusion: conclusion.clone(),
    };
    if !conclusion.is_empty() {
        for p in &premises {
            g.add_edge(p, &conclusion);
        }
    }
    removed
}

impl Abstractor {
    fn is_logic_rule(&self, name: &str) -> bool {
        let name = name.trim().to_lowercase();
        self.logic_rules
            .iter()
            .any(|r| r.trim().to_lowercase() == name)
    }

    pub fn flatten_logic(&self, g: &ExplanationGraph) -> Rewrite {
        let mut out = g.clone();
        let mut events = Vec::new();

        let logic: Vec<String> = out
            .ids_of(NodeKind::Rule)
            .filter(|id| {
                out.node(id)
                    .and_then(|n| n.rule())
                    .is_some_and(|(name, _)| self.is_logic_rule(name))
            })
            .map(str::to_string)
            .collect();
        for rule in logic {
            events.push(RewriteEvent::FlattenedLogic(splice_rule(&mut out, &rule)));
        }

        // Collapsing one restatement can expose another (a restatement of a
        // restatement), so run to a fixpoint.
        while let Some((source, rule, restated)) = find_restatement(&out) {
            let children: Vec<String> = out
                .children(&restated)
                .into_iter()
                .map(str::to_string)
                .collect();
            out.remove_node(&rule);
            out.remove_node(&restated);
            for c in &children {
                out.add_edge(&source, c);
            }
            events.push(RewriteEvent::CollapsedRestatement {
                source,
                rule,
                restated,
            });
        }

        Rewrite { graph: out, events }
    }

    pub fn flatten_rules(&self, g: &ExplanationGraph) -> Rewrite {
        let mut out = g.clone();
        let rules: Vec<String> = out.ids_of(NodeKind::Rule).map(str::to_string).collect();
        let events = rules
            .iter()
            .map(|r| RewriteEvent::FlattenedRule(splice_rule(&mut out, r)))
            .collect();
        Rewrite { graph: out, events }
    }

    pub fn filter_knowledge(&self, g: &ExplanationGraph) -> Rewrite {
        filter_with(g, &self.filter)
    }

    pub fn apply(&self, g: &ExplanationGraph, combo: &RuleCombo) -> ExplanationGraph {
        self.apply_traced(g, combo).graph
    }

    /// Applies the combination left to right, collecting every rewrite event.
    pub fn apply_traced(&self, g: &ExplanationGraph, combo: &RuleCombo) -> Rewrite {
        let mut acc = Rewrite {
            graph: g.clone(),
            events: Vec::new(),
        };
        for rule in combo.rules() {
            let step = match rule {
                FL => self.flatten_logic(&acc.graph),
                FR => self.flatten_rules(&acc.graph),
                FK => self.filter_knowledge(&acc.graph),
            };
            acc.graph = step.graph;
            acc.events.extend(step.events);
        }
        acc
    }

    /// One layer per combination, each computed from `g` directly.
    pub fn layers(
        &self,
        g: &ExplanationGraph,
        chain: &[RuleCombo],
    ) -> Result<LayeredExplanation, AbstractionError> {
        match chain.first() {
            None => return Err(AbstractionError::InvalidChain("empty chain".into())),
            Some(first) if !first.is_empty() => {
                return Err(AbstractionError::InvalidChain(format!(
                    "chain must start with the unabstracted layer, found {first}"
                )))
            }
            Some(_) => {}
        }
        let mut seen = BTreeSet::new();
        for combo in chain {
            if !seen.insert(combo) {
                return Err(AbstractionError::InvalidChain(format!(
                    "combination {combo} repeated"
                )));
            }
        }
        let layers = chain
            .iter()
            .map(|combo| Layer {
                combo: combo.clone(),
                graph: self.apply(g, combo),
            })
            .collect();
        Ok(LayeredExplanation {
            provenance: Provenance::default(),
            layers,
        })
    }
}

/// First restatement pattern in id order: told/background `T` feeding a
/// restatement rule whose single conclusion `I` has the same canonical
/// predicate, `I` has no other parent and is not the conclusion.
fn find_restatement(g: &ExplanationGraph) -> Option<(String, String, String)> {
    g.ids_of(NodeKind::Rule).find_map(|rule| {
        let node = g.node(rule)?;
        let (name, _) = node.rule()?;
        if !name.trim().eq_ignore_ascii_case(crate::trace::RESTATEMENT) {
            return None;
        }
        let [source] = g.parents(rule)[..] else {
            return None;
        };
        let [restated] = g.children(rule)[..] else {
            return None;
        };
        let source_node = g.node(source)?;
        let restated_node = g.node(restated)?;
        let shape_ok = matches!(source_node.kind, NodeKind::Told | NodeKind::Background)
            && restated_node.kind == NodeKind::Inferred
            && restated != g.conclusion()
            && g.in_degree(restated) == 1;
        let same =
            canonicalize(source_node.predicate()?) == canonicalize(restated_node.predicate()?);
        (shape_ok && same).then(|| (source.to_string(), rule.to_string(), restated.to_string()))
    })
}

fn filter_with(g: &ExplanationGraph, policy: &FilterPolicy) -> Rewrite {
    let mut out = g.clone();
    let mut events = Vec::new();
    let orphans_before = orphaned_inferred(g);

    let selected: Vec<String> = g
        .nodes()
        .keys()
        .filter(|id| policy.selects(g, id))
        .cloned()
        .collect();
    for id in selected {
        if id == g.conclusion() {
            events.push(RewriteEvent::ConclusionRetained(id));
            continue;
        }
        // A filtered inferred node takes the rule applications that produced
        // it along; their premises become the group's parents.
        let mut group = vec![id.clone()];
        group.extend(
            out.parents(&id)
                .into_iter()
                .filter(|p| out.node(p).is_some_and(|n| n.kind == NodeKind::Rule))
                .map(str::to_string),
        );
        let parents: BTreeSet<String> = group
            .iter()
            .flat_map(|m| out.parents(m))
            .filter(|p| !group.iter().any(|m| m == p))
            .map(str::to_string)
            .collect();
        let children: Vec<String> = out.children(&id).into_iter().map(str::to_string).collect();
        for member in &group {
            out.remove_node(member);
            events.push(RewriteEvent::Filtered(member.clone()));
        }
        for p in &parents {
            for c in &children {
                out.add_edge(p, c);
            }
        }
    }

    let stranded: Vec<String> = out
        .ids_of(NodeKind::Rule)
        .filter(|r| out.in_degree(r) == 0)
        .map(str::to_string)
        .collect();
    for rule in stranded {
        events.push(RewriteEvent::OrphanedRule(splice_rule(&mut out, &rule)));
    }
    for orphan in orphaned_inferred(&out).difference(&orphans_before) {
        events.push(RewriteEvent::OrphanedInferred(orphan.clone()));
    }

    Rewrite { graph: out, events }
}

pub fn flatten_logic(g: &ExplanationGraph) -> Rewrite {
    Abstractor::default().flatten_logic(g)
}

pub fn flatten_rules(g: &ExplanationGraph) -> Rewrite {
    Abstractor::default().flatten_rules(g)
}

pub fn filter_knowledge(g: &ExplanationGraph, policy: &FilterPolicy) -> Rewrite {
    filter_with(g, policy)
}

pub fn apply_combo(g: &ExplanationGraph, combo: &RuleCombo) -> ExplanationGraph {
    Abstractor::default().apply(g, combo)
}

pub fn generate_layers(
    g: &ExplanationGraph,
    chain: &[RuleCombo],
) -> Result<LayeredExplanation, AbstractionError> {
    Abstractor::default().layers(g, chain)
}

/// `default`: none, FL, FL-FR, FL-FR-FK.
pub fn default_chain() -> Vec<RuleCombo> {
    vec![
        RuleCombo::none(),
        RuleCombo::fl(),
        RuleCombo::fl_fr(),
        RuleCombo::fl_fr_fk(),
    ]
}

/// `nofr`: none, FL, FL-FK.
pub fn nofr_chain() -> Vec<RuleCombo> {
    vec![RuleCombo::none(), RuleCombo::fl(), RuleCombo::fl_fk()]
}

/// Resolves `default`, `nofr` or a comma-separated list such as
/// `none,FL,FL-FK`.
pub fn parse_chain(input: &str) -> Result<Vec<RuleCombo>, AbstractionError> {
    match input.trim() {
        "default" => Ok(default_chain()),
        "nofr" => Ok(nofr_chain()),
        list => list.split(',').map(str::parse).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub scenario: String,
    pub domain: Domain,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            scenario: String::new(),
            domain: Domain::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub combo: RuleCombo,
    pub graph: ExplanationGraph,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredExplanation {
    pub provenance: Provenance,
    pub layers: Vec<Layer>,
}

impl LayeredExplanation {
    pub fn with_provenance(mut self, scenario: impl Into<String>, domain: Domain) -> Self {
        self.provenance = Provenance {
            scenario: scenario.into(),
            domain,
        };
        self
    }

    pub fn conclusion(&self) -> &str {
        self.layers[0].graph.conclusion()
    }

    pub fn layer(&self, combo: &RuleCombo) -> Option<&Layer> {
        self.layers.iter().find(|l| &l.combo == combo)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PreservationReport {
    /// The conclusion is reachable from a root cause of the abstracted graph.
    pub conclusion_reachable: bool,
    /// Retained pairs connected in the abstracted graph but not the original.
    pub new_paths: Vec<(String, String)>,
    /// Retained pairs connected in the original graph but not the abstraction.
    pub lost_paths: Vec<(String, String)>,
    /// Inferred nodes left without parents; reported, not failures.
    pub orphaned_inferred: Vec<String>,
}

impl PreservationReport {
    pub fn passes(&self) -> bool {
        self.conclusion_reachable && self.new_paths.is_empty() && self.lost_paths.is_empty()
    }
}

/// Checks that `abstracted` still grounds the conclusion and that
/// reachability among retained non-rule nodes is exactly that of `original`.
pub fn preserves_conclusion(
    original: &ExplanationGraph,
    abstracted: &ExplanationGraph,
) -> PreservationReport {
    let conclusion = abstracted.conclusion();
    let conclusion_reachable = abstracted.contains(conclusion)
        && root_causes(abstracted)
            .iter()
            .any(|r| abstracted.descendants(r).contains(conclusion));

    let retained: Vec<&str> = abstracted
        .nodes()
        .iter()
        .filter(|(id, n)| n.kind.is_cause() && original.node(id).is_some_and(|o| o.kind.is_cause()))
        .map(|(id, _)| id.as_str())
        .collect();
    let before: BTreeMap<&str, BTreeSet<&str>> = retained
        .iter()
        .map(|&u| (u, original.descendants(u)))
        .collect();
    let after: BTreeMap<&str, BTreeSet<&str>> = retained
        .iter()
        .map(|&u| (u, abstracted.descendants(u)))
        .collect();

    let mut report = PreservationReport {
        conclusion_reachable,
        orphaned_inferred: orphaned_inferred(abstracted).into_iter().collect(),
        ..Default::default()
    };
    for &u in &retained {
        for &v in &retained {
            match (before[u].contains(v), after[u].contains(v)) {
                (false, true) => report.new_paths.push((u.to_string(), v.to_string())),
                (true, false) => report.lost_paths.push((u.to_string(), v.to_string())),
                _ => {}
            }
        }
    }
    report
}
