//! Pair types, study pages and constrained page assignment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::abstraction::{Abstractor, RuleCombo};
use crate::graph::build_graph;
use crate::render::{render_layer, RenderedExplanation, TemplateSet};
use crate::trace::ProofTrace;

/// Pages each participant sees.
pub const PAGES_PER_PARTICIPANT: usize = 6;

/// The five seven-point Likert items asked of each explanation.
pub const LIKERT_QUESTIONS: [&str; 5] = [
    "From the explanation, I understand why the prediction has been made.",
    "The explanation of why the prediction was made provides sufficient detail.",
    "The explanation of why the prediction was made is satisfying.",
    "The explanation of why the prediction was made is complete.",
    "The explanation of why the prediction was made is trustworthy.",
];

pub const FEEDBACK_QUESTION: &str = "Do you have any additional feedback regarding the ratings?";
pub const MORE_INFO_QUESTION: &str = "Explanation 2 contains information, not present in Explanation 1, that is helpful for understanding why the prediction was made.";
pub const JUSTIFICATION_QUESTION: &str = "Please justify your answer to the previous question.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PairSet {
    /// Both layers have FR applied.
    #[serde(rename = "Set1_FR")]
    Fr,
    /// Neither layer has FR applied.
    #[serde(rename = "Set2_NoFR")]
    NoFr,
    /// An FR layer against an FL-FK layer.
    #[serde(rename = "Set3_FRvsNoFR")]
    FrVsNoFr,
}

/// Explanation 1 (`left`, the more abstract layer) against Explanation 2
/// (`right`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairType {
    pub left: RuleCombo,
    pub right: RuleCombo,
    pub set: PairSet,
}

impl PairType {
    fn new(left: RuleCombo, right: RuleCombo, set: PairSet) -> Self {
        PairType { left, right, set }
    }

    /// Label as used in the analysis output, e.g. `FL-FR vs no abstraction`.
    pub fn label(&self) -> String {
        let side = |c: &RuleCombo| {
            if c.is_empty() {
                "no abstraction".to_string()
            } else {
                c.label()
            }
        };
        format!("{} vs {}", side(&self.left), side(&self.right))
    }

    /// True when `right`'s rules are a subset of `left`'s, so `left` is an
    /// abstraction of `right` and node simplicity must not rank it lower.
    pub fn is_nested(&self) -> bool {
        self.right.rules().iter().all(|r| self.left.contains(*r))
    }
}

impl fmt::Display for PairType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The nine distinct comparisons, in table order: five in the FR set, two in
/// the no-FR set, two in the FR vs no-FR set.
pub fn enumerate_pair_types() -> Vec<PairType> {
    use PairSet::*;
    let (none, fl, fl_fr, fl_fr_fk, fl_fk) = (
        RuleCombo::none(),
        RuleCombo::fl(),
        RuleCombo::fl_fr(),
        RuleCombo::fl_fr_fk(),
        RuleCombo::fl_fk(),
    );
    vec![
        PairType::new(fl.clone(), none.clone(), Fr),
        PairType::new(fl_fr.clone(), none.clone(), Fr),
        PairType::new(fl_fr.clone(), fl.clone(), Fr),
        PairType::new(fl_fr_fk.clone(), fl.clone(), Fr),
        PairType::new(fl_fr_fk.clone(), fl_fr.clone(), Fr),
        PairType::new(fl_fk.clone(), none, NoFr),
        PairType::new(fl_fk.clone(), fl, NoFr),
        PairType::new(fl_fr_fk, fl_fk.clone(), FrVsNoFr),
        PairType::new(fl_fr, fl_fk, FrVsNoFr),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Likert,
    YesNoDontKnow,
    FreeText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub key: String,
    pub text: String,
    pub kind: QuestionKind,
    pub required: bool,
}

/// Five Likert items, the more-information item, then the optional feedback
/// and compulsory justification prompts.
pub fn page_questions() -> Vec<Question> {
    let mut qs: Vec<Question> = LIKERT_QUESTIONS
        .iter()
        .enumerate()
        .map(|(i, text)| Question {
            key: format!("q{}", i + 1),
            text: text.to_string(),
            kind: QuestionKind::Likert,
            required: true,
        })
        .collect();
    qs.push(Question {
        key: "more_info".into(),
        text: MORE_INFO_QUESTION.into(),
        kind: QuestionKind::YesNoDontKnow,
        required: true,
    });
    qs.push(Question {
        key: "feedback".into(),
        text: FEEDBACK_QUESTION.into(),
        kind: QuestionKind::FreeText,
        required: false,
    });
    qs.push(Question {
        key: "justification".into(),
        text: JUSTIFICATION_QUESTION.into(),
        kind: QuestionKind::FreeText,
        required: true,
    });
    qs
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyPage {
    pub id: String,
    pub scenario: String,
    /// 1 for the first instance of a pair type, 2 for the second.
    pub group: u8,
    pub conclusion: String,
    pub pair: PairType,
    pub rendered_left: RenderedExplanation,
    pub rendered_right: RenderedExplanation,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub trace: ProofTrace,
    pub templates: TemplateSet,
}

/// Two pages per pair type, drawn from two different scenarios. Pair `j`
/// uses scenarios `2j` and `2j + 1` (modulo the scenario count), so 18
/// scenarios over the nine pair types use each scenario once.
pub fn build_pages(
    scenarios: &[Scenario],
    pairs: &[PairType],
) -> Result<Vec<StudyPage>, StudyError> {
    if scenarios.len() < 2 {
        return Err(StudyError::InsufficientScenarios(scenarios.len()));
    }
    let abstractor = Abstractor::default();
    let graphs = scenarios
        .iter()
        .map(|s| {
            build_graph(&s.trace).map_err(|e| StudyError::Scenario(s.id.clone(), e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut pages = Vec::with_capacity(pairs.len() * 2);
    for (j, pair) in pairs.iter().enumerate() {
        for group in 0..2 {
            let idx = (2 * j + group) % scenarios.len();
            let scenario = &scenarios[idx];
            let graph = &graphs[idx];
            let render = |combo: &RuleCombo| {
                render_layer(&abstractor.apply(graph, combo), &scenario.templates, combo)
                    .map_err(|e| StudyError::Scenario(scenario.id.clone(), e.to_string()))
            };
            pages.push(StudyPage {
                id: format!("page-{:02}", pages.len() + 1),
                scenario: scenario.id.clone(),
                group: group as u8 + 1,
                conclusion: graph.conclusion_node().label().to_string(),
                pair: pair.clone(),
                rendered_left: render(&pair.left)?,
                rendered_right: render(&pair.right)?,
                questions: page_questions(),
            });
        }
    }
    Ok(pages)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantPages {
    pub participant: String,
    /// Page ids in presentation order.
    pub pages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub seed: u64,
    pub pages_per_participant: usize,
    pub participants: Vec<ParticipantPages>,
}

impl Assignment {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("assignment serializes");
        out.push(b'\n');
        out
    }
}

/// Size of a maximum matching between scenarios and pair types where each
/// page is an edge. A participant's page set is exactly such a matching.
fn max_distinct_pages(pages: &[StudyPage]) -> usize {
    let mut adj: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for p in pages {
        adj.entry(p.scenario.as_str())
            .or_default()
            .insert(p.pair.label());
    }
    let mut owner: BTreeMap<String, &str> = BTreeMap::new();

    fn augment<'a>(
        scenario: &'a str,
        adj: &BTreeMap<&'a str, BTreeSet<String>>,
        owner: &mut BTreeMap<String, &'a str>,
        visited: &mut BTreeSet<String>,
    ) -> bool {
        for pair in &adj[scenario] {
            if !visited.insert(pair.clone()) {
                continue;
            }
            let free = match owner.get(pair) {
                None => true,
                Some(&other) => augment(other, adj, owner, visited),
            };
            if free {
                owner.insert(pair.clone(), scenario);
                return true;
            }
        }
        false
    }

    adj.keys()
        .filter(|&&s| augment(s, &adj, &mut owner, &mut BTreeSet::new()))
        .count()
}

fn pick(
    order: &[usize],
    pages: &[StudyPage],
    chosen: &mut Vec<usize>,
    scenarios: &mut BTreeSet<String>,
    pairs: &mut BTreeSet<String>,
) -> bool {
    if chosen.len() == PAGES_PER_PARTICIPANT {
        return true;
    }
    for (pos, &i) in order.iter().enumerate() {
        let page = &pages[i];
        let label = page.pair.label();
        if scenarios.contains(&page.scenario) || pairs.contains(&label) {
            continue;
        }
        scenarios.insert(page.scenario.clone());
        pairs.insert(label.clone());
        chosen.push(i);
        if pick(&order[pos + 1..], pages, chosen, scenarios, pairs) {
            return true;
        }
        chosen.pop();
        scenarios.remove(&page.scenario);
        pairs.remove(&label);
    }
    false
}

/// Gives every participant six pages with pairwise-distinct scenarios and
/// pairwise-distinct pair types, in a fixed presentation order. The same seed
/// always produces the same assignment.
pub fn assign_pages(
    pages: &[StudyPage],
    participant_count: usize,
    seed: u64,
) -> Result<Assignment, StudyError> {
    if participant_count == 0 {
        return Err(StudyError::InfeasibleAssignment(
            "participant count must be at least 1".into(),
        ));
    }
    let available = max_distinct_pages(pages);
    if available < PAGES_PER_PARTICIPANT {
        return Err(StudyError::InfeasibleAssignment(format!(
            "at most {available} pages with distinct scenarios and pair types, need {PAGES_PER_PARTICIPANT}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = participant_count.to_string().len().max(3);
    let mut participants = Vec::with_capacity(participant_count);
    for n in 1..=participant_count {
        let mut order: Vec<usize> = (0..pages.len()).collect();
        order.shuffle(&mut rng);
        let mut chosen = Vec::with_capacity(PAGES_PER_PARTICIPANT);
        let found = pick(
            &order,
            pages,
            &mut chosen,
            &mut BTreeSet::new(),
            &mut BTreeSet::new(),
        );
        debug_assert!(found, "matching bound guarantees a selection");
        participants.push(ParticipantPages {
            participant: format!("p{n:0width$}"),
            pages: chosen.iter().map(|&i| pages[i].id.clone()).collect(),
        });
    }
    Ok(Assignment {
        seed,
        pages_per_participant: PAGES_PER_PARTICIPANT,
        participants,
    })
}

/// Writes pages as a JSON array.
pub fn pages_to_json(pages: &[StudyPage]) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(pages).expect("pages serialize");
    out.push(b'\n');
    out
}

pub fn pages_from_json(bytes: &[u8]) -> Result<Vec<StudyPage>, StudyError> {
    serde_json::from_slice(bytes).map_err(|e| StudyError::Malformed(e.to_string()))
}
