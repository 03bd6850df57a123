//! Shared helpers for integration tests: fixture loading, a seeded random
//! trace generator and brute-force graph oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tracelens::graph::{ExplanationGraph, Node, NodeContent, NodeKind};
use tracelens::render::TemplateSet;
use tracelens::trace::{
    parse_trace, Domain, KnowledgeKind, Predicate, ProofTrace, RuleApplication, Statement,
};

/// `crates/core/fixtures`, reachable from any crate in the workspace.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .expect("crate inside crates/")
        .join("core/fixtures")
}

/// All fixture traces, sorted by file name.
pub fn fixtures() -> Vec<(String, ProofTrace)> {
    let mut paths: Vec<_> = std::fs::read_dir(fixtures_dir().join("scenarios"))
        .expect("fixture directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let bytes = std::fs::read(&p).unwrap();
            let trace = parse_trace(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, trace)
        })
        .collect()
}

pub fn fixture(name: &str) -> ProofTrace {
    let bytes = std::fs::read(
        fixtures_dir()
            .join("scenarios")
            .join(format!("{name}.json")),
    )
    .unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_trace(&bytes).unwrap()
}

pub fn templates() -> TemplateSet {
    TemplateSet::from_json(&std::fs::read(fixtures_dir().join("templates.json")).unwrap()).unwrap()
}

const RULE_NAMES: [&str; 4] = [
    "restatement",
    "conjunction-introduction",
    "conjunction-elimination",
    "modus-ponens",
];

/// A random well-formed trace whose graph has at most `max_nodes` nodes
/// (statements plus rule applications).
///
/// Rules only draw premises from earlier statements, so the derivation is
/// acyclic by construction. Every later rule also uses the most recent
/// inferred statement with high probability, which keeps most of the graph
/// connected to the conclusion.
pub fn random_trace(rng: &mut ChaCha8Rng, max_nodes: usize) -> ProofTrace {
    assert!(max_nodes >= 3);
    let mut statements: Vec<Statement> = Vec::new();
    let mut rules: Vec<RuleApplication> = Vec::new();

    let told = rng.random_range(1..=3usize);
    let background = rng.random_range(0..=3usize);
    for i in 0..told {
        statements.push(statement(rng, format!("T{i}"), KnowledgeKind::Told));
    }
    for i in 0..background {
        statements.push(statement(rng, format!("B{i}"), KnowledgeKind::Background));
    }
    // Each rule adds two nodes; always leave room for at least one.
    let budget = max_nodes.saturating_sub(statements.len()) / 2;
    let rule_count = rng.random_range(1..=budget.max(1));

    let mut last_inferred: Option<usize> = None;
    for r in 0..rule_count {
        let name = *RULE_NAMES.choose(rng).unwrap();
        let mut premises: Vec<usize> = Vec::new();
        match last_inferred {
            Some(i) if rng.random_bool(0.85) => premises.push(i),
            _ => premises.push(rng.random_range(0..told)),
        }
        if name != "restatement" {
            for _ in 0..rng.random_range(0..=2usize) {
                let p = rng.random_range(0..statements.len());
                if !premises.contains(&p) {
                    premises.push(p);
                }
            }
        }
        let id = format!("I{r}");
        let predicate = if name == "restatement" && rng.random_bool(0.8) {
            // Mostly faithful restatements, with case and spacing noise.
            let src = &statements[premises[0]].predicate;
            Predicate::new(
                src.name.to_uppercase(),
                src.args.iter().map(|a| format!(" {a}")),
            )
        } else {
            random_predicate(rng)
        };
        statements.push(Statement {
            id: id.clone(),
            text: format!("Statement {id}."),
            predicate,
            kind: KnowledgeKind::Inferred,
        });
        rules.push(RuleApplication {
            id: format!("R{r}"),
            name: name.to_string(),
            definition: format!("Definition of {name}."),
            premises: premises.iter().map(|&p| statements[p].id.clone()).collect(),
            conclusion: id,
        });
        last_inferred = Some(statements.len() - 1);
    }

    ProofTrace {
        scenario: "random".into(),
        domain: Domain::Other,
        conclusion: statements[last_inferred.unwrap()].id.clone(),
        statements,
        rules,
    }
}

fn statement(rng: &mut ChaCha8Rng, id: String, kind: KnowledgeKind) -> Statement {
    Statement {
        text: format!("Statement {id}."),
        id,
        predicate: random_predicate(rng),
        kind,
    }
}

fn random_predicate(rng: &mut ChaCha8Rng) -> Predicate {
    let names = ["at", "near", "above", "severe", "risk"];
    let args = ["a", "b", "c"];
    let arity = rng.random_range(0..=2usize);
    Predicate::new(
        *names.choose(rng).unwrap(),
        (0..arity).map(|_| *args.choose(rng).unwrap()),
    )
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Transitive closure by Floyd-Warshall over the node ids of `g`.
#[allow(clippy::needless_range_loop)]
pub fn closure(g: &ExplanationGraph) -> BTreeMap<(String, String), bool> {
    let ids: Vec<&String> = g.nodes().keys().collect();
    let n = ids.len();
    let index: BTreeMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for (a, b) in g.edges() {
        reach[index[a.as_str()]][index[b.as_str()]] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            out.insert((ids[i].clone(), ids[j].clone()), reach[i][j]);
        }
    }
    out
}

/// Ids of non-rule nodes.
pub fn causes(g: &ExplanationGraph) -> Vec<String> {
    g.nodes()
        .iter()
        .filter(|(_, n)| n.kind != NodeKind::Rule)
        .map(|(id, _)| id.clone())
        .collect()
}

/// Recursive three-colour DFS; true when a cycle exists.
pub fn has_cycle(adj: &BTreeMap<String, Vec<String>>) -> bool {
    fn visit(
        v: &str,
        adj: &BTreeMap<String, Vec<String>>,
        colour: &mut BTreeMap<String, u8>,
    ) -> bool {
        colour.insert(v.to_string(), 1);
        for w in adj.get(v).into_iter().flatten() {
            match colour.get(w.as_str()).copied().unwrap_or(0) {
                1 => return true,
                0 if visit(w, adj, colour) => return true,
                _ => {}
            }
        }
        colour.insert(v.to_string(), 2);
        false
    }
    let mut colour = BTreeMap::new();
    adj.keys()
        .any(|v| colour.get(v.as_str()).copied().unwrap_or(0) == 0 && visit(v, adj, &mut colour))
}

/// Builds a graph from `(id, kind)` nodes and `a>b` edges. Statement
/// predicates are `p(id)` unless a restated source is named with `=`, as in
/// `I1=T1`, which gives `I1` the same predicate as `T1`.
pub fn graph(nodes: &[(&str, NodeKind)], edges: &[&str], conclusion: &str) -> ExplanationGraph {
    let mut map = BTreeMap::new();
    for &(entry, kind) in nodes {
        let (id, pred_of) = entry.split_once('=').unwrap_or((entry, entry));
        let content = match kind {
            NodeKind::Rule => NodeContent::Rule {
                name: rule_name(id).to_string(),
                definition: format!("{} definition", rule_name(id)),
            },
            _ => NodeContent::Statement {
                text: format!("{id} holds."),
                predicate: Predicate::new("p", [pred_of]),
            },
        };
        map.insert(id.to_string(), Node { kind, content });
    }
    let edges = edges
        .iter()
        .map(|e| {
            let (a, b) = e.split_once('>').unwrap();
            (a.to_string(), b.to_string())
        })
        .collect();
    ExplanationGraph::new(map, edges, conclusion)
}

/// Rule ids encode their rule name: `C*` conjunction-introduction,
/// `E*` conjunction-elimination, `S*` restatement, anything else modus-ponens.
fn rule_name(id: &str) -> &'static str {
    match id.as_bytes()[0] {
        b'C' => "conjunction-introduction",
        b'E' => "conjunction-elimination",
        b'S' => "restatement",
        _ => "modus-ponens",
    }
}

pub fn edge_set(edges: &[&str]) -> BTreeSet<(String, String)> {
    edges
        .iter()
        .map(|e| {
            let (a, b) = e.split_once('>').unwrap();
            (a.to_string(), b.to_string())
        })
        .collect()
}
