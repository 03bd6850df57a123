use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;
use tracelens::abstraction::{AbstractionError, Abstractor, RuleCombo};
use tracelens::complexity::compare_layers;
use tracelens::graph::{build_graph, GraphError};
use tracelens::render::{export_layers, export_text, render_layer, RenderError, TemplateSet};
use tracelens::study::{
    analysis_csv, analyze, assign_pages, build_pages, enumerate_pair_types, pages_from_json,
    pages_to_json, read_ratings, Scenario, StudyError,
};
use tracelens::trace::{parse_trace, validate_trace, ProofTrace, TraceError};
use tracelens::{explain_trace, ExplainError};

use crate::{serve, Command, ExplainArgs, TEMPLATES_ENV};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
    #[error("{path}: {count} violation(s): {report}")]
    Invalid {
        path: PathBuf,
        count: usize,
        report: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error("{0}")]
    Render(#[from] RenderError),
    #[error("templates: {0}")]
    Templates(String),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error("{0}")]
    Serve(String),
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>, CommandError> {
    std::fs::read(path).map_err(io_error(path))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CommandError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(io_error(path)),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(io_error(Path::new("<stdout>"))),
    }
}

fn load_trace(path: &Path) -> Result<ProofTrace, CommandError> {
    parse_trace(&read(path)?).map_err(|source| CommandError::Trace {
        path: path.to_path_buf(),
        source,
    })
}

/// The template set named by `TRACELENS_TEMPLATES`, or the built-in default.
pub(crate) fn load_templates() -> Result<TemplateSet, CommandError> {
    match std::env::var_os(TEMPLATES_ENV) {
        Some(path) if !path.is_empty() => {
            let path = PathBuf::from(path);
            TemplateSet::from_json(&read(&path)?)
                .map_err(|e| CommandError::Templates(format!("{}: {e}", path.display())))
        }
        _ => Ok(TemplateSet::default()),
    }
}

pub(crate) fn execute(command: Command) -> Result<(), CommandError> {
    match command {
        Command::Validate { trace } => validate(&trace),
        Command::Explain(args) => explain(&args),
        Command::Compare {
            trace,
            left,
            right,
            out,
        } => compare(&trace, &left, &right, out.as_deref()),
        Command::Pages { scenarios, out } => pages(&scenarios, out.as_deref()),
        Command::Assign {
            pages,
            participants,
            seed,
            out,
        } => {
            let pages = pages_from_json(&read(&pages)?)?;
            emit(
                out.as_deref(),
                &assign_pages(&pages, participants, seed)?.to_json(),
            )
        }
        Command::Analyze {
            ratings,
            pages,
            alpha,
            out,
        } => {
            let pages = pages_from_json(&read(&pages)?)?;
            let file = std::fs::File::open(&ratings).map_err(io_error(&ratings))?;
            let records = read_ratings(file)?;
            let rows = analyze(&pages, &records, alpha)?;
            emit(out.as_deref(), analysis_csv(&rows).as_bytes())
        }
        Command::Serve(args) => serve::run(args),
    }
}

fn validate(path: &Path) -> Result<(), CommandError> {
    // Syntax first, then every invariant at once rather than the first.
    let trace = ProofTrace::from_json(&read(path)?).map_err(|source| CommandError::Trace {
        path: path.to_path_buf(),
        source,
    })?;
    let report = validate_trace(&trace);
    if !report.is_empty() {
        return Err(CommandError::Invalid {
            path: path.to_path_buf(),
            count: report.violations.len(),
            report: report.to_string(),
        });
    }
    let line = format!(
        "ok: {} ({} statements, {} rules, conclusion {})\n",
        trace.scenario,
        trace.statements.len(),
        trace.rules.len(),
        trace.conclusion
    );
    emit(None, line.as_bytes())
}

fn explain(args: &ExplainArgs) -> Result<(), CommandError> {
    let trace = load_trace(&args.trace)?;
    let templates = load_templates()?;
    let layered = explain_trace(&trace, &args.chain.0)?;
    let bytes = if args.text {
        export_text(&layered, &templates)?.into_bytes()
    } else {
        export_layers(&layered, &templates)?
    };
    emit(args.out.as_deref(), &bytes)
}

fn compare(
    path: &Path,
    left: &RuleCombo,
    right: &RuleCombo,
    out: Option<&Path>,
) -> Result<(), CommandError> {
    let trace = load_trace(path)?;
    let templates = load_templates()?;
    let graph = build_graph(&trace)?;
    let abstractor = Abstractor::default();
    let (lg, rg) = (
        abstractor.apply(&graph, left),
        abstractor.apply(&graph, right),
    );

    let mut text = format!("# Why: {}\n", graph.conclusion_node().label());
    for (n, combo, g) in [(1, left, &lg), (2, right, &rg)] {
        let r = render_layer(g, &templates, combo)?;
        text.push_str(&format!(
            "\n## Explanation {n} ({combo}; causes: {}, rules: {})\n\n{}",
            r.complexity.cause_count,
            r.complexity.rule_count,
            r.to_text()
        ));
    }
    text.push_str(&format!(
        "\nExplanation 1 ({left}) is {} Explanation 2 ({right}).\n",
        compare_layers(&lg, &rg).describe()
    ));
    emit(out, text.as_bytes())
}

fn pages(dir: &Path, out: Option<&Path>) -> Result<(), CommandError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_error(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let templates = load_templates()?;
    let scenarios = paths
        .iter()
        .map(|p| {
            Ok(Scenario {
                id: p
                    .file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
                trace: load_trace(p)?,
                templates: templates.clone(),
            })
        })
        .collect::<Result<Vec<_>, CommandError>>()?;
    let pages = build_pages(&scenarios, &enumerate_pair_types())?;
    emit(out, &pages_to_json(&pages))
}
