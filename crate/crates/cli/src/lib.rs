//! The `tracelens` command line and its HTTP service.
//!
//! [`run`] parses arguments, executes one command and returns the process
//! exit code: 0 on success, 1 on a domain error (invalid trace, infeasible
//! assignment, unreadable input, ...) and 2 on a usage error.

mod commands;
pub mod serve;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tracelens::abstraction::{parse_chain, RuleCombo};

pub use commands::CommandError;

/// Environment variable naming an optional template-set file.
pub const TEMPLATES_ENV: &str = "TRACELENS_TEMPLATES";

#[derive(Debug, Parser)]
#[command(
    name = "tracelens",
    version,
    about = "Layered explanations of proof traces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a trace document and list every violated invariant.
    Validate {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Render the explanation layers of a trace.
    Explain(ExplainArgs),
    /// Render two layers of one trace side by side.
    Compare {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        left: RuleCombo,
        #[arg(long)]
        right: RuleCombo,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the study pages from a directory of scenario traces.
    Pages {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign study pages to participants.
    Assign {
        #[arg(long)]
        pages: PathBuf,
        #[arg(long)]
        participants: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-question Friedman analysis of collected ratings.
    Analyze {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        pages: PathBuf,
        #[arg(long, default_value_t = tracelens::study::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve exported explanations and study pages, and collect ratings.
    Serve(serve::ServeArgs),
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// `default`, `nofr`, or a comma-separated list such as `none,FL,FL-FK`.
    #[arg(long, default_value = "default", value_parser = parse_chain_arg)]
    pub chain: Chain,
    #[arg(long, conflicts_with = "json")]
    pub text: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The layer combinations named by `--chain`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain(pub Vec<RuleCombo>);

fn parse_chain_arg(s: &str) -> Result<Chain, String> {
    parse_chain(s).map(Chain).map_err(|e| e.to_string())
}

/// Runs one invocation and returns its exit code. Diagnostics go to stderr
/// as a single line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}
