//! Comparison-study harness: pages of paired explanation layers, page
//! assignment, ratings and their rank-based analysis.

mod analysis;
mod design;
mod ratings;
pub mod stats;

use thiserror::Error;

pub use analysis::{analysis_csv, analyze, AnalysisRow, ANALYSIS_HEADER, DEFAULT_ALPHA};
pub use design::{
    assign_pages, build_pages, enumerate_pair_types, page_questions, pages_from_json,
    pages_to_json, Assignment, PairSet, PairType, ParticipantPages, Question, QuestionKind,
    Scenario, StudyPage, FEEDBACK_QUESTION, JUSTIFICATION_QUESTION, LIKERT_QUESTIONS,
    MORE_INFO_QUESTION, PAGES_PER_PARTICIPANT,
};
pub use ratings::{read_ratings, write_ratings, MoreInfo, RatingRecord, RATINGS_HEADER};
pub use stats::{friedman_test, kendalls_w, StatsError};

#[derive(Debug, Error, PartialEq)]
pub enum StudyError {
    #[error("need at least 2 scenarios, got {0}")]
    InsufficientScenarios(usize),
    #[error("scenario `{0}`: {1}")]
    Scenario(String, String),
    #[error("infeasible assignment: {0}")]
    InfeasibleAssignment(String),
    #[error("unknown page `{0}`")]
    UnknownPage(String),
    #[error("pair `{pair}` question {question} has {raters} rater(s); need at least 2")]
    EmptyCell {
        pair: String,
        question: usize,
        raters: usize,
    },
    #[error("invalid rating: {0}")]
    InvalidRating(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
