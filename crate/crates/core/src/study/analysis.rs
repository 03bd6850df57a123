//! Per-question comparison of Explanation 1 and Explanation 2 ratings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::design::{enumerate_pair_types, StudyPage, LIKERT_QUESTIONS};
use super::ratings::RatingRecord;
use super::stats::{friedman_test, kendalls_w};
use super::StudyError;

pub const DEFAULT_ALPHA: f64 = 0.1;

pub const ANALYSIS_HEADER: &str = "pair,question_number,question_text,avg_exp1,sd_exp1,avg_exp2,sd_exp2,p,chi_squared,kendalls_w,significant_at_alpha";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub pair: String,
    pub question_number: usize,
    pub question_text: String,
    pub avg_exp1: f64,
    pub sd_exp1: f64,
    pub avg_exp2: f64,
    pub sd_exp2: f64,
    pub p: f64,
    pub chi_squared: f64,
    pub kendalls_w: f64,
    pub significant: bool,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per (pair type, question) for every pair type that has pages,
/// in table order. Ratings of both pages of a pair type are pooled.
pub fn analyze(
    pages: &[StudyPage],
    ratings: &[RatingRecord],
    alpha: f64,
) -> Result<Vec<AnalysisRow>, StudyError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StudyError::InvalidRating(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let page_pair: BTreeMap<&str, String> = pages
        .iter()
        .map(|p| (p.id.as_str(), p.pair.label()))
        .collect();

    // pair label -> question -> (exp1, exp2) samples
    let mut cells: BTreeMap<String, [Vec<(u8, u8)>; 5]> = BTreeMap::new();
    for r in ratings {
        r.validate()?;
        let label = page_pair
            .get(r.page.as_str())
            .ok_or_else(|| StudyError::UnknownPage(r.page.clone()))?;
        let cell = cells.entry(label.clone()).or_default();
        for (q, samples) in cell.iter_mut().enumerate() {
            samples.push((r.exp1[q], r.exp2[q]));
        }
    }

    let mut rows = Vec::new();
    for pair in enumerate_pair_types() {
        let label = pair.label();
        if !page_pair.values().any(|l| *l == label) {
            continue;
        }
        let samples = cells.get(&label).cloned().unwrap_or_default();
        for (q, mut cell) in samples.into_iter().enumerate() {
            if cell.len() < 2 {
                return Err(StudyError::EmptyCell {
                    pair: label.clone(),
                    question: q + 1,
                    raters: cell.len(),
                });
            }
            // input order must not leak into floating-point sums
            cell.sort_unstable();
            let matrix: Vec<[f64; 2]> = cell.iter().map(|&(a, b)| [a as f64, b as f64]).collect();
            let exp1: Vec<f64> = matrix.iter().map(|m| m[0]).collect();
            let exp2: Vec<f64> = matrix.iter().map(|m| m[1]).collect();
            let (avg_exp1, sd_exp1) = mean_sd(&exp1);
            let (avg_exp2, sd_exp2) = mean_sd(&exp2);
            let (chi_squared, p) = friedman_test(&matrix)?;
            let w = kendalls_w(&matrix)?;
            rows.push(AnalysisRow {
                pair: label.clone(),
                question_number: q + 1,
                question_text: LIKERT_QUESTIONS[q].to_string(),
                avg_exp1,
                sd_exp1,
                avg_exp2,
                sd_exp2,
                p,
                chi_squared,
                kendalls_w: w,
                significant: p < alpha,
            });
        }
    }
    Ok(rows)
}

fn quote(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn analysis_csv(rows: &[AnalysisRow]) -> String {
    let mut out = format!("{ANALYSIS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.6},{:.6},{:.6},{}",
            quote(&r.pair),
            r.question_number,
            quote(&r.question_text),
            r.avg_exp1,
            r.sd_exp1,
            r.avg_exp2,
            r.sd_exp2,
            r.p,
            r.chi_squared,
            r.kendalls_w,
            r.significant
        );
    }
    out
}
