//! Friedman rank test with tie correction and Kendall's coefficient of
//! concordance.
//!
//! Ratings are an `N x k` matrix: one row per subject (rater), one column per
//! condition. Each row is converted to mid-ranks, so tied values share the
//! average of the ranks they span.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Mid-ranks (1-based) of a single row.
pub fn mid_ranks(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

struct RankSummary {
    subjects: f64,
    conditions: f64,
    /// Column rank sums.
    rank_sums: Vec<f64>,
    /// Sum over rows and tie groups of `t^3 - t`.
    tie_term: f64,
}

fn summarize<R: AsRef<[f64]>>(ratings: &[R]) -> Result<RankSummary, StatsError> {
    let n = ratings.len();
    if n < 2 {
        return Err(StatsError::DegenerateInput(format!(
            "need at least 2 subjects, got {n}"
        )));
    }
    let k = ratings[0].as_ref().len();
    if k < 2 {
        return Err(StatsError::DegenerateInput(format!(
            "need at least 2 conditions, got {k}"
        )));
    }
    let mut rank_sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for (i, row) in ratings.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != k {
            return Err(StatsError::DegenerateInput(format!(
                "row {i} has {} values, expected {k}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::DegenerateInput(format!(
                "row {i} has a non-finite value"
            )));
        }
        let ranks = mid_ranks(row);
        for (sum, r) in rank_sums.iter_mut().zip(&ranks) {
            *sum += r;
        }
        let mut sorted = row.to_vec();
        sorted.sort_by(f64::total_cmp);
        for group in sorted.chunk_by(|a, b| a == b) {
            let t = group.len() as f64;
            tie_term += t * t * t - t;
        }
    }
    Ok(RankSummary {
        subjects: n as f64,
        conditions: k as f64,
        rank_sums,
        tie_term,
    })
}

impl RankSummary {
    /// Tie-corrected Friedman statistic.
    fn chi_squared(&self) -> f64 {
        let (n, k) = (self.subjects, self.conditions);
        let expected = n * (k + 1.0) / 2.0;
        let spread: f64 = self.rank_sums.iter().map(|r| (r - expected).powi(2)).sum();
        let denominator = n * k * (k + 1.0) - self.tie_term / (k - 1.0);
        if denominator <= 0.0 {
            // every row fully tied
            return 0.0;
        }
        (12.0 * spread / denominator).max(0.0)
    }
}

/// Returns `(chi_squared, p_value)` with `k - 1` degrees of freedom.
pub fn friedman_test<R: AsRef<[f64]>>(ratings: &[R]) -> Result<(f64, f64), StatsError> {
    let summary = summarize(ratings)?;
    let chi_squared = summary.chi_squared();
    let dist = ChiSquared::new(summary.conditions - 1.0).expect("positive degrees of freedom");
    let p = if chi_squared == 0.0 {
        1.0
    } else {
        dist.sf(chi_squared).clamp(0.0, 1.0)
    };
    Ok((chi_squared, p))
}

/// Kendall's W from the tie-corrected Friedman statistic, `chi2 / (N (k - 1))`.
pub fn kendalls_w<R: AsRef<[f64]>>(ratings: &[R]) -> Result<f64, StatsError> {
    let summary = summarize(ratings)?;
    let w = summary.chi_squared() / (summary.subjects * (summary.conditions - 1.0));
    Ok(w.clamp(0.0, 1.0))
}
