//! Participant ratings and their CSV form.
//!
//! Each Likert column holds both explanations' ratings for that question as
//! `exp1/exp2`, e.g. `5/6`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use super::StudyError;

pub const RATINGS_HEADER: &str = "participant,page,q1,q2,q3,q4,q5,more_info,feedback,justification";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoreInfo {
    Yes,
    No,
    /// "I don't know".
    Idk,
}

impl MoreInfo {
    pub fn as_str(self) -> &'static str {
        match self {
            MoreInfo::Yes => "yes",
            MoreInfo::No => "no",
            MoreInfo::Idk => "idk",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "yes" => Some(MoreInfo::Yes),
            "no" => Some(MoreInfo::No),
            "idk" => Some(MoreInfo::Idk),
            _ => None,
        }
    }
}

/// One participant's answers for one page. Likert values run from 1
/// (strongly disagree) through 4 (neither) to 7 (strongly agree).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingRecord {
    pub participant: String,
    pub page: String,
    /// Explanation 1 ratings for questions 1-5.
    pub exp1: [u8; 5],
    /// Explanation 2 ratings for questions 1-5.
    pub exp2: [u8; 5],
    pub more_info: MoreInfo,
    #[serde(default)]
    pub feedback: String,
    #[serde(default)]
    pub justification: String,
}

impl RatingRecord {
    pub fn validate(&self) -> Result<(), StudyError> {
        let invalid = |msg: String| Err(StudyError::InvalidRating(msg));
        if self.participant.trim().is_empty() {
            return invalid("participant id is empty".into());
        }
        if self.page.trim().is_empty() {
            return invalid("page id is empty".into());
        }
        for (label, values) in [("exp1", &self.exp1), ("exp2", &self.exp2)] {
            for (q, v) in values.iter().enumerate() {
                if !(1..=7).contains(v) {
                    return invalid(format!("{label} q{} = {v} is outside 1..7", q + 1));
                }
            }
        }
        Ok(())
    }

    /// One CSV row including the trailing newline, quoting free text as
    /// needed.
    pub fn to_csv_row(&self) -> String {
        let mut fields = vec![self.participant.clone(), self.page.clone()];
        fields.extend(
            self.exp1
                .iter()
                .zip(&self.exp2)
                .map(|(a, b)| format!("{a}/{b}")),
        );
        fields.push(self.more_info.as_str().to_string());
        fields.push(self.feedback.clone());
        fields.push(self.justification.clone());

        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        writer.write_record(&fields).expect("in-memory write");
        let bytes = writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("utf-8 fields")
    }
}

fn parse_pair(cell: &str, line: u64) -> Result<(u8, u8), StudyError> {
    let bad = || StudyError::Malformed(format!("line {line}: bad likert cell `{cell}`"));
    let (a, b) = cell.trim().split_once('/').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn read_ratings<R: Read>(reader: R) -> Result<Vec<RatingRecord>, StudyError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| StudyError::Malformed(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != RATINGS_HEADER {
        return Err(StudyError::Malformed(format!(
            "unexpected header `{header}`"
        )));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| StudyError::Malformed(e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let mut exp1 = [0u8; 5];
        let mut exp2 = [0u8; 5];
        for q in 0..5 {
            let (a, b) = parse_pair(&row[2 + q], line)?;
            exp1[q] = a;
            exp2[q] = b;
        }
        let record = RatingRecord {
            participant: row[0].to_string(),
            page: row[1].to_string(),
            exp1,
            exp2,
            more_info: MoreInfo::parse(&row[7]).ok_or_else(|| {
                StudyError::Malformed(format!("line {line}: bad more_info `{}`", &row[7]))
            })?,
            feedback: row[8].to_string(),
            justification: row[9].to_string(),
        };
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

/// Header plus one row per record.
pub fn write_ratings(records: &[RatingRecord]) -> String {
    let mut out = format!("{RATINGS_HEADER}\n");
    for r in records {
        out.push_str(&r.to_csv_row());
    }
    out
}
