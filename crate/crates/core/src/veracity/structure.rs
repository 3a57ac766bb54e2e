//! Stance sequences from rumour submissions and their numeric encodings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Post, SequenceItem, SequenceRecord, Submission, VeracityLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureMode {
    /// One sequence per submission, every post in time order.
    Sas,
    /// One sequence per top-level conversation.
    Tcas,
    /// One sequence per branch.
    Bas,
}

impl FromStr for StructureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sas" => Ok(StructureMode::Sas),
            "tcas" => Ok(StructureMode::Tcas),
            "bas" => Ok(StructureMode::Bas),
            other => Err(Error::config(format!("unknown structure {other:?}; expected sas, tcas or bas"))),
        }
    }
}

impl fmt::Display for StructureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureMode::Sas => "sas",
            StructureMode::Tcas => "tcas",
            StructureMode::Bas => "bas",
        })
    }
}

/// How unverified rumours are labelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnverifiedMode {
    AsFalse,
    AsTrue,
    ThreeWay,
}

impl FromStr for UnverifiedMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "false" | "as_false" => Ok(UnverifiedMode::AsFalse),
            "true" | "as_true" => Ok(UnverifiedMode::AsTrue),
            "3way" | "three_way" | "threeway" => Ok(UnverifiedMode::ThreeWay),
            other => Err(Error::config(format!("unknown unverified mode {other:?}; expected false, true or 3way"))),
        }
    }
}

impl UnverifiedMode {
    pub fn map(self, label: VeracityLabel) -> VeracityLabel {
        match (self, label) {
            (UnverifiedMode::AsFalse, VeracityLabel::Unverified) => VeracityLabel::False,
            (UnverifiedMode::AsTrue, VeracityLabel::Unverified) => VeracityLabel::True,
            (_, l) => l,
        }
    }

    /// Labels after mapping; metric class `i` is `labels()[i]`.
    pub fn labels(self) -> Vec<VeracityLabel> {
        match self {
            UnverifiedMode::ThreeWay => VeracityLabel::ALL.to_vec(),
            _ => vec![VeracityLabel::True, VeracityLabel::False],
        }
    }

    pub fn class_index(self, label: VeracityLabel) -> usize {
        let l = self.map(label);
        self.labels().iter().position(|x| *x == l).expect("mapped label is listed")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Stance only.
    Lambda,
    /// Stance and normalised time.
    Omega,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lambda" | "λ" => Ok(Variant::Lambda),
            "omega" | "ω" => Ok(Variant::Omega),
            other => Err(Error::config(format!("unknown variant {other:?}; expected lambda or omega"))),
        }
    }
}

impl Variant {
    pub fn width(self) -> usize {
        match self {
            Variant::Lambda => 1,
            Variant::Omega => 2,
        }
    }
}

/// Scaling of the time column of ω observations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeNorm {
    /// Min-max within each sequence.
    #[default]
    PerSequence,
    /// `(t - origin) / span`, clamped to [0, 1]; e.g. one range for a whole dataset.
    Fixed { origin: f64, span: f64 },
}

impl TimeNorm {
    /// Fixed scaling over the time range of all `records`.
    pub fn dataset_range(records: &[SequenceRecord]) -> Self {
        let ts = records.iter().flat_map(|r| r.items.iter().map(|i| i.t));
        let (lo, hi) = ts.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t), b.max(t)));
        if lo.is_finite() {
            TimeNorm::Fixed { origin: lo, span: hi - lo }
        } else {
            TimeNorm::Fixed { origin: 0.0, span: 0.0 }
        }
    }
}

/// Observation rows for one sequence: `[stance]` or `[stance, time]`.
pub fn encode(record: &SequenceRecord, variant: Variant, time: TimeNorm) -> Vec<Vec<f64>> {
    let (origin, span) = match time {
        TimeNorm::PerSequence => {
            let lo = record.items.iter().map(|i| i.t).fold(f64::INFINITY, f64::min);
            let hi = record.items.iter().map(|i| i.t).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi - lo)
        }
        TimeNorm::Fixed { origin, span } => (origin, span),
    };
    record
        .items
        .iter()
        .map(|it| {
            let s = f64::from(it.stance.code());
            match variant {
                Variant::Lambda => vec![s],
                Variant::Omega => {
                    let t = if span > 0.0 { ((it.t - origin) / span).clamp(0.0, 1.0) } else { 0.0 };
                    vec![s, t]
                }
            }
        })
        .collect()
}

fn record(sub: &Submission, id: String, posts: Vec<&Post>) -> Option<SequenceRecord> {
    let veracity = sub.veracity?;
    if posts.is_empty() {
        return None;
    }
    let mut r = SequenceRecord {
        dataset_tag: "dast".into(),
        event: sub.event.clone(),
        rumour_id: id,
        veracity,
        items: posts
            .iter()
            .map(|p| SequenceItem { stance: p.sdqc_submission, t: p.created as f64 })
            .collect(),
    };
    r.sort_items();
    Some(r)
}

/// Stance sequences of the rumour submissions of `dataset` under `mode`.
pub fn to_sequences(dataset: &Dataset, mode: StructureMode) -> Vec<SequenceRecord> {
    let mut out = Vec::new();
    for sub in dataset.submissions.iter().filter(|s| s.is_rumour) {
        let unique = sub.unique_posts();
        match mode {
            StructureMode::Sas => {
                let posts = unique.iter().map(|&(b, p)| &sub.branches[b].posts[p]).collect();
                out.extend(record(sub, sub.submission_id.clone(), posts));
            }
            StructureMode::Tcas => {
                for root in sub.conversation_roots() {
                    let posts = unique
                        .iter()
                        .filter(|&&(b, _)| sub.branches[b].first().comment_id == root)
                        .map(|&(b, p)| &sub.branches[b].posts[p])
                        .collect();
                    out.extend(record(sub, format!("{}/{root}", sub.submission_id), posts));
                }
            }
            StructureMode::Bas => {
                for (b, branch) in sub.branches.iter().enumerate() {
                    let posts = branch.posts.iter().collect();
                    out.extend(record(sub, format!("{}/{b}", sub.submission_id), posts));
                }
            }
        }
    }
    out
}
