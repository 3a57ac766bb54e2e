//! Normalised cross-dataset sequence records (one rumour per JSONL line).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{StanceLabel, VeracityLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceItem {
    pub stance: StanceLabel,
    /// Seconds since the epoch; fractional values allowed.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    #[serde(rename = "dataset")]
    pub dataset_tag: String,
    pub event: String,
    pub rumour_id: String,
    pub veracity: VeracityLabel,
    pub items: Vec<SequenceItem>,
}

impl SequenceRecord {
    pub fn sort_items(&mut self) {
        self.items.sort_by(|a, b| a.t.total_cmp(&b.t));
    }
}

#[derive(Deserialize)]
struct RawItem {
    stance: i64,
    t: f64,
}

#[derive(Deserialize)]
struct RawRecord {
    dataset: String,
    event: String,
    rumour_id: String,
    veracity: VeracityLabel,
    items: Vec<RawItem>,
}

pub fn parse_sequences(text: &str, source: &str) -> Result<Vec<SequenceRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let line_err = |message: String| Error::Line {
            source_name: source.to_string(),
            line: line_no,
            message,
        };
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| line_err(e.to_string()))?;
        if raw.items.is_empty() {
            return Err(line_err("record has no items".into()));
        }
        let mut items = Vec::with_capacity(raw.items.len());
        for it in raw.items {
            let stance = u8::try_from(it.stance)
                .ok()
                .and_then(StanceLabel::from_code)
                .ok_or_else(|| line_err(format!("unknown stance code {}", it.stance)))?;
            if !it.t.is_finite() {
                return Err(line_err(format!("non-finite time {}", it.t)));
            }
            items.push(SequenceItem { stance, t: it.t });
        }
        let mut rec = SequenceRecord {
            dataset_tag: raw.dataset,
            event: raw.event,
            rumour_id: raw.rumour_id,
            veracity: raw.veracity,
            items,
        };
        rec.sort_items();
        out.push(rec);
    }
    Ok(out)
}

pub fn load_sequences(path: &Path) -> Result<Vec<SequenceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequences(&text, &path.display().to_string())
}

pub fn write_sequences<W: Write>(records: &[SequenceRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// Minimum items per rumour and rumours per event kept for cross-dataset experiments.
pub const PHEME_MIN_ITEMS: usize = 5;
pub const PHEME_MIN_RUMOURS: usize = 5;

/// Keep rumours with at least 5 items, from events that have at least 5 such rumours.
pub fn filter_pheme(records: &[SequenceRecord]) -> Vec<SequenceRecord> {
    let mut per_event: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.items.len() >= PHEME_MIN_ITEMS) {
        *per_event.entry(r.event.as_str()).or_default() += 1;
    }
    records
        .iter()
        .filter(|r| {
            r.items.len() >= PHEME_MIN_ITEMS
                && per_event.get(r.event.as_str()).copied().unwrap_or(0) >= PHEME_MIN_RUMOURS
        })
        .cloned()
        .collect()
}
