//! Converter from the PHEME rumour-scheme release to sequence records.
//!
//! Expected layout (the root may also be `threads/<lang>` itself):
//!
//! ```text
//! <root>/annotations/<lang>-scheme-annotations.json   one JSON object per line, '#' comments
//! <root>/threads/<lang>/<event>/<thread>/annotation.json
//! <root>/threads/<lang>/<event>/<thread>/source-tweets/<id>.json
//! <root>/threads/<lang>/<event>/<thread>/reactions/<id>.json
//! ```
//!
//! Stance of the source tweet comes from `support`, of replies from `responsetype-vs-source`.
//! Veracity comes from the thread's `annotation.json` (`true` = 1, else `misinformation` = 1, else unverified).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::DateTime;
use rumour_core::corpus::{write_sequences, SequenceItem, SequenceRecord, StanceLabel, VeracityLabel};
use serde_json::Value;

use crate::config::RunConfig;
use crate::report::{hash_line, write_output};

pub fn source_stance(s: &str) -> Option<StanceLabel> {
    match s {
        "supporting" => Some(StanceLabel::Supporting),
        "denying" => Some(StanceLabel::Denying),
        "underspecified" => Some(StanceLabel::Commenting),
        _ => None,
    }
}

pub fn reply_stance(s: &str) -> Option<StanceLabel> {
    match s {
        "agreed" => Some(StanceLabel::Supporting),
        "disagreed" => Some(StanceLabel::Denying),
        "appeal-for-more-information" => Some(StanceLabel::Querying),
        "comment" => Some(StanceLabel::Commenting),
        _ => None,
    }
}

/// Seconds since the epoch of a Twitter `created_at` string.
pub fn tweet_time(s: &str) -> Option<f64> {
    DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y").ok().map(|d| d.timestamp() as f64)
}

fn flag(v: &Value, key: &str) -> bool {
    match v.get(key) {
        Some(Value::String(s)) => s.trim() == "1",
        Some(Value::Number(n)) => n.as_i64() == Some(1),
        Some(Value::Bool(b)) => *b,
        _ => false,
    }
}

pub fn thread_veracity(annotation: &Value) -> VeracityLabel {
    if flag(annotation, "true") {
        VeracityLabel::True
    } else if flag(annotation, "misinformation") {
        VeracityLabel::False
    } else {
        VeracityLabel::Unverified
    }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

struct Layout {
    annotations: PathBuf,
    threads: PathBuf,
}

fn layout(root: &Path, lang: &str) -> anyhow::Result<Layout> {
    let annotations = root.join("annotations").join(format!("{lang}-scheme-annotations.json"));
    if !annotations.is_file() {
        anyhow::bail!("{} not found", annotations.display());
    }
    let threads = [root.join("threads").join(lang), root.join("threads")]
        .into_iter()
        .find(|p| p.is_dir())
        .unwrap_or_else(|| root.to_path_buf());
    Ok(Layout { annotations, threads })
}

/// Read every annotated thread under `root`.
pub fn convert_dir(root: &Path, lang: &str) -> anyhow::Result<Vec<SequenceRecord>> {
    let lay = layout(root, lang)?;
    let text = fs::read_to_string(&lay.annotations)?;
    let mut threads: BTreeMap<(String, String), Vec<SequenceItem>> = BTreeMap::new();
    let mut skipped = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Value = serde_json::from_str(line)
            .with_context(|| format!("{}: invalid JSON at line {}", lay.annotations.display(), i + 1))?;
        let field = |k: &str| v.get(k).and_then(Value::as_str).map(str::to_string);
        let (Some(event), Some(thread), Some(tweet)) = (field("event"), field("threadid"), field("tweetid")) else {
            anyhow::bail!("{}: line {} lacks event, threadid or tweetid", lay.annotations.display(), i + 1);
        };
        let is_source = tweet == thread;
        let stance = if is_source {
            field("support").as_deref().and_then(source_stance)
        } else {
            field("responsetype-vs-source").as_deref().and_then(reply_stance)
        };
        let Some(stance) = stance else {
            skipped += 1;
            continue;
        };
        let dir = lay.threads.join(&event).join(&thread);
        let file = dir.join(if is_source { "source-tweets" } else { "reactions" }).join(format!("{tweet}.json"));
        if !file.is_file() {
            skipped += 1;
            continue;
        }
        let tweet_json = read_json(&file)?;
        let t = tweet_json
            .get("created_at")
            .and_then(Value::as_str)
            .and_then(tweet_time)
            .with_context(|| format!("{}: missing or unparseable created_at", file.display()))?;
        threads.entry((event, thread)).or_default().push(SequenceItem { stance, t });
    }
    if skipped > 0 {
        log::warn!("{skipped} annotations without a usable stance or tweet file were skipped");
    }
    let mut out = Vec::new();
    for ((event, thread), items) in threads {
        let ann = lay.threads.join(&event).join(&thread).join("annotation.json");
        if !ann.is_file() {
            log::warn!("{event}/{thread}: no annotation.json, thread skipped");
            continue;
        }
        let mut r = SequenceRecord {
            dataset_tag: "pheme".into(),
            event,
            rumour_id: thread,
            veracity: thread_veracity(&read_json(&ann)?),
            items,
        };
        r.sort_items();
        out.push(r);
    }
    Ok(out)
}

pub fn convert(root: &Path, lang: &str, out: Option<&Path>, cfg: &RunConfig) -> anyhow::Result<()> {
    let records = convert_dir(root, lang)?;
    if records.is_empty() {
        anyhow::bail!("no annotated threads found under {}", root.display());
    }
    write_output(out, |w| Ok(write_sequences(&records, w)?))?;
    let items: usize = records.iter().map(|r| r.items.len()).sum();
    let summary = format!("{} threads, {} tweets", records.len(), items);
    if out.is_some() {
        println!("{summary}\n{}", hash_line(cfg));
    } else {
        eprintln!("{summary}\n{}", hash_line(cfg));
    }
    Ok(())
}
