//! Plain-text rendering of metric reports.

use std::fmt::Write;
use std::io::Write as _;
use std::path::Path;

use anyhow::Context;
use rumour_core::evaluation::{ConfusionMatrix, CvReport, MeanStd, MetricsReport};

use crate::config::RunConfig;

pub fn hash_line(cfg: &RunConfig) -> String {
    format!("config-hash: {}", cfg.hash())
}

pub fn mean_std(m: &MeanStd) -> String {
    format!("{:.4} ± {:.4}", m.mean, m.std)
}

fn per_class(out: &mut String, r: &MetricsReport, names: &[String]) {
    let width = names.iter().map(String::len).max().unwrap_or(5).max(5);
    let _ = writeln!(out, "  {:width$}  precision  recall     f1", "class");
    for (i, n) in names.iter().enumerate() {
        let _ = writeln!(out, "  {n:width$}  {:9.4}  {:6.4}  {:6.4}", r.precision[i], r.recall[i], r.f1[i]);
    }
}

fn confusion(out: &mut String, cm: &ConfusionMatrix, names: &[String]) {
    let short: Vec<String> = names.iter().map(|n| n.chars().take(4).collect()).collect();
    let _ = writeln!(out, "  confusion (rows actual, columns predicted)");
    let _ = writeln!(out, "  {:>6}{}", "", short.iter().map(|s| format!("{s:>7}")).collect::<String>());
    for (i, row) in cm.counts.iter().enumerate() {
        let _ = writeln!(out, "  {:>6}{}", short[i], row.iter().map(|c| format!("{c:>7}")).collect::<String>());
    }
}

pub fn metrics_text(r: &MetricsReport, names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "accuracy {:.4}", r.accuracy);
    let _ = writeln!(out, "macro F1 {:.4}", r.macro_f1);
    per_class(&mut out, r, names);
    confusion(&mut out, &r.confusion, names);
    out
}

pub fn cv_text(r: &CvReport, names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} folds", r.folds.len());
    let _ = writeln!(out, "accuracy {}", mean_std(&r.accuracy));
    let _ = writeln!(out, "macro F1 {}", mean_std(&r.macro_f1));
    let _ = writeln!(out, "pooled over folds:");
    per_class(&mut out, &r.pooled, names);
    confusion(&mut out, &r.pooled.confusion, names);
    out
}

/// Write `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, write: impl FnOnce(&mut dyn std::io::Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = std::io::BufWriter::new(f);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
