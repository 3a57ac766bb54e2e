//! One HMM per veracity label, with the state count picked by inner cross-validation,
//! and the stance-distribution (VB) baseline.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hmm::{baum_welch, EmConfig, GaussianHmm};
use super::structure::{encode, TimeNorm, UnverifiedMode, Variant};
use crate::corpus::{SequenceRecord, StanceLabel, VeracityLabel};
use crate::error::{Error, Result};
use crate::evaluation::{complement, stratified_kfold, ConfusionMatrix};

pub const HMM_FORMAT_VERSION: u32 = 1;

/// Pick the label with the highest score; ties go to False, then True, then Unverified.
pub fn argmax_label(scores: &[(VeracityLabel, f64)]) -> VeracityLabel {
    let mut sorted: Vec<&(VeracityLabel, f64)> = scores.iter().collect();
    sorted.sort_by_key(|(l, _)| l.precedence());
    let mut best = sorted[0];
    for s in &sorted[1..] {
        if s.1 > best.1 {
            best = s;
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmmOptions {
    pub variant: Variant,
    pub time_norm: TimeNorm,
    pub unverified: UnverifiedMode,
    /// Candidate state counts.
    pub n_range: Vec<usize>,
    pub inner_k: usize,
    pub em: EmConfig,
}

impl Default for HmmOptions {
    fn default() -> Self {
        HmmOptions {
            variant: Variant::Lambda,
            time_norm: TimeNorm::PerSequence,
            unverified: UnverifiedMode::AsFalse,
            n_range: (1..=15).collect(),
            inner_k: 3,
            em: EmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmClassifier {
    pub format_version: u32,
    pub n_states: usize,
    pub variant: Variant,
    pub time_norm: TimeNorm,
    pub unverified: UnverifiedMode,
    pub models: Vec<(VeracityLabel, GaussianHmm)>,
    /// Inner-CV macro F1 for each tried state count.
    pub search: Vec<(usize, f64)>,
}

fn group(
    records: &[&SequenceRecord],
    opts: &HmmOptions,
) -> Vec<(VeracityLabel, Vec<Vec<Vec<f64>>>)> {
    opts.unverified
        .labels()
        .into_iter()
        .map(|l| {
            let seqs = records
                .iter()
                .filter(|r| opts.unverified.map(r.veracity) == l)
                .map(|r| encode(r, opts.variant, opts.time_norm))
                .collect();
            (l, seqs)
        })
        .collect()
}

fn fit_fixed(records: &[&SequenceRecord], n: usize, opts: &HmmOptions) -> Result<Vec<(VeracityLabel, GaussianHmm)>> {
    group(records, opts)
        .into_par_iter()
        .map(|(l, seqs)| {
            if seqs.is_empty() {
                return Err(Error::invalid(format!("no training sequences for label {l}")));
            }
            Ok((l, baum_welch(&seqs, n, &opts.em)?.0))
        })
        .collect()
}

fn min_observations(records: &[&SequenceRecord], opts: &HmmOptions) -> usize {
    group(records, opts)
        .iter()
        .map(|(_, s)| s.iter().map(Vec::len).sum::<usize>())
        .min()
        .unwrap_or(0)
}

impl HmmClassifier {
    /// Train one HMM per label. With several candidate state counts, the count with the best
    /// inner k-fold macro F1 on `train` wins (ties to the smallest).
    pub fn fit(train: &[SequenceRecord], opts: &HmmOptions) -> Result<Self> {
        let refs: Vec<&SequenceRecord> = train.iter().collect();
        for (l, seqs) in group(&refs, opts) {
            if seqs.is_empty() {
                return Err(Error::invalid(format!("no training sequences for label {l}")));
            }
        }
        let mut candidates: Vec<usize> = opts.n_range.clone();
        candidates.sort_unstable();
        candidates.dedup();
        let max_n = min_observations(&refs, opts);
        candidates.retain(|&n| n >= 1 && n <= max_n);
        if candidates.is_empty() {
            return Err(Error::config(format!("no usable state count in {:?}", opts.n_range)));
        }
        let mut search = Vec::new();
        let n_states = if candidates.len() == 1 {
            candidates[0]
        } else {
            let labels: Vec<usize> = train.iter().map(|r| opts.unverified.class_index(r.veracity)).collect();
            let smallest = (0..opts.unverified.labels().len())
                .map(|c| labels.iter().filter(|&&l| l == c).count())
                .min()
                .unwrap_or(0);
            let k = opts.inner_k.min(smallest);
            if k < 2 {
                candidates[0]
            } else {
                let folds = stratified_kfold(&labels, k, opts.em.seed)?;
                search = candidates
                    .par_iter()
                    .map(|&n| inner_score(train, &folds, n, opts).map(|s| s.map(|s| (n, s))))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .flatten()
                    .collect();
                let mut best: Option<(usize, f64)> = None;
                for &(n, s) in &search {
                    if best.is_none_or(|b| s > b.1) {
                        best = Some((n, s));
                    }
                }
                best.map_or(candidates[0], |b| b.0)
            }
        };
        Ok(HmmClassifier {
            format_version: HMM_FORMAT_VERSION,
            n_states,
            variant: opts.variant,
            time_norm: opts.time_norm,
            unverified: opts.unverified,
            models: fit_fixed(&refs, n_states, opts)?,
            search,
        })
    }

    pub fn width(&self) -> usize {
        self.variant.width()
    }

    /// Per-label log-likelihoods of an encoded sequence.
    pub fn scores(&self, obs: &[Vec<f64>]) -> Result<Vec<(VeracityLabel, f64)>> {
        self.models.iter().map(|(l, m)| Ok((*l, m.log_likelihood(obs)?))).collect()
    }

    pub fn predict_encoded(&self, obs: &[Vec<f64>]) -> Result<VeracityLabel> {
        Ok(argmax_label(&self.scores(obs)?))
    }

    pub fn predict(&self, record: &SequenceRecord) -> Result<VeracityLabel> {
        self.predict_encoded(&encode(record, self.variant, self.time_norm))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: HmmClassifier = serde_json::from_str(s)?;
        if c.format_version != HMM_FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported HMM format version {}", c.format_version)));
        }
        for (_, m) in &c.models {
            m.validate()?;
            if m.n_states() != c.n_states || m.width() != c.width() {
                return Err(Error::invalid("member models disagree on state count or width"));
            }
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Inner CV macro F1 for `n` states; `None` if some fold cannot support `n` states.
fn inner_score(train: &[SequenceRecord], folds: &[Vec<usize>], n: usize, opts: &HmmOptions) -> Result<Option<f64>> {
    let n_classes = opts.unverified.labels().len();
    let mut scores = Vec::new();
    for test in folds {
        let tr_idx = complement(train.len(), test);
        let tr: Vec<&SequenceRecord> = tr_idx.iter().map(|&i| &train[i]).collect();
        if min_observations(&tr, opts) < n {
            return Ok(None);
        }
        let models = fit_fixed(&tr, n, opts)?;
        let clf = HmmClassifier {
            format_version: HMM_FORMAT_VERSION,
            n_states: n,
            variant: opts.variant,
            time_norm: opts.time_norm,
            unverified: opts.unverified,
            models,
            search: Vec::new(),
        };
        let mut fold_cm = ConfusionMatrix::new(n_classes);
        for &i in test {
            let pred = clf.predict(&train[i])?;
            fold_cm.counts[opts.unverified.class_index(train[i].veracity)][opts.unverified.class_index(pred)] += 1;
        }
        scores.push(fold_cm.macro_f1());
    }
    Ok(Some(scores.iter().sum::<f64>() / scores.len() as f64))
}

/// Share of each stance in a sequence.
pub fn stance_distribution(record: &SequenceRecord) -> [f64; 4] {
    let mut d = [0.0; 4];
    for it in &record.items {
        d[it.stance.index()] += 1.0;
    }
    let n = record.items.len().max(1) as f64;
    d.map(|x| x / n)
}

/// Mean stance distribution per label; predicts the label with the nearest mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VbBaseline {
    pub unverified: UnverifiedMode,
    pub means: Vec<(VeracityLabel, [f64; 4])>,
}

impl VbBaseline {
    pub fn fit(train: &[SequenceRecord], unverified: UnverifiedMode) -> Result<Self> {
        let means = unverified
            .labels()
            .into_iter()
            .map(|l| {
                let ds: Vec<[f64; 4]> = train
                    .iter()
                    .filter(|r| unverified.map(r.veracity) == l)
                    .map(stance_distribution)
                    .collect();
                if ds.is_empty() {
                    return Err(Error::invalid(format!("no training sequences for label {l}")));
                }
                let mut m = [0.0; 4];
                for d in &ds {
                    m.iter_mut().zip(d).for_each(|(a, b)| *a += b);
                }
                Ok((l, m.map(|x| x / ds.len() as f64)))
            })
            .collect::<Result<_>>()?;
        Ok(VbBaseline { unverified, means })
    }

    pub fn predict(&self, record: &SequenceRecord) -> VeracityLabel {
        let d = stance_distribution(record);
        let scores: Vec<(VeracityLabel, f64)> = self
            .means
            .iter()
            .map(|(l, m)| (*l, -m.iter().zip(&d).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()))
            .collect();
        argmax_label(&scores)
    }
}

/// Stance labels of a sequence, for display.
pub fn stance_string(record: &SequenceRecord) -> String {
    record.items.iter().map(|i| StanceLabel::short(i.stance)).collect()
}
