//! Class-balance manipulation: dropping pure-commenting branches and synonym
//! super-sampling of supporting, denying and querying posts.

use std::collections::HashMap;
use std::io::Write;
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{train, TrainConfig};
use crate::corpus::{is_quote_line, preprocess, Dataset, Post, PostKey, StanceLabel, QUOTE_TAG, URL_RE, URL_TAG};
use crate::error::{Error, Result};
use crate::evaluation::{complement, stratified_kfold, CvReport, MetricsReport};
use crate::features::FeatureMatrix;
use crate::resources::SynonymDictionary;

pub const DEFAULT_REPLACE_FRACTION: f64 = 0.375;

static WORD_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\w+").unwrap());

/// Remove every branch whose posts are all commenting; submissions left without branches go too.
pub fn sub_sample(dataset: &Dataset) -> Dataset {
    let mut out = dataset.clone();
    for s in &mut out.submissions {
        s.branches
            .retain(|b| !b.posts.iter().all(|p| p.sdqc_submission == StanceLabel::Commenting));
    }
    out.submissions.retain(|s| !s.branches.is_empty());
    out
}

/// A text variant of an original post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPost {
    pub post: Post,
    pub synthetic_of: PostKey,
    /// Words substituted and the original token count.
    pub replaced: usize,
    pub token_count: usize,
}

/// Seed for one post, from the run seed and the post identity.
fn post_seed(seed: u64, key: &PostKey) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.submission_id.as_bytes());
    h.update([0]);
    h.update(key.comment_id.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Substitute every dictionary word of `raw` (outside quotes and URLs) with a random synonym.
/// Returns the new text and the number of substitutions.
pub fn replace_synonyms(raw: &str, synonyms: &SynonymDictionary, rng: &mut impl Rng) -> (String, usize) {
    let mut out = String::with_capacity(raw.len());
    let mut replaced = 0;
    for (i, line) in raw.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if is_quote_line(line) {
            out.push_str(line);
            continue;
        }
        let mut last = 0;
        let mut segments = Vec::new();
        for m in URL_RE.find_iter(line) {
            segments.push((last, m.start(), true));
            segments.push((m.start(), m.end(), false));
            last = m.end();
        }
        segments.push((last, line.len(), true));
        for (start, end, plain) in segments {
            let seg = &line[start..end];
            if !plain {
                out.push_str(seg);
                continue;
            }
            let mut pos = 0;
            for w in WORD_RE.find_iter(seg) {
                out.push_str(&seg[pos..w.start()]);
                let lower = w.as_str().to_lowercase();
                match synonyms.synonyms(&lower) {
                    Some(syns) if !syns.is_empty() && lower != URL_TAG && lower != QUOTE_TAG => {
                        out.push_str(&syns[rng.random_range(0..syns.len())]);
                        replaced += 1;
                    }
                    _ => out.push_str(w.as_str()),
                }
                pos = w.end();
            }
            out.push_str(&seg[pos..]);
        }
    }
    (out, replaced)
}

/// One synthetic variant per S/D/Q post whose substituted share of tokens reaches `replace_fraction`.
pub fn super_sample(
    posts: &[(PostKey, &Post)],
    synonyms: &SynonymDictionary,
    replace_fraction: f64,
    seed: u64,
) -> Vec<SyntheticPost> {
    if synonyms.is_empty() {
        log::warn!("synonym dictionary is empty; no super-sampling candidates");
        return Vec::new();
    }
    posts
        .par_iter()
        .filter(|(_, p)| p.sdqc_submission != StanceLabel::Commenting)
        .filter_map(|(key, p)| {
            let token_count = p.tokens.len();
            if token_count == 0 {
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(post_seed(seed, key));
            let (text, replaced) = replace_synonyms(&p.raw_text, synonyms, &mut rng);
            if replaced == 0 || (replaced as f64) < replace_fraction * token_count as f64 {
                return None;
            }
            let mut post = (*p).clone();
            post.comment_id = format!("{}_syn", p.comment_id);
            post.tokens = preprocess(&text);
            post.raw_text = text;
            Some(SyntheticPost { post, synthetic_of: key.clone(), replaced, token_count })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPlacement {
    /// Original and synthetic always share a fold.
    CoLocated,
    /// Synthetic posts are only ever used for training.
    TrainOnly,
}

/// Check that `folds` (test folds over item indices) respect the original/synthetic `pairs`.
pub fn pair_constraint(
    folds: &[Vec<usize>],
    pairs: &[(usize, usize)],
    placement: PairPlacement,
) -> Result<Vec<Vec<usize>>> {
    let mut fold_of: HashMap<usize, usize> = HashMap::new();
    for (f, items) in folds.iter().enumerate() {
        for &i in items {
            fold_of.insert(i, f);
        }
    }
    for &(orig, syn) in pairs {
        match placement {
            PairPlacement::CoLocated => {
                if fold_of.get(&orig) != fold_of.get(&syn) {
                    return Err(Error::invalid(format!(
                        "pair ({orig}, {syn}) split across folds {:?} and {:?}",
                        fold_of.get(&orig),
                        fold_of.get(&syn)
                    )));
                }
            }
            PairPlacement::TrainOnly => {
                if let Some(f) = fold_of.get(&syn) {
                    return Err(Error::invalid(format!(
                        "synthetic item {syn} (of {orig}) is in test fold {f}"
                    )));
                }
            }
        }
    }
    Ok(folds.to_vec())
}

/// k-fold CV over originals plus synthetic rows. `synthetic_of[j]` is the original row of synthetic row `j`.
#[allow(clippy::too_many_arguments)]
pub fn super_sampled_cv(
    x: &FeatureMatrix,
    y: &[usize],
    x_syn: &FeatureMatrix,
    y_syn: &[usize],
    synthetic_of: &[usize],
    placement: PairPlacement,
    n_classes: usize,
    config: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    if x_syn.n_rows() != synthetic_of.len() || y_syn.len() != synthetic_of.len() {
        return Err(Error::invalid("synthetic rows, labels and links differ in length"));
    }
    let n = y.len();
    let all_x = x.vstack(x_syn)?;
    let all_y: Vec<usize> = y.iter().chain(y_syn).copied().collect();
    let base = stratified_kfold(y, k, seed)?;
    let folds: Vec<Vec<usize>> = base
        .iter()
        .map(|f| {
            let mut f = f.clone();
            if placement == PairPlacement::CoLocated {
                let inside: std::collections::HashSet<usize> = f.iter().copied().collect();
                f.extend((0..synthetic_of.len()).filter(|j| inside.contains(&synthetic_of[*j])).map(|j| n + j));
            }
            f
        })
        .collect();
    let pairs: Vec<(usize, usize)> = synthetic_of.iter().enumerate().map(|(j, &o)| (o, n + j)).collect();
    let folds = pair_constraint(&folds, &pairs, placement)?;
    let reports = folds
        .par_iter()
        .map(|test| {
            let mut train_idx = complement(all_y.len(), test);
            if placement == PairPlacement::TrainOnly {
                let in_test: std::collections::HashSet<usize> = test.iter().copied().collect();
                train_idx.retain(|&i| i < n || !in_test.contains(&synthetic_of[i - n]));
            }
            let ytr: Vec<usize> = train_idx.iter().map(|&i| all_y[i]).collect();
            let model = train(&all_x.select_rows(&train_idx), &ytr, config)?;
            let pred = model.predict_batch(&all_x.select_rows(test))?;
            let actual: Vec<usize> = test.iter().map(|&i| all_y[i]).collect();
            MetricsReport::from_predictions(&actual, &pred, n_classes)
        })
        .collect::<Result<Vec<_>>>()?;
    CvReport::from_folds(reports)
}

#[derive(Serialize)]
struct ExportRecord<'a> {
    submission_id: &'a str,
    comment_id: &'a str,
    text: &'a str,
    tokens: &'a [String],
    stance: StanceLabel,
    synthetic_of: Option<&'a str>,
}

/// One JSON object per post: originals first, then synthetic posts with a back-reference.
pub fn write_augmented_jsonl<W: Write>(dataset: &Dataset, synthetic: &[SyntheticPost], out: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    let io = |e| Error::io("<jsonl>", e);
    for r in dataset.posts() {
        let p = r.post();
        let rec = ExportRecord {
            submission_id: &r.submission.submission_id,
            comment_id: &p.comment_id,
            text: &p.raw_text,
            tokens: &p.tokens,
            stance: p.sdqc_submission,
            synthetic_of: None,
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(io)?;
    }
    for s in synthetic {
        let rec = ExportRecord {
            submission_id: &s.synthetic_of.submission_id,
            comment_id: &s.post.comment_id,
            text: &s.post.raw_text,
            tokens: &s.post.tokens,
            stance: s.post.sdqc_submission,
            synthetic_of: Some(&s.synthetic_of.comment_id),
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(io)?;
    }
    w.flush().map_err(io)
}
