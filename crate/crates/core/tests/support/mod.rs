//! Shared fixtures and independent reference implementations for the integration tests.
#![allow(dead_code)]

pub mod checks;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rumour_core::corpus::{
    load_dataset, preprocess, Branch, Dataset, Post, StanceLabel, Submission, UserInfo, VeracityLabel,
};
use rumour_core::features::FeatureMatrix;
use rumour_core::resources::{ResourcePaths, Resources};
use rumour_core::veracity::GaussianHmm;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_dataset() -> Dataset {
    load_dataset(&fixtures().join("dast")).expect("fixture corpus loads")
}

pub fn fixture_resources() -> Resources {
    Resources::load(&ResourcePaths::in_dir(&fixtures())).expect("fixture resources load")
}

// ---------------------------------------------------------------------------
// Synthetic corpus

const WORDS: [&[&str]; 4] = [
    &["ja", "sandt", "rigtigt", "bekræftet", "præcis", "enig", "korrekt"],
    &["nej", "falsk", "løgn", "forkert", "usandt", "aldrig", "vrøvl"],
    &["hvorfor", "hvor", "kilde", "hvem", "hvornår", "virkelig", "spørgsmål"],
    &["okay", "haha", "vejret", "bilen", "måske", "dag", "mand", "huset", "grin", "tja"],
];

fn user(id: &str, rng: &mut impl Rng) -> UserInfo {
    UserInfo {
        id: id.to_string(),
        karma: rng.random_range(-50..5000),
        created: Some(1_400_000_000 + rng.random_range(0..100_000_000)),
        gold_status: rng.random_bool(0.05),
        is_employee: false,
        has_verified_email: rng.random_bool(0.7),
    }
}

fn stance_draw(rng: &mut impl Rng) -> StanceLabel {
    match rng.random_range(0..100) {
        0..=11 => StanceLabel::Supporting,
        12..=23 => StanceLabel::Denying,
        24..=31 => StanceLabel::Querying,
        _ => StanceLabel::Commenting,
    }
}

fn text_for(stance: StanceLabel, rng: &mut impl Rng) -> String {
    let own = WORDS[stance.index()];
    let n = rng.random_range(3..12);
    let mut words: Vec<String> = (0..n)
        .map(|_| {
            let pool = if rng.random_bool(0.5) { own } else { WORDS[3] };
            pool[rng.random_range(0..pool.len())].to_string()
        })
        .collect();
    if stance == StanceLabel::Querying {
        words.push("?".into());
    }
    if rng.random_bool(0.1) {
        words.push("https://example.dk/x".into());
    }
    let mut s = words.join(" ");
    if rng.random_bool(0.2) {
        s = s.to_uppercase();
    }
    s
}

/// A DAST-shaped corpus: `n_subs` submissions, branches sharing their conversation roots,
/// stance-correlated vocabulary, rumours with all three truth values.
pub fn synthetic_dataset(n_subs: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subs = Vec::new();
    for s in 0..n_subs {
        let sid = format!("s{s}");
        let t0 = 1_500_000_000 + (s as i64) * 100_000;
        let is_rumour = s % 3 != 2;
        let veracity = is_rumour.then(|| VeracityLabel::ALL[s % 3 + (s / 3) % 2]);
        let mut branches = Vec::new();
        let mut next = 0;
        let mut mk = |parent: &str, t: i64, rng: &mut ChaCha8Rng| {
            let id = format!("{sid}c{next}");
            next += 1;
            let stance = stance_draw(rng);
            let raw = text_for(stance, rng);
            Post {
                comment_id: id.clone(),
                tokens: preprocess(&raw),
                raw_text: raw,
                created: t,
                parent_id: parent.to_string(),
                submission_id: sid.clone(),
                upvotes: rng.random_range(-5..60),
                replies: rng.random_range(0..4),
                is_submitter: rng.random_bool(0.1),
                is_deleted: false,
                user: user(&id, rng),
                sdqc_submission: stance,
                sdqc_parent: None,
            }
        };
        for c in 0..rng.random_range(1..4) {
            let t = t0 + 600 * (c as i64 + 1);
            let root = mk(&sid, t, &mut rng);
            for b in 0..rng.random_range(1..4) {
                let mut posts = vec![root.clone()];
                for d in 0..rng.random_range(0..4) {
                    let parent = posts.last().unwrap().comment_id.clone();
                    posts.push(mk(&parent, t + 60 * (b as i64 * 10 + d as i64 + 1), &mut rng));
                }
                branches.push(Branch { posts });
            }
        }
        subs.push(Submission {
            submission_id: sid.clone(),
            event: format!("event{}", s % 2),
            title: format!("Rygte nummer {s}"),
            text: text_for(StanceLabel::Commenting, &mut rng),
            created: t0,
            num_comments: 0,
            is_rumour,
            veracity,
            rumour_note: String::new(),
            user: user(&format!("op{s}"), &mut rng),
            branches,
        });
    }
    Dataset::new(subs)
}

// ---------------------------------------------------------------------------
// Metric oracle

pub struct OracleMetrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_f1: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Counts over explicit (actual, predicted) pairs, one class at a time.
pub fn oracle_metrics(actual: &[usize], predicted: &[usize], k: usize) -> OracleMetrics {
    let n = actual.len() as f64;
    let correct = actual.iter().zip(predicted).filter(|(a, p)| a == p).count() as f64;
    let (mut precision, mut recall, mut f1) = (vec![], vec![], vec![]);
    for c in 0..k {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for (&a, &p) in actual.iter().zip(predicted) {
            match (a == c, p == c) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fn_ += 1.0,
                _ => {}
            }
        }
        let pr = ratio(tp, tp + fp);
        let re = ratio(tp, tp + fn_);
        precision.push(pr);
        recall.push(re);
        f1.push(ratio(2.0 * pr * re, pr + re));
    }
    let macro_f1 = f1.iter().sum::<f64>() / k as f64;
    OracleMetrics { accuracy: ratio(correct, n), precision, recall, f1, macro_f1 }
}

/// Expand a confusion matrix into label pairs.
pub fn pairs_from_counts(counts: &[Vec<u64>]) -> (Vec<usize>, Vec<usize>) {
    let mut a = Vec::new();
    let mut p = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            for _ in 0..c {
                a.push(i);
                p.push(j);
            }
        }
    }
    (a, p)
}

// ---------------------------------------------------------------------------
// HMM oracle

fn gauss_logpdf(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
        .sum()
}

fn path_score(h: &GaussianHmm, obs: &[Vec<f64>], path: &[usize]) -> f64 {
    let mut s = h.start[path[0]].ln() + gauss_logpdf(&obs[0], &h.means[path[0]], &h.vars[path[0]]);
    for t in 1..obs.len() {
        s += h.trans[path[t - 1]][path[t]].ln() + gauss_logpdf(&obs[t], &h.means[path[t]], &h.vars[path[t]]);
    }
    s
}

/// All state paths of length `t` in lexicographic order.
fn all_paths(n: usize, t: usize) -> Vec<Vec<usize>> {
    let total = n.pow(t as u32);
    (0..total)
        .map(|mut code| {
            let mut p = vec![0; t];
            for slot in p.iter_mut().rev() {
                *slot = code % n;
                code /= n;
            }
            p
        })
        .collect()
}

/// Log-likelihood by summing over every state path.
pub fn brute_log_likelihood(h: &GaussianHmm, obs: &[Vec<f64>]) -> f64 {
    let scores: Vec<f64> = all_paths(h.start.len(), obs.len()).iter().map(|p| path_score(h, obs, p)).collect();
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln()
}

/// Best path by enumeration; the first (lexicographically smallest) path wins ties.
pub fn brute_viterbi(h: &GaussianHmm, obs: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for p in all_paths(h.start.len(), obs.len()) {
        let s = path_score(h, obs, &p);
        if s > best.1 + 1e-12 {
            best = (p, s);
        }
    }
    best
}

fn simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn random_hmm(n: usize, width: usize, rng: &mut impl Rng) -> GaussianHmm {
    GaussianHmm {
        start: simplex(n, rng),
        trans: (0..n).map(|_| simplex(n, rng)).collect(),
        means: (0..n).map(|_| (0..width).map(|_| rng.random_range(-2.0..4.0)).collect()).collect(),
        vars: (0..n).map(|_| (0..width).map(|_| rng.random_range(0.2..2.0)).collect()).collect(),
    }
}

pub fn random_obs(t: usize, width: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..t).map(|_| (0..width).map(|_| rng.random_range(-1.0..4.0)).collect()).collect()
}

/// Stance-like sequences: small integers, optionally with a time column.
pub fn random_stance_seqs(count: usize, width: usize, rng: &mut impl Rng) -> Vec<Vec<Vec<f64>>> {
    (0..count)
        .map(|_| {
            let t = rng.random_range(1..9);
            (0..t)
                .map(|i| {
                    let mut row = vec![rng.random_range(0..4) as f64];
                    if width == 2 {
                        row.push(i as f64 / t as f64);
                    }
                    row
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Classifier helpers

/// Central-difference gradient of `f` at `x`.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Gaussian blobs around well-separated centres: linearly separable with a wide margin.
pub fn separable(n_per_class: usize, k: usize, d: usize, rng: &mut impl Rng) -> (FeatureMatrix, Vec<usize>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for c in 0..k {
        for _ in 0..n_per_class {
            let mut row: Vec<f64> = (0..d).map(|_| rng.random_range(-0.3..0.3)).collect();
            row[c % d] += 4.0;
            rows.push(row);
            y.push(c);
        }
    }
    (FeatureMatrix::from_dense_anonymous(&rows).unwrap(), y)
}
