//! Deterministic property sweeps. Each returns a short summary on success.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rumour_core::classifiers::{
    logistic_objective, train, ClassWeight, FeatureSubset, ForestConfig, ModelKind, TrainConfig, TrainedModel,
};
use rumour_core::corpus::Dataset;
use rumour_core::evaluation::ConfusionMatrix;
use rumour_core::features::{
    variance_select, Category, FeatureConfig, FeatureExtractor, FeatureMatrix, PostContext,
};
use rumour_core::veracity::{em_step, random_init, to_sequences, StructureMode, DEFAULT_VARIANCE_FLOOR};

use super::*;

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn stochastic(v: &[f64]) -> bool {
    (v.iter().sum::<f64>() - 1.0).abs() < 1e-9 && v.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p))
}

pub fn hmm_em_monotone(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = 0;
    for inst in 0..instances {
        let width = rng.random_range(1..=2);
        let seqs = random_stance_seqs(rng.random_range(2..8), width, &mut rng);
        let count: usize = seqs.iter().map(Vec::len).sum();
        let n = rng.random_range(1..=4usize).min(count);
        let mut hmm = random_init(&seqs, n, DEFAULT_VARIANCE_FLOOR, &mut rng);
        let mut prev = f64::NEG_INFINITY;
        for it in 0..40 {
            let ll = em_step(&mut hmm, &seqs, DEFAULT_VARIANCE_FLOOR).map_err(|e| e.to_string())?;
            ensure!(
                ll >= prev - 1e-8 * prev.abs().max(1.0),
                "instance {inst}: log-likelihood fell from {prev} to {ll} at iteration {it}"
            );
            ensure!(stochastic(&hmm.start), "instance {inst}: start not stochastic after iteration {it}");
            ensure!(
                hmm.trans.iter().all(|r| stochastic(r)),
                "instance {inst}: transition row not stochastic after iteration {it}"
            );
            ensure!(
                hmm.vars.iter().flatten().all(|&v| v >= DEFAULT_VARIANCE_FLOOR),
                "instance {inst}: variance below floor after iteration {it}"
            );
            prev = ll;
            steps += 1;
        }
    }
    Ok(format!("{instances} instances, {steps} EM steps"))
}

pub fn hmm_matches_enumeration(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for inst in 0..instances {
        let n = rng.random_range(1..=3);
        let t = rng.random_range(1..=6);
        let width = rng.random_range(1..=2);
        let hmm = random_hmm(n, width, &mut rng);
        let obs = random_obs(t, width, &mut rng);
        let ll = hmm.log_likelihood(&obs).map_err(|e| e.to_string())?;
        let oracle = brute_log_likelihood(&hmm, &obs);
        ensure!((ll - oracle).abs() <= 1e-9, "instance {inst}: forward {ll} vs enumeration {oracle}");
        let (path, score) = hmm.viterbi(&obs).map_err(|e| e.to_string())?;
        let (best_path, best) = brute_viterbi(&hmm, &obs);
        ensure!(path == best_path, "instance {inst}: viterbi path {path:?} vs {best_path:?}");
        ensure!((score - best).abs() <= 1e-9, "instance {inst}: viterbi score {score} vs {best}");
        worst = worst.max((ll - oracle).abs()).max((score - best).abs());
    }
    Ok(format!("{instances} instances, max abs diff {worst:.1e}"))
}

pub fn metrics_match_oracle(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for inst in 0..instances {
        let counts: Vec<Vec<u64>> = (0..4)
            .map(|_| (0..4).map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(0..15) }).collect())
            .collect();
        let cm = ConfusionMatrix::from_counts(counts.clone()).map_err(|e| e.to_string())?;
        let (a, p) = pairs_from_counts(&counts);
        if a.is_empty() {
            ensure!(cm.accuracy().is_err(), "instance {inst}: empty matrix must not have an accuracy");
            continue;
        }
        let o = oracle_metrics(&a, &p, 4);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12;
        ensure!(close(cm.accuracy().unwrap(), o.accuracy), "instance {inst}: accuracy");
        for c in 0..4 {
            let (pr, re, f) = cm.precision_recall_f1(c);
            ensure!(close(pr, o.precision[c]), "instance {inst}: precision of class {c}");
            ensure!(close(re, o.recall[c]), "instance {inst}: recall of class {c}");
            ensure!(close(f, o.f1[c]), "instance {inst}: f1 of class {c}");
        }
        ensure!(close(cm.macro_f1(), o.macro_f1), "instance {inst}: macro F1 {} vs {}", cm.macro_f1(), o.macro_f1);
    }
    Ok(format!("{instances} random 4x4 matrices"))
}

pub fn metrics_zero_division() -> Check {
    // class 2 never occurs and is never predicted; class 3 is predicted but never occurs
    let cm = ConfusionMatrix::from_counts(vec![
        vec![3, 1, 0, 1],
        vec![0, 2, 0, 0],
        vec![0, 0, 0, 0],
        vec![0, 0, 0, 0],
    ])
    .map_err(|e| e.to_string())?;
    ensure!(cm.precision_recall_f1(2) == (0.0, 0.0, 0.0), "absent class must score 0/0/0");
    ensure!(cm.precision_recall_f1(3) == (0.0, 0.0, 0.0), "never-correct class must score 0/0/0");
    let f0 = 2.0 * 1.0 * 0.6 / 1.6;
    let f1 = 2.0 * (2.0 / 3.0) / (2.0 / 3.0 + 1.0);
    ensure!((cm.macro_f1() - (f0 + f1) / 4.0).abs() < 1e-12, "macro F1 must average all four classes");
    ensure!(ConfusionMatrix::new(4).accuracy().is_err(), "accuracy of an empty matrix is an error");
    ensure!(ConfusionMatrix::new(4).macro_f1() == 0.0, "macro F1 of an empty matrix is 0");
    Ok("0/0 -> 0 for precision, recall and F1".into())
}

pub fn logistic_gradient(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for inst in 0..instances {
        let n = rng.random_range(3..20);
        let d = rng.random_range(1..7);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-2.0..2.0) }).collect())
            .collect();
        let x = FeatureMatrix::from_dense_anonymous(&rows).map_err(|e| e.to_string())?;
        let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let sw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
        let c = rng.random_range(0.01..10.0);
        let params: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (_, grad) = logistic_objective(&x, &y, &sw, c, &params);
        let numeric = numeric_gradient(|p| logistic_objective(&x, &y, &sw, c, p).0, &params, 1e-5);
        let err = relative_error(&grad, &numeric);
        ensure!(err < 1e-5, "instance {inst}: relative gradient error {err:.2e}");
        worst = worst.max(err);
    }
    Ok(format!("{instances} problems, max relative error {worst:.1e}"))
}

pub fn separable_fit(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = Vec::new();
    for k in [2, 3, 4] {
        let (x, y) = separable(15, k, 5, &mut rng);
        for kind in [ModelKind::Svm, ModelKind::Logistic, ModelKind::Tree] {
            let cfg = TrainConfig::new(kind).with_c(100.0).with_seed(seed);
            let clf = train(&x, &y, &cfg).map_err(|e| e.to_string())?;
            let pred = clf.predict_batch(&x).map_err(|e| e.to_string())?;
            let wrong = pred.iter().zip(&y).filter(|(p, t)| p != t).count();
            ensure!(wrong == 0, "{kind:?} misclassified {wrong} of {} separable points ({k} classes)", y.len());
        }
        done.push(k);
    }
    Ok(format!("svm, logistic and tree perfect on {done:?}-class blobs"))
}

pub fn forest_of_one_is_tree(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for inst in 0..instances {
        let n = rng.random_range(10..60);
        let d = rng.random_range(1..8);
        let k = rng.random_range(2..5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| if rng.random_bool(0.4) { 0.0 } else { rng.random_range(-3..4) as f64 }).collect())
            .collect();
        let x = FeatureMatrix::from_dense_anonymous(&rows).map_err(|e| e.to_string())?;
        let mut y: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        y[0] = 0;
        y[1] = 1;
        let weight = if rng.random_bool(0.5) { ClassWeight::Balanced } else { ClassWeight::Uniform };
        let tree_cfg = TrainConfig::new(ModelKind::Tree).with_class_weight(weight).with_seed(inst as u64);
        let mut forest_cfg = TrainConfig::new(ModelKind::Forest).with_class_weight(weight).with_seed(inst as u64);
        forest_cfg.forest = ForestConfig { n_trees: 1, features_per_split: FeatureSubset::All, bootstrap: false };
        let tree = train(&x, &y, &tree_cfg).map_err(|e| e.to_string())?;
        let forest = train(&x, &y, &forest_cfg).map_err(|e| e.to_string())?;
        let (TrainedModel::Tree(t), TrainedModel::Forest(f)) = (&tree.model, &forest.model) else {
            return Err("unexpected model types".into());
        };
        ensure!(f.trees.len() == 1 && f.trees[0] == *t, "instance {inst}: forest tree differs from the tree");
        let probe: Vec<Vec<f64>> = (0..50).map(|_| (0..d).map(|_| rng.random_range(-4.0..5.0)).collect()).collect();
        let probe = FeatureMatrix::from_dense_anonymous(&probe).map_err(|e| e.to_string())?;
        for r in probe.rows() {
            ensure!(t.predict(r) == f.predict(r), "instance {inst}: predictions differ");
        }
    }
    Ok(format!("{instances} random problems, identical trees and predictions"))
}

fn contexts(ds: &Dataset) -> Vec<PostContext<'_>> {
    ds.posts().into_iter().map(Into::into).collect()
}

fn same_matrix(a: &FeatureMatrix, b: &FeatureMatrix) -> bool {
    a.n_rows() == b.n_rows()
        && a.columns() == b.columns()
        && (0..a.n_rows()).all(|i| {
            let (ra, rb) = (a.row(i), b.row(i));
            ra.indices == rb.indices && ra.values == rb.values
        })
}

pub fn features_deterministic(ds: &Dataset, res: &rumour_core::resources::Resources) -> Check {
    let ctx = contexts(ds);
    let cfg = FeatureConfig::all();
    let a = FeatureExtractor::fit(&ctx, &ctx, &cfg, res).map_err(|e| e.to_string())?;
    let b = FeatureExtractor::fit(&ctx, &ctx, &cfg, res).map_err(|e| e.to_string())?;
    ensure!(a == b, "two fits differ");
    let ma = a.extract_all(&ctx, res).map_err(|e| e.to_string())?;
    let mb = b.extract_all(&ctx, res).map_err(|e| e.to_string())?;
    ensure!(same_matrix(&ma, &mb), "two extractions differ");
    let mut reversed = ctx.clone();
    reversed.reverse();
    let mr = a.extract_all(&reversed, res).map_err(|e| e.to_string())?;
    for i in 0..ma.n_rows() {
        let (x, y) = (ma.row(i), mr.row(ma.n_rows() - 1 - i));
        ensure!(x.indices == y.indices && x.values == y.values, "row {i} depends on batch order");
    }
    Ok(format!("{} rows x {} columns reproduced", ma.n_rows(), ma.n_cols()))
}

pub fn features_segment_order(ds: &Dataset, res: &rumour_core::resources::Resources) -> Check {
    let ctx = contexts(ds);
    let fx = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::all(), res).map_err(|e| e.to_string())?;
    let order: Vec<usize> = fx
        .columns()
        .iter()
        .map(|c| Category::ALL.iter().position(|k| *k == c.category).unwrap())
        .collect();
    ensure!(order.windows(2).all(|w| w[0] <= w[1]), "columns are not grouped in category order");
    let forward = FeatureConfig::only(&[Category::Text, Category::Bow, Category::Reddit]);
    let backward = FeatureConfig::only(&[Category::Reddit, Category::Bow, Category::Text]);
    let f = FeatureExtractor::fit(&ctx, &ctx, &forward, res).map_err(|e| e.to_string())?;
    let b = FeatureExtractor::fit(&ctx, &ctx, &backward, res).map_err(|e| e.to_string())?;
    ensure!(f.fingerprint() == b.fingerprint(), "layout depends on the order categories were listed");
    let full = fx.extract_all(&ctx, res).map_err(|e| e.to_string())?;
    let dropped = full.drop_category(Category::Mfw);
    let without = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::all().without(&[Category::Mfw]), res)
        .map_err(|e| e.to_string())?;
    ensure!(dropped.columns() == without.columns().as_slice(), "dropping a segment changes the others");
    Ok(format!("{} segments in fixed order", fx.config.categories().len()))
}

pub fn features_bounded(ds: &Dataset, res: &rumour_core::resources::Resources) -> Check {
    let ctx = contexts(ds);
    // ranges from a few posts only, so the rest must be clamped
    let fx = FeatureExtractor::fit(&ctx[..3], &ctx, &FeatureConfig::all(), res).map_err(|e| e.to_string())?;
    let m = fx.extract_all(&ctx, res).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for r in m.rows() {
        for (&j, &v) in r.indices.iter().zip(r.values) {
            if m.columns()[j as usize].category != Category::Embeddings {
                ensure!((0.0..=1.0).contains(&v), "column {} = {v}", m.columns()[j as usize].header(j as usize));
                checked += 1;
            }
        }
    }
    ensure!(m.all_finite(), "non-finite feature value");
    Ok(format!("{checked} non-zero values in [0, 1]"))
}

pub fn variance_monotone(ds: &Dataset, res: &rumour_core::resources::Resources) -> Check {
    let ctx = contexts(ds);
    let fx = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::all(), res).map_err(|e| e.to_string())?;
    let m = fx.extract_all(&ctx, res).map_err(|e| e.to_string())?;
    let thresholds = [0.0, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3];
    let kept: Vec<Vec<usize>> = thresholds.iter().map(|&t| variance_select(&m, t)).collect();
    for (w, t) in kept.windows(2).zip(thresholds.windows(2)) {
        ensure!(w[1].iter().all(|c| w[0].contains(c)), "selection at {} is not a subset of {}", t[1], t[0]);
    }
    let sizes: Vec<usize> = kept.iter().map(Vec::len).collect();
    Ok(format!("kept {sizes:?}"))
}

pub fn bow_brute_force(ds: &Dataset, res: &rumour_core::resources::Resources) -> Check {
    let ctx = contexts(ds);
    let fx = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::only(&[Category::Bow]), res)
        .map_err(|e| e.to_string())?;
    let m = fx.extract_all(&ctx, res).map_err(|e| e.to_string())?;
    let vocab = fx.vocabulary.tokens();
    let mut all: Vec<&String> = ctx.iter().flat_map(|c| c.post.tokens.iter()).collect();
    all.sort();
    all.dedup();
    ensure!(vocab.len() == all.len(), "vocabulary has {} words, corpus has {}", vocab.len(), all.len());
    for (i, c) in ctx.iter().enumerate() {
        let expect: Vec<u32> =
            (0..vocab.len()).filter(|&w| c.post.tokens.contains(&vocab[w])).map(|w| w as u32).collect();
        let row = m.row(i);
        ensure!(row.indices == expect.as_slice(), "post {} has the wrong BOW row", c.post.comment_id);
        ensure!(row.values.iter().all(|&v| v == 1.0), "BOW values must be 1");
    }
    Ok(format!("{} posts over {} words", ctx.len(), vocab.len()))
}

/// Counts on the hand-built submission `wolf1`: conversations {a1: a2 -> a3, a4} and {b1: b2}.
pub fn structures(ds: &Dataset) -> Check {
    let only: Dataset = Dataset::new(ds.submissions.iter().filter(|s| s.submission_id == "wolf1").cloned().collect());
    ensure!(only.submissions.len() == 1, "fixture submission wolf1 missing");
    let sas = to_sequences(&only, StructureMode::Sas);
    let tcas = to_sequences(&only, StructureMode::Tcas);
    let bas = to_sequences(&only, StructureMode::Bas);
    ensure!(sas.len() == 1 && tcas.len() == 2 && bas.len() == 3, "counts {} {} {}", sas.len(), tcas.len(), bas.len());
    let lens = |v: &[rumour_core::corpus::SequenceRecord]| v.iter().map(|r| r.items.len()).collect::<Vec<_>>();
    ensure!(lens(&sas) == [6], "SAS lengths {:?}", lens(&sas));
    ensure!(lens(&tcas) == [4, 2], "TCAS lengths {:?}", lens(&tcas));
    ensure!(lens(&bas) == [3, 2, 2], "BAS lengths {:?}", lens(&bas));
    ensure!(bas[0].items[0] == bas[1].items[0], "shared root a1 must open both of its branches");
    let total: usize = lens(&bas).iter().sum();
    ensure!(total == 7, "BAS items {total}: the shared root is counted once per branch");
    let ids: Vec<&str> = tcas.iter().map(|r| r.rumour_id.as_str()).collect();
    ensure!(ids == ["wolf1/a1", "wolf1/b1"], "TCAS ids {ids:?}");
    let all = to_sequences(ds, StructureMode::Sas);
    ensure!(all.len() == 3, "the non-rumour submission must be skipped, got {} SAS sequences", all.len());
    Ok("SAS 1 / TCAS 2 / BAS 3, root duplicated across branches".into())
}
