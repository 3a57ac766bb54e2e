//! Cross-validation, parameter search, ablation and learning curves.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{CvReport, MeanStd, MetricsReport};
use super::split::{complement, stratified_kfold, stratified_split};
use crate::classifiers::{train, ClassWeight, Penalty, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{Category, FeatureMatrix};

fn pick(y: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| y[i]).collect()
}

/// Generic k-fold driver. `fit_predict(train, test)` returns predictions for `test`.
pub fn cross_validate_with<F>(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
    fit_predict: F,
) -> Result<CvReport>
where
    F: Fn(&[usize], &[usize]) -> Result<Vec<usize>> + Sync,
{
    let folds = stratified_kfold(labels, k, seed)?;
    let reports: Vec<MetricsReport> = folds
        .par_iter()
        .map(|test| {
            let train = complement(labels.len(), test);
            let pred = fit_predict(&train, test)?;
            MetricsReport::from_predictions(&pick(labels, test), &pred, n_classes)
        })
        .collect::<Result<_>>()?;
    CvReport::from_folds(reports)
}

/// Train `config` on k-1 folds and test on the remaining one, k times.
pub fn cross_validate(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    config: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    cross_validate_with(y, n_classes, k, seed, |train_idx, test_idx| {
        let model = train(&x.select_rows(train_idx), &pick(y, train_idx), config)?;
        model.predict_batch(&x.select_rows(test_idx))
    })
}

/// Value sets of the searched hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub penalty: Vec<Penalty>,
    pub c: Vec<f64>,
    pub class_weight: Vec<ClassWeight>,
    pub dual: Vec<bool>,
}

impl ParamGrid {
    /// The full linear-model search space, including L1.
    pub fn linear_space() -> Self {
        ParamGrid {
            penalty: vec![Penalty::L1, Penalty::L2],
            c: vec![1.0, 10.0, 50.0, 100.0, 500.0, 1000.0],
            class_weight: vec![ClassWeight::Balanced, ClassWeight::Uniform],
            dual: vec![true, false],
        }
    }

    /// [`ParamGrid::linear_space`] restricted to L2.
    pub fn linear_space_l2() -> Self {
        ParamGrid { penalty: vec![Penalty::L2], ..Self::linear_space() }
    }

    pub fn singleton(config: &TrainConfig) -> Self {
        ParamGrid {
            penalty: vec![config.penalty],
            c: vec![config.c],
            class_weight: vec![config.class_weight],
            dual: vec![config.dual],
        }
    }

    pub fn len(&self) -> usize {
        self.penalty.len() * self.c.len() * self.class_weight.len() * self.dual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All combinations, penalty outermost and dual innermost.
    pub fn configs(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &penalty in &self.penalty {
            for &c in &self.c {
                for &class_weight in &self.class_weight {
                    for &dual in &self.dual {
                        out.push(TrainConfig { penalty, c, class_weight, dual, ..base.clone() });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: TrainConfig,
    /// Inner-CV macro F1 of every evaluated configuration, in evaluation order.
    pub scores: Vec<(TrainConfig, MeanStd)>,
    /// Number of inner train/evaluate runs.
    pub fits: usize,
    /// `best` retrained on the outer training split, scored on the holdout.
    pub holdout: MetricsReport,
}

fn search(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    configs: Vec<TrainConfig>,
    inner_k: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if configs.is_empty() {
        return Err(Error::config("empty parameter grid"));
    }
    for c in &configs {
        c.validate()?;
    }
    let (outer_train, holdout) = stratified_split(y, 0.2, seed)?;
    let xt = x.select_rows(&outer_train);
    let yt = pick(y, &outer_train);
    let fits = AtomicUsize::new(0);
    let scores: Vec<(TrainConfig, MeanStd)> = configs
        .into_iter()
        .map(|cfg| {
            let cv = cross_validate_with(&yt, n_classes, inner_k, seed, |tr, te| {
                fits.fetch_add(1, Ordering::Relaxed);
                let m = train(&xt.select_rows(tr), &pick(&yt, tr), &cfg)?;
                m.predict_batch(&xt.select_rows(te))
            })?;
            Ok((cfg, cv.macro_f1))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, (_, s)) in scores.iter().enumerate() {
        if s.mean > scores[best].1.mean {
            best = i;
        }
    }
    let best_cfg = scores[best].0.clone();
    let model = train(&xt, &yt, &best_cfg)?;
    let pred = model.predict_batch(&x.select_rows(&holdout))?;
    Ok(SearchOutcome {
        best: best_cfg,
        scores,
        fits: fits.into_inner(),
        holdout: MetricsReport::from_predictions(&pick(y, &holdout), &pred, n_classes)?,
    })
}

/// Exhaustive search: outer stratified 0.2 holdout, inner k-fold macro F1, ties to the first config.
pub fn grid_search(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    base: &TrainConfig,
    grid: &ParamGrid,
    inner_k: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    search(x, y, n_classes, grid.configs(base), inner_k, seed)
}

/// Like [`grid_search`] over `n_samples` configurations drawn without replacement.
#[allow(clippy::too_many_arguments)]
pub fn random_search(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    base: &TrainConfig,
    grid: &ParamGrid,
    n_samples: usize,
    inner_k: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    let all = grid.configs(base);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = sample(&mut rng, all.len(), n_samples.min(all.len())).into_vec();
    chosen.sort_unstable();
    search(x, y, n_classes, chosen.into_iter().map(|i| all[i].clone()).collect(), inner_k, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `None` for the run with every category.
    pub held_out: Option<Category>,
    pub report: CvReport,
}

/// One CV run with all categories, then one per held-out category.
pub fn ablation(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    config: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<AblationRow>> {
    let present: Vec<Category> =
        Category::ALL.into_iter().filter(|c| x.category_width(*c) > 0).collect();
    if present.len() < 2 {
        return Err(Error::invalid("ablation needs at least two feature categories"));
    }
    let mut rows = vec![AblationRow { held_out: None, report: cross_validate(x, y, n_classes, config, k, seed)? }];
    for c in present {
        let report = cross_validate(&x.drop_category(c), y, n_classes, config, k, seed)?;
        rows.push(AblationRow { held_out: Some(c), report });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningPoint {
    pub fraction: f64,
    pub n_samples: usize,
    /// Macro F1 on the training folds.
    pub train_macro_f1: MeanStd,
    pub cv: CvReport,
}

/// CV scores on stratified subsamples of the data.
pub fn learning_curve(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    config: &TrainConfig,
    fractions: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<LearningPoint>> {
    fractions
        .iter()
        .map(|&fraction| {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::invalid(format!("fraction must be in (0, 1], got {fraction}")));
            }
            let idx = if fraction >= 1.0 {
                (0..y.len()).collect()
            } else {
                stratified_split(y, fraction, seed)?.1
            };
            let xs = x.select_rows(&idx);
            let ys = pick(y, &idx);
            let train_scores = std::sync::Mutex::new(Vec::new());
            let cv = cross_validate_with(&ys, n_classes, k, seed, |tr, te| {
                let xtr = xs.select_rows(tr);
                let ytr = pick(&ys, tr);
                let m = train(&xtr, &ytr, config)?;
                let own = MetricsReport::from_predictions(&ytr, &m.predict_batch(&xtr)?, n_classes)?;
                train_scores.lock().unwrap().push(own.macro_f1);
                m.predict_batch(&xs.select_rows(te))
            })?;
            let mut ts: Vec<f64> = train_scores.into_inner().unwrap();
            // Folds finish in any order; sort so the summary is bit-reproducible.
            ts.sort_by(f64::total_cmp);
            Ok(LearningPoint { fraction, n_samples: idx.len(), train_macro_f1: MeanStd::of(&ts), cv })
        })
        .collect()
}
