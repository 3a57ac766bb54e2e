//! Experiment protocols: k-fold on one sequence set, cross-dataset transfer,
//! mixed-dataset folds, and leave-one-submission-out automatic stance labels.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{HmmClassifier, HmmOptions, VbBaseline};
use super::structure::UnverifiedMode;
use crate::classifiers::{train, TrainConfig};
use crate::corpus::{Dataset, PostKey, SequenceRecord, StanceLabel, VeracityLabel};
use crate::error::{Error, Result};
use crate::evaluation::{complement, stratified_kfold, CvReport, MetricsReport};
use crate::features::{FeatureConfig, FeatureExtractor, PostContext};
use crate::resources::Resources;

/// Which veracity model a protocol trains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum VeracitySpec {
    Hmm(HmmOptions),
    Vb { unverified: UnverifiedMode },
}

impl VeracitySpec {
    pub fn unverified(&self) -> UnverifiedMode {
        match self {
            VeracitySpec::Hmm(o) => o.unverified,
            VeracitySpec::Vb { unverified } => *unverified,
        }
    }

    /// Fit on `train`, return predictions for `test`.
    pub fn fit_predict(&self, train: &[SequenceRecord], test: &[SequenceRecord]) -> Result<Vec<VeracityLabel>> {
        match self {
            VeracitySpec::Hmm(o) => {
                let clf = HmmClassifier::fit(train, o)?;
                test.iter().map(|r| clf.predict(r)).collect()
            }
            VeracitySpec::Vb { unverified } => {
                let vb = VbBaseline::fit(train, *unverified)?;
                Ok(test.iter().map(|r| vb.predict(r)).collect())
            }
        }
    }

    fn report(&self, test: &[SequenceRecord], pred: &[VeracityLabel]) -> Result<MetricsReport> {
        let m = self.unverified();
        let actual: Vec<usize> = test.iter().map(|r| m.class_index(r.veracity)).collect();
        let predicted: Vec<usize> = pred.iter().map(|l| m.class_index(*l)).collect();
        MetricsReport::from_predictions(&actual, &predicted, m.labels().len())
    }
}

fn pick(records: &[SequenceRecord], idx: &[usize]) -> Vec<SequenceRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

/// Stratified (by mapped label) k-fold over one sequence set.
pub fn protocol_cv(records: &[SequenceRecord], spec: &VeracitySpec, k: usize, seed: u64) -> Result<CvReport> {
    let m = spec.unverified();
    let labels: Vec<usize> = records.iter().map(|r| m.class_index(r.veracity)).collect();
    let folds = stratified_kfold(&labels, k, seed)?;
    let reports = folds
        .par_iter()
        .map(|test| {
            let tr = pick(records, &complement(records.len(), test));
            let te = pick(records, test);
            let pred = spec.fit_predict(&tr, &te)?;
            spec.report(&te, &pred)
        })
        .collect::<Result<Vec<_>>>()?;
    CvReport::from_folds(reports)
}

/// Three-fold variant of [`protocol_cv`].
pub fn protocol_cv3(records: &[SequenceRecord], spec: &VeracitySpec, seed: u64) -> Result<CvReport> {
    protocol_cv(records, spec, 3, seed)
}

/// Fit on all of `train`, evaluate on all of `test`.
pub fn protocol_transfer(
    train: &[SequenceRecord],
    test: &[SequenceRecord],
    spec: &VeracitySpec,
) -> Result<MetricsReport> {
    if train.is_empty() {
        return Err(Error::invalid("missing training sequences"));
    }
    if test.is_empty() {
        return Err(Error::invalid("missing test sequences"));
    }
    let pred = spec.fit_predict(train, test)?;
    spec.report(test, &pred)
}

/// Three-fold CV over the union of two sequence sets.
pub fn protocol_mix(
    first: &[SequenceRecord],
    second: &[SequenceRecord],
    spec: &VeracitySpec,
    seed: u64,
) -> Result<CvReport> {
    let all: Vec<SequenceRecord> = first.iter().chain(second).cloned().collect();
    protocol_cv3(&all, spec, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub held_out: String,
    pub train_posts: usize,
    pub test_posts: usize,
    /// Training posts that belong to the held-out submission; always 0.
    pub leaked: usize,
}

#[derive(Debug, Clone)]
pub struct AutoLabelOutcome {
    /// Predicted stance of every rumour post.
    pub stances: HashMap<PostKey, StanceLabel>,
    /// Stance metrics of all predictions against the gold labels.
    pub report: MetricsReport,
    pub audit: Vec<AuditEntry>,
    /// Rumour subset with predicted stances in place of gold ones.
    pub relabelled: Dataset,
}

/// Leave-one-submission-out stance labelling of every rumour submission. Features are refit
/// on each training portion; normalisation ranges come from the whole dataset.
pub fn auto_label(
    dataset: &Dataset,
    features: &FeatureConfig,
    resources: &Resources,
    config: &TrainConfig,
) -> Result<AutoLabelOutcome> {
    let all: Vec<PostContext> = dataset.posts().into_iter().map(Into::into).collect();
    let rumour_ids: Vec<&str> = dataset
        .submissions
        .iter()
        .filter(|s| s.is_rumour)
        .map(|s| s.submission_id.as_str())
        .collect();
    let results = rumour_ids
        .par_iter()
        .map(|&held| {
            let (test, train_ctx): (Vec<PostContext>, Vec<PostContext>) =
                all.iter().partition(|c| c.submission.submission_id == held);
            let leaked = train_ctx.iter().filter(|c| c.submission.submission_id == held).count();
            let train_keys: HashSet<(&str, &str)> = train_ctx
                .iter()
                .map(|c| (c.submission.submission_id.as_str(), c.post.comment_id.as_str()))
                .collect();
            let leaked = leaked
                + test
                    .iter()
                    .filter(|c| train_keys.contains(&(c.submission.submission_id.as_str(), c.post.comment_id.as_str())))
                    .count();
            if leaked > 0 {
                return Err(Error::invalid(format!("{leaked} posts of {held} leaked into training")));
            }
            let fx = FeatureExtractor::fit(&all, &train_ctx, features, resources)?;
            let xtr = fx.extract_all(&train_ctx, resources)?;
            let ytr: Vec<usize> = train_ctx.iter().map(|c| c.post.sdqc_submission.index()).collect();
            let model = train(&xtr, &ytr, config)?;
            let pred = model.predict_batch(&fx.extract_all(&test, resources)?)?;
            let labelled: Vec<(PostKey, StanceLabel, StanceLabel)> = test
                .iter()
                .zip(pred)
                .map(|(c, p)| {
                    let key = PostKey {
                        submission_id: c.submission.submission_id.clone(),
                        comment_id: c.post.comment_id.clone(),
                    };
                    (key, c.post.sdqc_submission, StanceLabel::ALL[p])
                })
                .collect();
            let audit = AuditEntry {
                held_out: held.to_string(),
                train_posts: train_ctx.len(),
                test_posts: test.len(),
                leaked,
            };
            Ok((labelled, audit))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut stances = HashMap::new();
    let (mut actual, mut predicted) = (Vec::new(), Vec::new());
    let mut audit = Vec::new();
    for (labelled, a) in results {
        for (key, gold, pred) in labelled {
            actual.push(gold.index());
            predicted.push(pred.index());
            stances.insert(key, pred);
        }
        audit.push(a);
    }
    let relabelled = dataset.rumour_subset().with_stances(&stances);
    Ok(AutoLabelOutcome {
        stances,
        report: MetricsReport::from_predictions(&actual, &predicted, StanceLabel::COUNT)?,
        audit,
        relabelled,
    })
}
