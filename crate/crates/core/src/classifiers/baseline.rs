//! Majority-vote and stratified-random baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Majority,
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub classes: Vec<usize>,
    /// Training class distribution, aligned with `classes`; sums to 1.
    pub distribution: Vec<f64>,
    pub seed: u64,
}

impl BaselineModel {
    fn fit(y: &[usize], kind: BaselineKind, seed: u64) -> Self {
        let classes = super::class_list(y);
        let n = y.len() as f64;
        let distribution =
            classes.iter().map(|c| y.iter().filter(|&&l| l == *c).count() as f64 / n).collect();
        BaselineModel { kind, classes, distribution, seed }
    }

    pub fn majority(y: &[usize]) -> Self {
        Self::fit(y, BaselineKind::Majority, 0)
    }

    pub fn stratified(y: &[usize], seed: u64) -> Self {
        Self::fit(y, BaselineKind::Stratified, seed)
    }

    /// Prediction for the `index`-th row of a batch.
    pub fn predict_at(&self, index: usize) -> usize {
        match self.kind {
            BaselineKind::Majority => self.classes[super::argmax(&self.distribution)],
            BaselineKind::Stratified => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(index as u64);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (c, p) in self.classes.iter().zip(&self.distribution) {
                    acc += p;
                    if u < acc {
                        return *c;
                    }
                }
                *self.classes.last().unwrap()
            }
        }
    }
}
