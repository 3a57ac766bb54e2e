//! Multi-class stance predictors.
//!
//! Class labels are plain indices (stance codes for SDQC data). Every model
//! breaks ties towards the lowest label.

mod baseline;
mod linear;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, SparseRow};

pub use baseline::BaselineModel;
pub use linear::{class_weights, fit_logistic_binary, fit_svm_binary, logistic_objective, BinaryFit, LinearModel};
pub use tree::{root_split, Criterion, FeatureSubset, ForestModel, Node, SplitChoice, TreeModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Index of the largest value; ties go to the first.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Svm,
    Tree,
    Forest,
    Majority,
    Stratified,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "logistic" | "logit" => ModelKind::Logistic,
            "svm" => ModelKind::Svm,
            "tree" => ModelKind::Tree,
            "forest" | "rf" => ModelKind::Forest,
            "majority" | "mv" | "mj" => ModelKind::Majority,
            "stratified" | "sc" => ModelKind::Stratified,
            other => return Err(Error::config(format!("unknown model kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L1,
    #[default]
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    #[default]
    Uniform,
    Balanced,
}

impl ClassWeight {
    pub fn is_balanced(self) -> bool {
        self == ClassWeight::Balanced
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvmLoss {
    #[default]
    Hinge,
    SquaredHinge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub features_per_split: FeatureSubset,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, features_per_split: FeatureSubset::Sqrt, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { criterion: Criterion::Entropy, max_depth: None, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub c: f64,
    pub penalty: Penalty,
    pub class_weight: ClassWeight,
    /// Accepted for parameter-grid compatibility; both solvers ignore it.
    pub dual: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub svm_loss: SvmLoss,
    /// Value of the constant feature the SVM uses to learn its bias.
    pub intercept_scaling: f64,
    pub forest: ForestConfig,
    pub tree: TreeConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kind: ModelKind::Svm,
            c: 1.0,
            penalty: Penalty::L2,
            class_weight: ClassWeight::Uniform,
            dual: true,
            tolerance: 1e-4,
            max_iterations: 1000,
            seed: 0,
            svm_loss: SvmLoss::Hinge,
            intercept_scaling: 1.0,
            forest: ForestConfig::default(),
            tree: TreeConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn new(kind: ModelKind) -> Self {
        TrainConfig { kind, ..Default::default() }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_class_weight(mut self, w: ClassWeight) -> Self {
        self.class_weight = w;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("C must be positive, got {}", self.c)));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.penalty == Penalty::L1 && matches!(self.kind, ModelKind::Logistic | ModelKind::Svm) {
            return Err(Error::config("L1 penalty is not supported; use l2"));
        }
        if self.kind == ModelKind::Forest && self.forest.n_trees == 0 {
            return Err(Error::config("forest needs at least one tree"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TrainedModel {
    Linear(LinearModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Baseline(BaselineModel),
}

/// A trained model bound to the feature layout it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub format_version: u32,
    pub config: TrainConfig,
    pub n_features: usize,
    pub fingerprint: String,
    pub model: TrainedModel,
}

impl Classifier {
    pub fn classes(&self) -> &[usize] {
        match &self.model {
            TrainedModel::Linear(m) => &m.classes,
            TrainedModel::Tree(m) => &m.classes,
            TrainedModel::Forest(m) => &m.classes,
            TrainedModel::Baseline(m) => &m.classes,
        }
    }

    /// Predict one row. Stratified baselines draw from a generator seeded by `seed` and `row_index`.
    fn predict_one(&self, x: SparseRow<'_>, row_index: usize) -> usize {
        match &self.model {
            TrainedModel::Linear(m) => m.predict(x),
            TrainedModel::Tree(m) => m.predict(x),
            TrainedModel::Forest(m) => m.predict(x),
            TrainedModel::Baseline(m) => m.predict_at(row_index),
        }
    }

    pub fn predict(&self, x: SparseRow<'_>) -> Result<usize> {
        if x.indices.last().is_some_and(|&j| j as usize >= self.n_features) {
            return Err(Error::Dimension { expected: self.n_features, actual: *x.indices.last().unwrap() as usize + 1 });
        }
        Ok(self.predict_one(x, 0))
    }

    /// Predict every row; refuses matrices with a different dimension or column layout.
    pub fn predict_batch(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        self.check_layout(x)?;
        Ok(x.rows().enumerate().map(|(i, r)| self.predict_one(r, i)).collect())
    }

    pub fn check_layout(&self, x: &FeatureMatrix) -> Result<()> {
        if x.n_cols() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, actual: x.n_cols() });
        }
        let fp = x.fingerprint();
        if fp != self.fingerprint {
            return Err(Error::invalid(format!(
                "feature fingerprint mismatch: model {} vs input {fp}",
                self.fingerprint
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Classifier = serde_json::from_str(s)?;
        if c.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported model format version {}", c.format_version)));
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

/// Distinct labels in ascending order.
pub fn class_list(y: &[usize]) -> Vec<usize> {
    let mut c = y.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Train a model of `config.kind` on rows of `x` labelled `y`.
pub fn train(x: &FeatureMatrix, y: &[usize], config: &TrainConfig) -> Result<Classifier> {
    Ok(train_with_history(x, y, config)?.0)
}

/// Like [`train`], also returning per-class objective histories for the linear models.
pub fn train_with_history(
    x: &FeatureMatrix,
    y: &[usize],
    config: &TrainConfig,
) -> Result<(Classifier, Vec<Vec<f64>>)> {
    config.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if y.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if !x.all_finite() {
        return Err(Error::invalid("training features contain non-finite values"));
    }
    let classes = class_list(y);
    let needs_two = !matches!(config.kind, ModelKind::Majority | ModelKind::Stratified);
    if needs_two && classes.len() < 2 {
        return Err(Error::invalid("training data contains a single class"));
    }
    let cw = class_weights(y, &classes, config.class_weight.is_balanced());
    let tree_params = |features| tree::TreeParams {
        criterion: config.tree.criterion,
        max_depth: config.tree.max_depth,
        min_samples_split: config.tree.min_samples_split.max(2),
        features,
    };
    let mut histories = Vec::new();
    let model = match config.kind {
        ModelKind::Logistic | ModelKind::Svm => {
            let (m, h) = linear::fit_ovr(x, y, &classes, config, config.kind == ModelKind::Logistic);
            histories = h;
            TrainedModel::Linear(m)
        }
        ModelKind::Tree => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
            let params = tree_params(FeatureSubset::All);
            TrainedModel::Tree(tree::grow(x, y, &classes, &cw, (0..y.len()).collect(), &params, &mut rng))
        }
        ModelKind::Forest => TrainedModel::Forest(tree::grow_forest(
            x,
            y,
            &classes,
            &cw,
            config.forest.n_trees,
            config.forest.bootstrap,
            &tree_params(config.forest.features_per_split),
            config.seed,
        )),
        ModelKind::Majority => TrainedModel::Baseline(BaselineModel::majority(y)),
        ModelKind::Stratified => TrainedModel::Baseline(BaselineModel::stratified(y, config.seed)),
    };
    Ok((
        Classifier {
            format_version: MODEL_FORMAT_VERSION,
            config: config.clone(),
            n_features: x.n_cols(),
            fingerprint: x.fingerprint(),
            model,
        },
        histories,
    ))
}
