//! Metrics, stratified splits and the experiment harness.

mod harness;
mod metrics;
mod split;

pub use harness::{
    ablation, cross_validate, cross_validate_with, grid_search, learning_curve, random_search, AblationRow,
    LearningPoint, ParamGrid, SearchOutcome,
};
pub use metrics::{ConfusionMatrix, CvReport, MeanStd, MetricsReport};
pub use split::{complement, stratified_kfold, stratified_split};
