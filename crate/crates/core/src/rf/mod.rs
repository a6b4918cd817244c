//! Random-forest regression: CART trees grown by variance reduction, bagged
//! into a forest, with grid-walk tuning of depth and leaf size.

mod forest;
mod tree;
mod tune;

use thiserror::Error;

pub use forest::{fit_forest, fit_forest_on, predict_forest, tree_rng, RfHyperparams, RfModel};
pub use tree::{fit_tree, grow_tree, TrainingSet, TreeNode, TIE_TOLERANCE};
pub use tune::{tune_hyperparams, SearchMode, Trial, TuneConfig, TuneOutcome, MIN_TUNING_ROWS};

#[derive(Debug, Error, PartialEq)]
pub enum RfError {
    #[error("design has {rows} rows but {targets} targets")]
    DimensionMismatch { rows: usize, targets: usize },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("training data contains non-finite values")]
    NonFinite,
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(&'static str),
    #[error("model expects {expected} features, got {got}")]
    FeatureCount { expected: usize, got: usize },
}
