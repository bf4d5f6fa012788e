//! Point-prediction and quantile models used to build non-conformity
//! scores, plus the difficulty functions that normalize them.

pub mod difficulty;
pub mod ensemble;
pub mod linear;
pub mod qrf;
pub mod tree;

pub use difficulty::{
    fit_difficulty, evaluate_difficulty, DifficultyInput, DifficultyModel, DifficultyVariant,
    DIFFICULTY_FLOOR,
};
pub use ensemble::{
    fit_gbt, fit_random_forest, rf_proximity, EnsembleKind, GbtParams, ProximityKernel,
    RandomForestParams, TreeEnsemble,
};
pub use linear::{fit_ols, fit_ols_with, LinearModel};
pub use qrf::{fit_qrf, QrfParams, QuantileForest};
pub use tree::{Tree, TreeNode};
