//! Spatial data-generating mechanism: exponential covariance, Gaussian
//! likelihood and its maximization, GLS/kriging regression, and the
//! whitened-residual oracle score.

pub mod covariance;
pub mod gls;
pub mod likelihood;
mod optim;

pub use covariance::{
    build_covariance, cross_covariance, sample_synthetic, CovarianceMatrix, NuggetMode,
    SpatialParams,
};
pub use gls::{
    fit_gls, oracle_scores, oracle_test_score, predict_gls, GlsModel, PredictMode,
};
pub use likelihood::{fit_mle, log_likelihood, log_likelihood_with, MleFit, MleOptions};
