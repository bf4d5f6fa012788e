//! Weighted split conformal prediction for spatially indexed regression.
//!
//! The crate covers the full pipeline for studying locally weighted
//! conformal prediction on housing-style data: a transaction data model
//! with planar projection and reproducible splits ([`dataset`]), point and
//! quantile predictors ([`predictors`]), a joint-Gaussian spatial
//! data-generating mechanism with MLE and kriging ([`spatial`]), the
//! weighted conformal engine itself ([`conformal`]), coverage and
//! efficiency diagnostics ([`evaluation`]), and a reproducible experiment
//! runner ([`experiment`]).
//!
//! Start with the runnable examples (`cargo run --example ...`); each one
//! demonstrates a single capability end to end.

pub mod conformal;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod predictors;
pub mod spatial;

pub use error::{Error, Result};
