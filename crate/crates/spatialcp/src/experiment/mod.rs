//! The reproducible experiment harness: configuration, synthetic dataset
//! generation, the (model x score x scheme) grid runner, and report
//! emission. The `spatialcp` binary is a thin shell over this module.

pub mod config;
pub mod mle_cmd;
pub mod report;
pub mod runner;
pub mod simulate;
pub mod svg;
pub mod synthetic;

pub use config::{
    CpConfig, DataConfig, DataSource, DgpConfig, ExperimentConfig, GridConfig, ModelConfig,
    ModelKind, OutputConfig, ScoreKind, SourceKind,
};
pub use mle_cmd::{run_fit_mle, MleReport};
pub use report::run_report;
pub use runner::{run_experiment, RunMeta, RunPaths};
pub use simulate::{run_simulate, SimulationSidecar};
pub use synthetic::{generate_dataset, placeholder_beta, SyntheticDataset};

pub(crate) use runner::subsample as runner_subsample;
