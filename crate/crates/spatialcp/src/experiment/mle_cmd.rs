//! `fit-mle`: estimate the spatial covariance parameters of a real-schema
//! CSV and write them as JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::load_transactions;
use crate::error::{Error, Result};
use crate::experiment::config::{DataSource, ExperimentConfig};
use crate::features::{DataPanel, FeatureEncoder};
use crate::predictors::fit_ols;
use crate::spatial::{fit_mle, MleOptions, SpatialParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MleReport {
    pub params: SpatialParams,
    pub beta: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n: usize,
}

/// Fit the covariance parameters on the configured CSV (subsampled to
/// `data.n` when larger) and write `mle.json` into the output directory.
pub fn run_fit_mle(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    let DataSource::Csv { path } = config.data.resolved_source()? else {
        return Err(Error::Config(
            "fit-mle needs [data] source = \"csv\" with a path".into(),
        ));
    };
    let transactions = load_transactions(&path)?;
    let transactions = if transactions.len() > config.data.n {
        super::runner_subsample(&transactions, config.data.n, config.data.base_seed)
    } else {
        transactions
    };

    let encoder = FeatureEncoder::fit(&transactions);
    let panel = DataPanel::build(&transactions, &encoder)?;

    let ols = fit_ols(&panel.linear_x, &panel.y)?;
    let fitted = ols.predict(&panel.linear_x)?;
    let resid_var = panel
        .y
        .iter()
        .zip(&fitted)
        .map(|(y, f)| (y - f) * (y - f))
        .sum::<f64>()
        / panel.len().max(1) as f64;
    let init = SpatialParams {
        sigma_eps2: (resid_var / 2.0).max(1e-4),
        sigma2: (resid_var / 2.0).max(1e-4),
        rho: config.models.mle_rho_init,
    };

    let fit = fit_mle(&panel.linear_x, &panel.y, &panel.locations, &init, MleOptions::default())?;
    let report = MleReport {
        params: fit.params,
        beta: fit.beta,
        log_likelihood: fit.log_likelihood,
        iterations: fit.iterations,
        converged: fit.converged,
        n: panel.len(),
    };

    let dir = Path::new(&config.output.dir);
    std::fs::create_dir_all(dir)?;
    let out = dir.join("mle.json");
    std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
    Ok(out)
}
