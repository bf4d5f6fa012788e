//! Per-test-instance conformal prediction over a weighted calibration set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::quantile::weighted_quantile;
use crate::conformal::scorer::{build_interval, Scorer};
use crate::conformal::weights::{weights_for, TestInstance, WeightScheme};
use crate::conformal::{CalibrationRecord, PredictionSet};
use crate::error::Result;
use crate::features::DataPanel;

/// One test instance's prediction set plus calibration diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformalOutput {
    pub set: PredictionSet,
    /// The weighted quantile that produced the set (may be infinite).
    pub quantile: f64,
    /// Kish effective sample size of the weights, `(sum w)^2 / sum w^2`.
    pub effective_sample_size: f64,
    /// All calibration weights were zero (isolated test point).
    pub zero_weight: bool,
    /// A degenerate CQR band was clamped to its empty midpoint.
    pub empty_clamped: bool,
}

/// Run weighted split conformal prediction for every row of a test panel.
///
/// The calibration records are scored once by the caller (they are shared
/// across schemes); each test instance then gets its own weights, weighted
/// quantile, and interval. Instances are independent and processed in
/// parallel.
pub fn conformal_predict(
    scorer: &Scorer,
    records: &[CalibrationRecord],
    test: &DataPanel,
    scheme: &WeightScheme,
    level: f64,
) -> Result<Vec<ConformalOutput>> {
    let shapes = scorer.interval_shapes(test)?;
    let scores: Vec<f64> = records.iter().map(|r| r.score).collect();

    (0..test.len())
        .into_par_iter()
        .map(|i| {
            let instance = TestInstance {
                location_km: test.locations[i],
                district: test.districts[i],
                proximity_features: test.proximity_x.row(i),
            };
            let weights = weights_for(&instance, records, scheme)?;
            let total: f64 = weights.iter().sum();
            let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
            let effective_sample_size = if sum_sq > 0.0 { total * total / sum_sq } else { 0.0 };

            let qhat = weighted_quantile(&scores, &weights, level)?;
            let (set, empty_clamped) = build_interval(&shapes[i], qhat);
            Ok(ConformalOutput {
                set,
                quantile: qhat,
                effective_sample_size,
                zero_weight: total == 0.0,
                empty_clamped,
            })
        })
        .collect()
}
