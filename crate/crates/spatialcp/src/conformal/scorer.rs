//! Non-conformity scores and the per-instance interval geometry they
//! imply.

use serde::{Deserialize, Serialize};

use crate::conformal::{CalibrationRecord, PredictionSet};
use crate::error::{Error, Result};
use crate::features::DataPanel;
use crate::predictors::{DifficultyInput, DifficultyModel, LinearModel, QuantileForest, TreeEnsemble};
use crate::spatial::{GlsModel, PredictMode};

/// A trained point predictor together with the design encoding it expects.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointPredictor {
    Linear(LinearModel),
    Ensemble(TreeEnsemble),
    Spatial(GlsModel),
}

impl PointPredictor {
    pub fn predict_panel(&self, panel: &DataPanel) -> Result<Vec<f64>> {
        match self {
            Self::Linear(model) => model.predict(&panel.linear_x),
            Self::Ensemble(model) => model.predict(&panel.tree_x),
            Self::Spatial(model) => {
                model.predict(&panel.linear_x, &panel.locations, PredictMode::Kriging)
            }
        }
    }
}

/// Which non-conformity score to use, with the attachment it needs.
#[derive(Debug, Clone)]
pub enum ScoreConfig {
    /// Absolute residual `|y - f(x)|`.
    Standard,
    /// Absolute residual divided by a difficulty function.
    Normalized(DifficultyModel),
    /// Conformalized quantile regression: `max(q_lo - y, y - q_hi)` at
    /// levels `alpha/2` and `1 - alpha/2`. May be negative.
    Cqr { forest: QuantileForest, alpha: f64 },
    /// Whitened residuals under a known spatial covariance; the attached
    /// model must be conditioned on the calibration block.
    Oracle(GlsModel),
}

impl ScoreConfig {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Normalized(model) => match model.variant() {
                crate::predictors::DifficultyVariant::PredictionItself => "normalized1",
                crate::predictors::DifficultyVariant::DistrictMean => "normalized2",
                crate::predictors::DifficultyVariant::LinearOnFeatures => "normalized3",
            },
            Self::Cqr { .. } => "cqr",
            Self::Oracle(_) => "oracle",
        }
    }
}

/// A point predictor paired with a score configuration.
#[derive(Debug, Clone)]
pub struct Scorer {
    pub predictor: PointPredictor,
    pub config: ScoreConfig,
}

/// Geometry of one test instance's interval before the quantile is applied.
#[derive(Debug, Clone, Copy)]
pub enum IntervalShape {
    /// `[center - scale * q, center + scale * q]`.
    Symmetric { center: f64, scale: f64 },
    /// `[lo - q, hi + q]` (CQR).
    Band { lo: f64, hi: f64 },
}

impl Scorer {
    pub fn new(predictor: PointPredictor, config: ScoreConfig) -> Self {
        Self { predictor, config }
    }

    /// Score every row of a calibration panel.
    pub fn calibration_records(&self, panel: &DataPanel) -> Result<Vec<CalibrationRecord>> {
        let scores = match &self.config {
            ScoreConfig::Standard => {
                let predictions = self.predictor.predict_panel(panel)?;
                panel
                    .y
                    .iter()
                    .zip(&predictions)
                    .map(|(y, f)| (y - f).abs())
                    .collect::<Vec<f64>>()
            }
            ScoreConfig::Normalized(difficulty) => {
                let predictions = self.predictor.predict_panel(panel)?;
                panel
                    .y
                    .iter()
                    .enumerate()
                    .map(|(i, y)| {
                        let sigma = difficulty.evaluate(DifficultyInput {
                            prediction: predictions[i],
                            district: panel.districts[i],
                            linear_features: panel.linear_x.row(i),
                        });
                        (y - predictions[i]).abs() / sigma
                    })
                    .collect()
            }
            ScoreConfig::Cqr { forest, alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidLevel);
                }
                let taus = [alpha / 2.0, 1.0 - alpha / 2.0];
                let mut scores = Vec::with_capacity(panel.len());
                for i in 0..panel.len() {
                    let q = forest.predict_quantiles(panel.tree_x.row(i), &taus)?;
                    scores.push((q[0] - panel.y[i]).max(panel.y[i] - q[1]));
                }
                scores
            }
            ScoreConfig::Oracle(model) => {
                if model.block_len() != panel.len() {
                    return Err(Error::LengthMismatch {
                        left: model.block_len(),
                        right: panel.len(),
                    });
                }
                model.whitened_residuals().into_iter().map(f64::abs).collect()
            }
        };

        Ok(scores
            .into_iter()
            .enumerate()
            .map(|(i, score)| CalibrationRecord {
                score,
                location_km: panel.locations[i],
                district: panel.districts[i],
                features: panel.proximity_x.row(i).to_vec(),
            })
            .collect())
    }

    /// Interval geometry for every row of a test panel.
    pub fn interval_shapes(&self, panel: &DataPanel) -> Result<Vec<IntervalShape>> {
        match &self.config {
            ScoreConfig::Standard => {
                let predictions = self.predictor.predict_panel(panel)?;
                Ok(predictions
                    .into_iter()
                    .map(|center| IntervalShape::Symmetric { center, scale: 1.0 })
                    .collect())
            }
            ScoreConfig::Normalized(difficulty) => {
                let predictions = self.predictor.predict_panel(panel)?;
                Ok((0..panel.len())
                    .map(|i| {
                        let scale = difficulty.evaluate(DifficultyInput {
                            prediction: predictions[i],
                            district: panel.districts[i],
                            linear_features: panel.linear_x.row(i),
                        });
                        IntervalShape::Symmetric { center: predictions[i], scale }
                    })
                    .collect())
            }
            ScoreConfig::Cqr { forest, alpha } => {
                let taus = [alpha / 2.0, 1.0 - alpha / 2.0];
                let mut shapes = Vec::with_capacity(panel.len());
                for i in 0..panel.len() {
                    let q = forest.predict_quantiles(panel.tree_x.row(i), &taus)?;
                    shapes.push(IntervalShape::Band { lo: q[0], hi: q[1] });
                }
                Ok(shapes)
            }
            ScoreConfig::Oracle(model) => (0..panel.len())
                .map(|i| {
                    let (center, scale) =
                        model.conditional_moments(panel.linear_x.row(i), panel.locations[i])?;
                    Ok(IntervalShape::Symmetric { center, scale })
                })
                .collect(),
        }
    }
}

/// Score a calibration panel once for a (predictor, score) pair.
pub fn compute_scores(scorer: &Scorer, calibration: &DataPanel) -> Result<Vec<CalibrationRecord>> {
    scorer.calibration_records(calibration)
}

/// Turn a quantile into a prediction set. Returns the set and whether a
/// degenerate CQR interval was clamped to its empty midpoint.
pub fn build_interval(shape: &IntervalShape, qhat: f64) -> (PredictionSet, bool) {
    if qhat.is_infinite() {
        return (PredictionSet::unbounded(), false);
    }
    match *shape {
        IntervalShape::Symmetric { center, scale } => (
            PredictionSet {
                lower: center - scale * qhat,
                upper: center + scale * qhat,
            },
            false,
        ),
        IntervalShape::Band { lo, hi } => {
            let lower = lo - qhat;
            let upper = hi + qhat;
            if upper < lower {
                let midpoint = 0.5 * (lo + hi);
                (PredictionSet { lower: midpoint, upper: midpoint }, true)
            } else {
                (PredictionSet { lower, upper }, false)
            }
        }
    }
}
