//! Difficulty functions: strictly positive normalizers for absolute
//! residuals, turning constant-width conformal sets into adaptive ones.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DataPanel, DesignMatrix};
use crate::predictors::linear::{fit_ols, LinearModel};

/// Default lower bound on the normalizer, in response units.
pub const DIFFICULTY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifficultyVariant {
    /// The point prediction itself.
    PredictionItself,
    /// Mean training sale price of the instance's district.
    DistrictMean,
    /// A linear model of the features fitted to absolute training residuals.
    LinearOnFeatures,
}

/// A fitted difficulty function; every evaluation is clamped at `floor`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DifficultyModel {
    PredictionItself { floor: f64 },
    DistrictMean {
        means: BTreeMap<u32, f64>,
        global_mean: f64,
        floor: f64,
    },
    LinearOnFeatures { model: LinearModel, floor: f64 },
}

/// What a difficulty evaluation may look at: the point prediction, the
/// district, and the linear-encoded feature row.
#[derive(Debug, Clone, Copy)]
pub struct DifficultyInput<'a> {
    pub prediction: f64,
    pub district: u32,
    pub linear_features: &'a [f64],
}

impl DifficultyModel {
    pub fn variant(&self) -> DifficultyVariant {
        match self {
            Self::PredictionItself { .. } => DifficultyVariant::PredictionItself,
            Self::DistrictMean { .. } => DifficultyVariant::DistrictMean,
            Self::LinearOnFeatures { .. } => DifficultyVariant::LinearOnFeatures,
        }
    }

    pub fn evaluate(&self, input: DifficultyInput<'_>) -> f64 {
        match self {
            Self::PredictionItself { floor } => input.prediction.max(*floor),
            Self::DistrictMean { means, global_mean, floor } => means
                .get(&input.district)
                .copied()
                .unwrap_or(*global_mean)
                .max(*floor),
            Self::LinearOnFeatures { model, floor } => {
                model.predict_row(input.linear_features).max(*floor)
            }
        }
    }
}

/// Fit a difficulty function on the training panel. `train_predictions`
/// are the point model's predictions on the same panel; only the
/// linear-on-features variant uses them (through the residuals).
pub fn fit_difficulty(
    variant: DifficultyVariant,
    train: &DataPanel,
    train_predictions: &[f64],
) -> Result<DifficultyModel> {
    if train_predictions.len() != train.len() {
        return Err(Error::LengthMismatch {
            left: train.len(),
            right: train_predictions.len(),
        });
    }
    match variant {
        DifficultyVariant::PredictionItself => Ok(DifficultyModel::PredictionItself {
            floor: DIFFICULTY_FLOOR,
        }),
        DifficultyVariant::DistrictMean => {
            let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
            for (&district, &price) in train.districts.iter().zip(&train.y) {
                let entry = sums.entry(district).or_insert((0.0, 0));
                entry.0 += price;
                entry.1 += 1;
            }
            let means: BTreeMap<u32, f64> = sums
                .into_iter()
                .map(|(d, (sum, count))| (d, sum / count as f64))
                .collect();
            let global_mean = train.y.iter().sum::<f64>() / train.len().max(1) as f64;
            Ok(DifficultyModel::DistrictMean {
                means,
                global_mean,
                floor: DIFFICULTY_FLOOR,
            })
        }
        DifficultyVariant::LinearOnFeatures => {
            let abs_residuals: Vec<f64> = train
                .y
                .iter()
                .zip(train_predictions)
                .map(|(y, p)| (y - p).abs())
                .collect();
            let model = fit_ols(&train.linear_x, &abs_residuals)?;
            Ok(DifficultyModel::LinearOnFeatures {
                model,
                floor: DIFFICULTY_FLOOR,
            })
        }
    }
}

/// Evaluate a difficulty model for one row of a panel.
pub fn evaluate_difficulty(
    model: &DifficultyModel,
    panel_linear_x: &DesignMatrix,
    districts: &[u32],
    predictions: &[f64],
    index: usize,
) -> f64 {
    model.evaluate(DifficultyInput {
        prediction: predictions[index],
        district: districts[index],
        linear_features: panel_linear_x.row(index),
    })
}
