//! The conformal prediction engine: non-conformity scores, weighting
//! schemes, weighted-quantile calibration, and set construction.
//!
//! Calibration for a test instance works in three steps: score the
//! calibration set once per (model, score kind), weight the scores by the
//! instance's relation to each calibration point, and read off the
//! weighted quantile. Unit weights recover ordinary split conformal
//! prediction exactly.

mod engine;
mod quantile;
mod scorer;
mod weights;

use serde::{Deserialize, Serialize};

pub use engine::{conformal_predict, ConformalOutput};
pub use quantile::{weighted_quantile, weighted_quantile_with_test_mass};
pub use scorer::{build_interval, compute_scores, IntervalShape, PointPredictor, ScoreConfig, Scorer};
pub use weights::{weights_for, SchemeKind, TestInstance, WeightScheme, DEFAULT_ETA_KM2};

/// One scored calibration point with the metadata weight schemes read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationRecord {
    /// Non-conformity score; negative values are legal for CQR scores.
    pub score: f64,
    pub location_km: (f64, f64),
    pub district: u32,
    /// Feature row in the proximity encoding (no coordinates).
    pub features: Vec<f64>,
}

/// A closed prediction interval; either bound may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub lower: f64,
    pub upper: f64,
}

impl PredictionSet {
    pub fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn is_finite(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }
}
