//! The five calibration-weight schemes.

use serde::{Deserialize, Serialize};

use crate::conformal::CalibrationRecord;
use crate::dataset::distance_km;
use crate::error::{Error, Result};
use crate::predictors::ProximityKernel;

/// Spatial-kernel bandwidth (km^2) at which the weight halves after 0.8 km:
/// solves exp(-0.8^2 / eta) = 1/2.
pub const DEFAULT_ETA_KM2: f64 = 0.64 / std::f64::consts::LN_2;

/// How calibration scores are weighted relative to a test instance.
#[derive(Debug, Clone)]
pub enum WeightScheme {
    /// Every calibration point counts equally (plain split CP).
    Uniform,
    /// Unit weight within the test instance's district, zero elsewhere.
    Mondrian,
    /// Gaussian kernel in geographic distance: `exp(-d^2 / eta)`.
    SpatialGaussian { eta_km2: f64 },
    /// Unit weight strictly inside `radius_km`, zero outside.
    NearestNeighbor { radius_km: f64 },
    /// Random-forest proximity in feature space (coordinates excluded).
    FeatureRf(ProximityKernel),
}

impl WeightScheme {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Uniform => "cp",
            Self::Mondrian => "mcp",
            Self::SpatialGaussian { .. } => "scp",
            Self::NearestNeighbor { .. } => "nncp",
            Self::FeatureRf(_) => "fwcp",
        }
    }
}

/// Identifier form of a scheme for configs and result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Cp,
    Mcp,
    Scp,
    Nncp,
    Fwcp,
}

/// The parts of a test instance the weight schemes can look at.
#[derive(Debug, Clone, Copy)]
pub struct TestInstance<'a> {
    pub location_km: (f64, f64),
    pub district: u32,
    /// Feature row in the proximity encoding.
    pub proximity_features: &'a [f64],
}

/// Raw (unnormalized) weights of each calibration record for one test
/// instance; normalization happens inside the weighted quantile. A test
/// district unseen in calibration yields all-zero Mondrian weights, which
/// the quantile turns into an honest infinite set.
pub fn weights_for(
    test: &TestInstance<'_>,
    records: &[CalibrationRecord],
    scheme: &WeightScheme,
) -> Result<Vec<f64>> {
    match scheme {
        WeightScheme::Uniform => Ok(vec![1.0; records.len()]),
        WeightScheme::Mondrian => Ok(records
            .iter()
            .map(|r| if r.district == test.district { 1.0 } else { 0.0 })
            .collect()),
        WeightScheme::SpatialGaussian { eta_km2 } => {
            if !(*eta_km2 > 0.0) {
                return Err(Error::InvalidParameter("eta must be positive".into()));
            }
            Ok(records
                .iter()
                .map(|r| {
                    let d = distance_km(test.location_km, r.location_km);
                    (-d * d / eta_km2).exp()
                })
                .collect())
        }
        WeightScheme::NearestNeighbor { radius_km } => {
            if !(*radius_km > 0.0) {
                return Err(Error::InvalidParameter("radius must be positive".into()));
            }
            Ok(records
                .iter()
                .map(|r| {
                    if distance_km(test.location_km, r.location_km) < *radius_km {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect())
        }
        WeightScheme::FeatureRf(kernel) => {
            let w = kernel.weights(test.proximity_features);
            if w.len() != records.len() {
                return Err(Error::LengthMismatch {
                    left: w.len(),
                    right: records.len(),
                });
            }
            Ok(w)
        }
    }
}
