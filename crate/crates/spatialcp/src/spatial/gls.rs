//! Generalized least squares under the spatial covariance, kriging
//! prediction, and the whitened-residual oracle score.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DesignMatrix;
use crate::spatial::covariance::{
    build_covariance, cross_covariance, mean_vector, CovarianceMatrix, NuggetMode, SpatialParams,
};
use crate::spatial::likelihood::profiled_coefficients;

/// How `GlsModel::predict` treats new locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictMode {
    /// The regression surface only.
    MeanOnly,
    /// Regression surface plus the covariance-weighted residual correction.
    #[default]
    Kriging,
}

/// A GLS fit bound to the data block it was computed on. The block's
/// covariance factor and the solved residual vector are cached so kriging
/// predictions and conditional moments are cheap per query.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GlsModelRepr", into = "GlsModelRepr")]
pub struct GlsModel {
    beta: Vec<f64>,
    params: SpatialParams,
    locations: Vec<(f64, f64)>,
    residuals: Vec<f64>,
    solve_cache: Vec<f64>,
    cov: CovarianceMatrix,
}

/// Serialized form: the cached factorization is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GlsModelRepr {
    beta: Vec<f64>,
    params: SpatialParams,
    locations: Vec<(f64, f64)>,
    residuals: Vec<f64>,
}

impl From<GlsModel> for GlsModelRepr {
    fn from(model: GlsModel) -> Self {
        Self {
            beta: model.beta,
            params: model.params,
            locations: model.locations,
            residuals: model.residuals,
        }
    }
}

impl TryFrom<GlsModelRepr> for GlsModel {
    type Error = Error;

    fn try_from(repr: GlsModelRepr) -> Result<Self> {
        let cov = build_covariance(&repr.locations, &repr.params, NuggetMode::Diagonal)?;
        let solve_cache = cov
            .solve_vec(&DVector::from_column_slice(&repr.residuals))
            .iter()
            .copied()
            .collect();
        Ok(Self {
            beta: repr.beta,
            params: repr.params,
            locations: repr.locations,
            residuals: repr.residuals,
            solve_cache,
            cov,
        })
    }
}

impl GlsModel {
    /// Estimate the coefficients by GLS on the given block.
    pub fn fit(
        x: &DesignMatrix,
        y: &[f64],
        locations: &[(f64, f64)],
        params: &SpatialParams,
    ) -> Result<Self> {
        let cov = build_covariance(locations, params, NuggetMode::Diagonal)?;
        let (beta, residuals) = profiled_coefficients(&cov, x, y)?;
        Self::assemble(beta, *params, locations.to_vec(), residuals, cov)
    }

    /// Bind externally supplied coefficients to a (possibly different)
    /// data block; residuals are recomputed against that block.
    pub fn with_coefficients(
        beta: Vec<f64>,
        x: &DesignMatrix,
        y: &[f64],
        locations: &[(f64, f64)],
        params: &SpatialParams,
    ) -> Result<Self> {
        let cov = build_covariance(locations, params, NuggetMode::Diagonal)?;
        let mean = mean_vector(x, &beta)?;
        let residuals: Vec<f64> = y.iter().zip(&mean).map(|(a, b)| a - b).collect();
        Self::assemble(beta, *params, locations.to_vec(), residuals, cov)
    }

    fn assemble(
        beta: Vec<f64>,
        params: SpatialParams,
        locations: Vec<(f64, f64)>,
        residuals: Vec<f64>,
        cov: CovarianceMatrix,
    ) -> Result<Self> {
        let solve_cache: Vec<f64> = cov
            .solve_vec(&DVector::from_column_slice(&residuals))
            .iter()
            .copied()
            .collect();
        Ok(Self {
            beta,
            params,
            locations,
            residuals,
            solve_cache,
            cov,
        })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn params(&self) -> &SpatialParams {
        &self.params
    }

    pub fn block_len(&self) -> usize {
        self.locations.len()
    }

    pub fn predict(
        &self,
        x_new: &DesignMatrix,
        locations_new: &[(f64, f64)],
        mode: PredictMode,
    ) -> Result<Vec<f64>> {
        if locations_new.len() != x_new.n_rows() {
            return Err(Error::LengthMismatch {
                left: x_new.n_rows(),
                right: locations_new.len(),
            });
        }
        let mut predictions = mean_vector(x_new, &self.beta)?;
        if mode == PredictMode::Kriging {
            let cross = cross_covariance(locations_new, &self.locations, &self.params);
            for (i, p) in predictions.iter_mut().enumerate() {
                let correction: f64 = (0..self.locations.len())
                    .map(|j| cross[(i, j)] * self.solve_cache[j])
                    .sum();
                *p += correction;
            }
        }
        Ok(predictions)
    }

    /// Conditional mean and standard deviation of a new response given the
    /// model's data block, including the nugget in the predictive variance.
    pub fn conditional_moments(&self, x_row: &[f64], location: (f64, f64)) -> Result<(f64, f64)> {
        if x_row.len() + 1 != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len() - 1,
                got: x_row.len(),
            });
        }
        let trend = self.beta[0]
            + x_row
                .iter()
                .zip(&self.beta[1..])
                .map(|(v, b)| v * b)
                .sum::<f64>();
        let cross: Vec<f64> = self
            .locations
            .iter()
            .map(|&l| self.params.kernel(crate::dataset::distance_km(l, location)))
            .collect();
        let mean = trend
            + cross
                .iter()
                .zip(&self.solve_cache)
                .map(|(c, s)| c * s)
                .sum::<f64>();
        let whitened_cross = self.cov.whiten(&cross);
        let explained: f64 = whitened_cross.iter().map(|v| v * v).sum();
        let prior_var = self.params.sigma_eps2 + self.params.sigma2;
        let variance = (prior_var - explained).max(1e-12);
        Ok((mean, variance.sqrt()))
    }

    /// The block residuals whitened by the covariance factor: `L^-1 r`.
    pub fn whitened_residuals(&self) -> Vec<f64> {
        self.cov.whiten(&self.residuals)
    }
}

/// Fit a GLS model (spec-level convenience wrapper).
pub fn fit_gls(
    x: &DesignMatrix,
    y: &[f64],
    locations: &[(f64, f64)],
    params: &SpatialParams,
) -> Result<GlsModel> {
    GlsModel::fit(x, y, locations, params)
}

pub fn predict_gls(
    model: &GlsModel,
    x_new: &DesignMatrix,
    locations_new: &[(f64, f64)],
    mode: PredictMode,
) -> Result<Vec<f64>> {
    model.predict(x_new, locations_new, mode)
}

/// Whitened absolute residuals of a calibration block:
/// `|L^-1 (y - X beta)|` with `L` the Cholesky factor of `cov`.
pub fn oracle_scores(
    y: &[f64],
    x: &DesignMatrix,
    beta: &[f64],
    cov: &CovarianceMatrix,
) -> Result<Vec<f64>> {
    if y.len() != x.n_rows() || cov.n() != y.len() {
        return Err(Error::LengthMismatch { left: x.n_rows(), right: y.len() });
    }
    let mean = mean_vector(x, beta)?;
    let residuals: Vec<f64> = y.iter().zip(&mean).map(|(a, b)| a - b).collect();
    Ok(cov.whiten(&residuals).into_iter().map(f64::abs).collect())
}

/// Standardized distance of a candidate response from its conditional
/// distribution given the model's block.
pub fn oracle_test_score(
    y_candidate: f64,
    x_row: &[f64],
    location: (f64, f64),
    model: &GlsModel,
) -> Result<f64> {
    let (mean, sd) = model.conditional_moments(x_row, location)?;
    Ok((y_candidate - mean).abs() / sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictors::fit_ols;
    use crate::spatial::covariance::sample_synthetic;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_setup(n: usize, seed: u64) -> (DesignMatrix, Vec<(f64, f64)>) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let locations: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)))
            .collect();
        (DesignMatrix::from_rows(&rows).unwrap(), locations)
    }

    #[test]
    fn gls_equals_ols_under_iid_noise() {
        let (x, locations) = random_setup(80, 1);
        let params = SpatialParams::new(0.4, 0.0, 1.0).unwrap();
        let y = sample_synthetic(&x, &locations, &params, &[1.0, 2.0, -1.0], 5).unwrap();

        let gls = GlsModel::fit(&x, &y, &locations, &params).unwrap();
        let ols = fit_ols(&x, &y).unwrap();
        for (a, b) in gls.beta().iter().zip(&ols.coefficients) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }

        // Kriging corrections vanish: the cross covariance is identically 0.
        let mean_only = gls.predict(&x, &locations, PredictMode::MeanOnly).unwrap();
        let kriged = gls.predict(&x, &locations, PredictMode::Kriging).unwrap();
        for (a, b) in mean_only.iter().zip(&kriged) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn gls_matches_ols_for_any_scalar_covariance() {
        let (x, locations) = random_setup(60, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let y: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..5.0)).collect();
        let ols = fit_ols(&x, &y).unwrap();
        for c in [0.1, 1.0, 7.5] {
            let params = SpatialParams::new(c, 0.0, 1.0).unwrap();
            let gls = GlsModel::fit(&x, &y, &locations, &params).unwrap();
            for (a, b) in gls.beta().iter().zip(&ols.coefficients) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn noiseless_kriging_interpolates_training_points() {
        let (x, locations) = random_setup(40, 4);
        let params = SpatialParams::new(0.0, 0.8, 2.0).unwrap();
        let y = sample_synthetic(&x, &locations, &params, &[0.5, 1.0, 0.0], 8).unwrap();
        let gls = GlsModel::fit(&x, &y, &locations, &params).unwrap();
        let fitted = gls.predict(&x, &locations, PredictMode::Kriging).unwrap();
        for (f, t) in fitted.iter().zip(&y) {
            assert!((f - t).abs() < 1e-6, "{f} vs {t}");
        }
    }

    #[test]
    fn kriging_matches_dense_inverse_oracle() {
        let x = DesignMatrix::from_rows(&[vec![0.1], vec![0.4], vec![-0.2], vec![0.9]]).unwrap();
        let locations = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.7), (0.8, 0.8)];
        let params = SpatialParams::new(0.2, 0.6, 1.5).unwrap();
        let y = [1.0, 1.4, 0.7, 2.2];
        let gls = GlsModel::fit(&x, &y, &locations, &params).unwrap();

        let x_new = DesignMatrix::from_rows(&[vec![0.3]]).unwrap();
        let loc_new = [(0.25, 0.3)];
        let predicted = gls.predict(&x_new, &loc_new, PredictMode::Kriging).unwrap()[0];

        // Brute force: explicit inverse, explicit GLS coefficients.
        let cov = build_covariance(&locations, &params, NuggetMode::Diagonal).unwrap();
        let inv = cov.matrix().clone().try_inverse().unwrap();
        let design = crate::predictors::linear::augmented_design(&x);
        let gram = design.transpose() * &inv * &design;
        let rhs = design.transpose() * &inv * DVector::from_column_slice(&y);
        let beta = gram.clone().try_inverse().unwrap() * rhs;
        let resid = DVector::from_column_slice(&y) - &design * &beta;
        let cross = DMatrix::from_fn(1, 4, |_, j| {
            params.kernel(crate::dataset::distance_km(loc_new[0], locations[j]))
        });
        let correction = (&cross * &inv * &resid)[(0, 0)];
        let oracle = beta[0] + beta[1] * 0.3 + correction;
        assert!((predicted - oracle).abs() < 1e-8, "{predicted} vs {oracle}");
    }

    #[test]
    fn conditional_moments_match_dense_inverse_oracle() {
        let x = DesignMatrix::from_rows(&[vec![0.1], vec![0.4], vec![-0.2], vec![0.9]]).unwrap();
        let locations = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.7), (0.8, 0.8)];
        let params = SpatialParams::new(0.2, 0.6, 1.5).unwrap();
        let y = [1.0, 1.4, 0.7, 2.2];
        let gls = GlsModel::fit(&x, &y, &locations, &params).unwrap();

        let loc_new = (0.25, 0.3);
        let (_, sd) = gls.conditional_moments(&[0.3], loc_new).unwrap();

        let cov = build_covariance(&locations, &params, NuggetMode::Diagonal).unwrap();
        let inv = cov.matrix().clone().try_inverse().unwrap();
        let cross = DVector::from_fn(4, |j, _| {
            params.kernel(crate::dataset::distance_km(loc_new, locations[j]))
        });
        let explained = (cross.transpose() * &inv * &cross)[(0, 0)];
        let oracle_var = params.sigma_eps2 + params.sigma2 - explained;
        assert!((sd * sd - oracle_var).abs() < 1e-8);
    }

    #[test]
    fn identity_covariance_recovers_absolute_residuals() {
        let x = DesignMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = [4.5, 3.0, 5.5];
        let beta = [1.0, 1.0];
        // Far-apart locations with unit nugget make the covariance identity.
        let params = SpatialParams::new(1.0, 0.0, 1.0).unwrap();
        let locations = [(0.0, 0.0), (100.0, 0.0), (0.0, 100.0)];
        let cov = build_covariance(&locations, &params, NuggetMode::Diagonal).unwrap();
        let scores = oracle_scores(&y, &x, &beta, &cov).unwrap();
        // Residuals: 4.5-2=2.5, 3-3=0, 5.5-4=1.5.
        assert!((scores[0] - 2.5).abs() < 1e-12);
        assert!(scores[1].abs() < 1e-12);
        assert!((scores[2] - 1.5).abs() < 1e-12);

        // Scaled identity halves the scores at variance 4.
        let scaled = SpatialParams::new(4.0, 0.0, 1.0).unwrap();
        let cov4 = build_covariance(&locations, &scaled, NuggetMode::Diagonal).unwrap();
        let scores4 = oracle_scores(&y, &x, &beta, &cov4).unwrap();
        for (s, s4) in scores.iter().zip(&scores4) {
            assert!((s / 2.0 - s4).abs() < 1e-12);
        }
    }

    #[test]
    fn whitened_residuals_under_true_mechanism_are_standard_normal() {
        let (x, locations) = random_setup(2000, 9);
        let params = SpatialParams::new(0.3, 0.3, 4.0).unwrap();
        let beta = [1.0, 0.5, -0.5];
        let y = sample_synthetic(&x, &locations, &params, &beta, 17).unwrap();
        let cov = build_covariance(&locations, &params, NuggetMode::Diagonal).unwrap();
        let scores = oracle_scores(&y, &x, &beta, &cov).unwrap();

        // |N(0,1)| has mean sqrt(2/pi) and variance 1 - 2/pi; check the
        // second moment (variance of the signed values) instead.
        let second_moment: f64 =
            scores.iter().map(|s| s * s).sum::<f64>() / scores.len() as f64;
        assert!((0.9..1.1).contains(&second_moment), "second moment {second_moment}");
    }

    #[test]
    fn serialization_round_trips_predictions() {
        let (x, locations) = random_setup(30, 10);
        let params = SpatialParams::new(0.2, 0.5, 2.0).unwrap();
        let y = sample_synthetic(&x, &locations, &params, &[1.0, 0.3, 0.3], 21).unwrap();
        let gls = GlsModel::fit(&x, &y, &locations, &params).unwrap();
        let json = serde_json::to_string(&gls).unwrap();
        let restored: GlsModel = serde_json::from_str(&json).unwrap();
        let (x_new, loc_new) = random_setup(5, 11);
        let a = gls.predict(&x_new, &loc_new, PredictMode::Kriging).unwrap();
        let b = restored.predict(&x_new, &loc_new, PredictMode::Kriging).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
