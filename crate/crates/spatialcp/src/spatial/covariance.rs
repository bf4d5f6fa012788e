//! Exponential spatial covariance with a nugget, dense Cholesky handling,
//! and joint Gaussian sampling of synthetic responses.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::distance_km;
use crate::error::{Error, Result};
use crate::features::DesignMatrix;

/// Parameters of the covariance kernel
/// `sigma2 * exp(-rho * d) + nugget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialParams {
    /// Nugget (observation noise) variance.
    pub sigma_eps2: f64,
    /// Spatially structured variance.
    pub sigma2: f64,
    /// Inverse range per kilometer; the spatial term halves at ln(2)/rho km.
    pub rho: f64,
}

impl SpatialParams {
    pub fn new(sigma_eps2: f64, sigma2: f64, rho: f64) -> Result<Self> {
        let p = Self { sigma_eps2, sigma2, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_ranges()?;
        if self.sigma_eps2 + self.sigma2 > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter("total variance must be positive".into()))
        }
    }

    /// Range checks only; degenerate zero-variance combinations are left
    /// for the Cholesky factorization to reject.
    fn validate_ranges(&self) -> Result<()> {
        let ok = self.sigma_eps2.is_finite()
            && self.sigma2.is_finite()
            && self.rho.is_finite()
            && self.sigma_eps2 >= 0.0
            && self.sigma2 >= 0.0
            && self.rho > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "spatial params out of range: sigma_eps2={}, sigma2={}, rho={}",
                self.sigma_eps2, self.sigma2, self.rho
            )))
        }
    }

    /// Spatial kernel without the nugget.
    pub fn kernel(&self, d_km: f64) -> f64 {
        self.sigma2 * (-self.rho * d_km).exp()
    }

    /// Distance at which the spatial term halves.
    pub fn half_distance_km(&self) -> f64 {
        std::f64::consts::LN_2 / self.rho
    }
}

/// Where the nugget enters the covariance. `Diagonal` is the standard
/// geostatistical form and the default; `Everywhere` adds the nugget to
/// every entry, which keeps the matrix from decaying with distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuggetMode {
    #[default]
    Diagonal,
    Everywhere,
}

/// Dense covariance matrix with its cached lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl CovarianceMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The cached factor with garbage above the diagonal; only read the
    /// lower triangle.
    fn factor(&self) -> &DMatrix<f64> {
        self.chol.l_dirty()
    }

    pub fn lower_triangular(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn log_det(&self) -> f64 {
        let l = self.factor();
        2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
    }

    /// Forward substitution `L u = b`.
    pub fn whiten(&self, b: &[f64]) -> Vec<f64> {
        let l = self.factor();
        let n = b.len();
        let mut u = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= l[(i, j)] * u[j];
            }
            u[i] = acc / l[(i, i)];
        }
        u
    }

    /// `L z` reading only the lower triangle.
    pub fn lower_mul(&self, z: &[f64]) -> Vec<f64> {
        let l = self.factor();
        let n = z.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += l[(i, j)] * z[j];
            }
            y[i] = acc;
        }
        y
    }
}

/// Assemble the covariance matrix of the given locations and factor it.
pub fn build_covariance(
    locations: &[(f64, f64)],
    params: &SpatialParams,
    nugget_mode: NuggetMode,
) -> Result<CovarianceMatrix> {
    params.validate_ranges()?;
    let n = locations.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, cell) in row.iter_mut().enumerate() {
            let d = distance_km(locations[i], locations[j]);
            let spatial = params.kernel(d);
            *cell = match nugget_mode {
                NuggetMode::Diagonal if i == j => spatial + params.sigma_eps2,
                NuggetMode::Diagonal => spatial,
                NuggetMode::Everywhere => spatial + params.sigma_eps2,
            };
        }
    });
    let matrix = DMatrix::from_row_slice(n, n, &data);
    let chol = Cholesky::new(matrix.clone()).ok_or(Error::NotPositiveDefinite)?;

    // Rounding can let a semidefinite matrix (rank-one everywhere-nugget,
    // coincident points without noise) squeak through with a vanishing
    // pivot; treat that as not positive definite.
    let l = chol.l_dirty();
    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(matrix[(i, i)]));
    for i in 0..n {
        if l[(i, i)] * l[(i, i)] <= 1e-12 * max_diag {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(CovarianceMatrix { matrix, chol })
}

/// Cross-covariance between two location sets from the kernel without the
/// nugget (rows index `a`, columns index `b`).
pub fn cross_covariance(
    a: &[(f64, f64)],
    b: &[(f64, f64)],
    params: &SpatialParams,
) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        params.kernel(distance_km(a[i], b[j]))
    })
}

/// Mean vector `X beta` where `beta` carries the intercept first.
pub(crate) fn mean_vector(x: &DesignMatrix, beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != x.n_cols() + 1 {
        return Err(Error::DimensionMismatch {
            expected: x.n_cols() + 1,
            got: beta.len(),
        });
    }
    Ok((0..x.n_rows())
        .map(|i| {
            beta[0]
                + x.row(i)
                    .iter()
                    .zip(&beta[1..])
                    .map(|(v, b)| v * b)
                    .sum::<f64>()
        })
        .collect())
}

/// Draw one response vector `y = X beta + L z` with iid standard normal
/// `z` from a seeded generator.
pub fn sample_synthetic(
    x: &DesignMatrix,
    locations: &[(f64, f64)],
    params: &SpatialParams,
    beta: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    if locations.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: locations.len(),
        });
    }
    let cov = build_covariance(locations, params, NuggetMode::Diagonal)?;
    let mean = mean_vector(x, beta)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..x.n_rows())
        .map(|_| rng.sample(rand_distr::StandardNormal))
        .collect();
    let spatial = cov.lower_mul(&z);
    Ok(mean.iter().zip(&spatial).map(|(m, s)| m + s).collect())
}
