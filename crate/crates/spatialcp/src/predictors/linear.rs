//! Ordinary least squares with a ridge fallback for rank-deficient designs.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DesignMatrix;

/// Linear model; `coefficients[0]` is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.coefficients[0]
            + row
                .iter()
                .zip(&self.coefficients[1..])
                .map(|(x, b)| x * b)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        if x.n_cols() + 1 != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len() - 1,
                got: x.n_cols(),
            });
        }
        Ok((0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect())
    }
}

/// Solve the symmetric system `G b = rhs` by Cholesky. If `G` is singular
/// and `ridge_fallback` is set, retry with `1e-8 * trace(G)/p` added to the
/// diagonal; one-hot district columns plus an intercept make this a routine
/// occurrence rather than an error.
pub(crate) fn solve_normal_equations(
    mut g: DMatrix<f64>,
    rhs: &DVector<f64>,
    ridge_fallback: bool,
) -> Result<DVector<f64>> {
    match Cholesky::new(g.clone()) {
        Some(chol) => Ok(chol.solve(rhs)),
        None if ridge_fallback => {
            let p = g.nrows() as f64;
            let bump = 1e-8 * g.trace() / p;
            for i in 0..g.nrows() {
                g[(i, i)] += bump;
            }
            Cholesky::new(g)
                .map(|chol| chol.solve(rhs))
                .ok_or(Error::RankDeficient)
        }
        None => Err(Error::RankDeficient),
    }
}

/// Fit OLS with an intercept. Uses the normal equations with the ridge
/// fallback enabled.
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<LinearModel> {
    fit_ols_with(x, y, true)
}

pub fn fit_ols_with(x: &DesignMatrix, y: &[f64], ridge_fallback: bool) -> Result<LinearModel> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n <= p + 1 {
        return Err(Error::TooFewSamples { needed: p + 2, have: n });
    }

    let design = augmented_design(x);
    let yv = DVector::from_column_slice(y);
    let g = design.transpose() * &design;
    let rhs = design.transpose() * yv;
    let beta = solve_normal_equations(g, &rhs, ridge_fallback)?;
    Ok(LinearModel {
        coefficients: beta.iter().copied().collect(),
    })
}

/// `[1 | X]` as an nalgebra matrix.
pub(crate) fn augmented_design(x: &DesignMatrix) -> DMatrix<f64> {
    let (n, p) = (x.n_rows(), x.n_cols());
    DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x.get(i, j - 1) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> DesignMatrix {
        DesignMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn recovers_exact_linear_relation() {
        let x = matrix((0..10).map(|i| vec![i as f64]).collect());
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let m = fit_ols(&x, &y).unwrap();
        assert!((m.coefficients[1] - 2.0).abs() < 1e-10);
        assert!(m.coefficients[0].abs() < 1e-10);
    }

    #[test]
    fn constant_response_gives_intercept_only() {
        let x = matrix((0..8).map(|i| vec![i as f64, (i * i) as f64]).collect());
        let y = vec![3.5; 8];
        let m = fit_ols(&x, &y).unwrap();
        assert!((m.coefficients[0] - 3.5).abs() < 1e-9);
        assert!(m.coefficients[1].abs() < 1e-9);
        assert!(m.coefficients[2].abs() < 1e-9);
    }

    #[test]
    fn matches_normal_equation_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let n = 50;
        let p = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.0 + r.iter().sum::<f64>() + rng.random_range(-0.1..0.1))
            .collect();
        let x = matrix(rows);

        let m = fit_ols(&x, &y).unwrap();

        // Independent dense solve of the normal equations via LU.
        let design = augmented_design(&x);
        let g = design.transpose() * &design;
        let rhs = design.transpose() * DVector::from_column_slice(&y);
        let oracle = g.lu().solve(&rhs).unwrap();
        for (a, b) in m.coefficients.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn residuals_orthogonal_to_design_columns() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] - r[2] + rng.random_range(-0.5..0.5)).collect();
        let x = matrix(rows);
        let m = fit_ols(&x, &y).unwrap();
        let fitted = m.predict(&x).unwrap();
        let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let r_norm = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..x.n_cols() {
            let col: Vec<f64> = (0..x.n_rows()).map(|i| x.get(i, j)).collect();
            let dot: f64 = col.iter().zip(&resid).map(|(a, b)| a * b).sum();
            let c_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dot.abs() < 1e-6 * c_norm * r_norm.max(1e-12));
        }
    }

    #[test]
    fn collinear_design_uses_ridge_fallback() {
        // Second column duplicates the first.
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..12).map(|i| 3.0 * i as f64).collect();
        let m = fit_ols(&DesignMatrix::from_rows(&rows).unwrap(), &y).unwrap();
        let pred = m.predict_row(&[2.0, 2.0]);
        assert!((pred - 6.0).abs() < 1e-4);

        assert!(matches!(
            fit_ols_with(&DesignMatrix::from_rows(&rows).unwrap(), &y, false),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn predict_checks_dimensions() {
        let m = LinearModel { coefficients: vec![0.0, 2.0] };
        assert_eq!(m.predict_row(&[3.0]), 6.0);
        let wide = matrix(vec![vec![1.0, 2.0]]);
        assert!(matches!(m.predict(&wide), Err(Error::DimensionMismatch { .. })));
    }
}
