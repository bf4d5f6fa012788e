//! Weighted conformal quantiles.

use crate::error::{Error, Result};

/// The weighted `level`-quantile of the scores, with the test point's own
/// mass placed at +infinity.
///
/// Weights are normalized by `sum(w) + 1`, the residual `1/(sum(w) + 1)`
/// sits at +infinity, and the result is the smallest score whose cumulative
/// normalized weight reaches `level` (or +infinity when none does). With
/// unit weights this is exactly the ceil((n+1) * level)-th order statistic
/// convention of split conformal prediction.
pub fn weighted_quantile(scores: &[f64], weights: &[f64], level: f64) -> Result<f64> {
    weighted_quantile_with_test_mass(scores, weights, level, 1.0)
}

/// Same construction with a configurable test-point mass; scaling all
/// weights and the test mass by a common factor leaves the result
/// unchanged.
pub fn weighted_quantile_with_test_mass(
    scores: &[f64],
    weights: &[f64],
    level: f64,
    test_mass: f64,
) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if scores.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: weights.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel);
    }
    if !(test_mass > 0.0 && test_mass.is_finite()) {
        return Err(Error::InvalidParameter("test mass must be positive".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
    }

    let total: f64 = weights.iter().sum();
    // Working with unnormalized cumulative weight against
    // level * (total + test_mass) avoids dividing every weight; the slack
    // absorbs summation rounding at exact grid levels without ever
    // reordering scores separated by a real weight.
    let target = level * (total + test_mass);
    let slack = 1e-9 * target;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    let mut cumulative = 0.0;
    for &i in &order {
        cumulative += weights[i];
        if cumulative + slack >= target {
            return Ok(scores[i]);
        }
    }
    Ok(f64::INFINITY)
}
