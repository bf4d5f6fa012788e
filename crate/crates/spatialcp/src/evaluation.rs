//! Coverage and efficiency diagnostics: marginal and per-district coverage
//! gaps, the exact beta-binomial coverage law, and point-accuracy metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::conformal::PredictionSet;
use crate::error::{Error, Result};

/// Marginal coverage and efficiency of a batch of prediction sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Fraction of responses inside their (closed) prediction set.
    pub coverage: f64,
    /// `(1 - alpha) - coverage`; positive means undercoverage.
    pub coverage_gap: f64,
    /// Mean width over finite sets (NaN when none are finite).
    pub mean_width: f64,
    /// Mean of `100 * width / y` over finite sets, in percent.
    pub relative_efficiency: f64,
    /// Number of unbounded sets; these count as covered but are excluded
    /// from the width averages.
    pub n_infinite_sets: usize,
}

/// Coverage and gap of prediction sets against the realized responses.
/// Intervals are closed, so boundary hits count as covered.
pub fn coverage_report(
    intervals: &[PredictionSet],
    y_true: &[f64],
    alpha: f64,
) -> Result<CoverageReport> {
    if intervals.len() != y_true.len() {
        return Err(Error::LengthMismatch {
            left: intervals.len(),
            right: y_true.len(),
        });
    }
    if intervals.is_empty() {
        return Err(Error::EmptyScores);
    }
    if y_true.iter().any(|&y| y <= 0.0) {
        return Err(Error::NonPositiveResponse);
    }

    let mut covered = 0usize;
    let mut n_infinite = 0usize;
    let mut width_sum = 0.0;
    let mut relative_sum = 0.0;
    let mut n_finite = 0usize;
    for (set, &y) in intervals.iter().zip(y_true) {
        if set.is_finite() {
            n_finite += 1;
            width_sum += set.width();
            relative_sum += 100.0 * set.width() / y;
            if set.contains(y) {
                covered += 1;
            }
        } else {
            n_infinite += 1;
            covered += 1;
        }
    }

    let coverage = covered as f64 / intervals.len() as f64;
    let (mean_width, relative_efficiency) = if n_finite > 0 {
        (width_sum / n_finite as f64, relative_sum / n_finite as f64)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(CoverageReport {
        coverage,
        coverage_gap: (1.0 - alpha) - coverage,
        mean_width,
        relative_efficiency,
        n_infinite_sets: n_infinite,
    })
}

/// The exact distribution of split-CP coverage under exchangeability:
/// `Coverage ~ Binom(n_test, mu) / n_test` with `mu ~ Beta(n + 1 - l, l)`
/// and `l = floor(alpha (n + 1))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BetaBinomialRef {
    pub n_calibration: usize,
    pub n_test: usize,
    pub alpha: f64,
    pub l: usize,
    pub beta_a: f64,
    pub beta_b: f64,
}

impl BetaBinomialRef {
    pub fn new(n_calibration: usize, n_test: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidLevel);
        }
        if n_test == 0 {
            return Err(Error::InvalidParameter("empty test set".into()));
        }
        let l = (alpha * (n_calibration + 1) as f64).floor() as usize;
        if l < 1 || l > n_calibration {
            return Err(Error::InvalidParameter(format!(
                "beta-binomial reference needs 1 <= l <= n, got l = {l}"
            )));
        }
        Ok(Self {
            n_calibration,
            n_test,
            alpha,
            l,
            beta_a: (n_calibration + 1 - l) as f64,
            beta_b: l as f64,
        })
    }

    /// log pmf of `k` covered out of `n_test` via log-gamma:
    /// `C(N, k) B(k + a, N - k + b) / B(a, b)`.
    pub fn ln_pmf(&self, k: usize) -> f64 {
        let n = self.n_test as f64;
        let k = k as f64;
        let (a, b) = (self.beta_a, self.beta_b);
        let ln_choose = ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0);
        ln_choose + ln_beta(k + a, n - k + b) - ln_beta(a, b)
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// Smallest coverage value `k / n_test` with cumulative mass >= `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidLevel);
        }
        let mut cumulative = 0.0;
        for k in 0..=self.n_test {
            cumulative += self.pmf(k);
            if cumulative >= p {
                return Ok(k as f64 / self.n_test as f64);
            }
        }
        Ok(1.0)
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Convenience wrapper around [`BetaBinomialRef::quantile`].
pub fn beta_binomial_quantile(reference: &BetaBinomialRef, p: f64) -> Result<f64> {
    reference.quantile(p)
}

/// Per-district conditional coverage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistrictEntry {
    pub district: u32,
    pub count: usize,
    pub coverage: f64,
    pub coverage_gap: f64,
    /// Mean of `100 * width / y` over the district's finite sets.
    pub mean_relative_width: f64,
}

/// District-conditional coverage gaps with quartile summaries and the
/// matching beta-binomial reference quartiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistrictReport {
    pub entries: Vec<DistrictEntry>,
    /// (25%, 75%) quartiles of the per-district gaps.
    pub gap_quartiles: (f64, f64),
    /// (25%, 75%) quartiles of the beta-binomial reference computed with
    /// an equal-share test size `n_test / n_districts`, expressed as gaps.
    pub reference_gap_quartiles: (f64, f64),
}

/// Group coverage by district. The reference distribution assumes equal
/// expected district sizes, i.e. a test set of `n_test / n_districts` per
/// district.
pub fn district_report(
    intervals: &[PredictionSet],
    y_true: &[f64],
    districts: &[u32],
    alpha: f64,
    n_calibration: usize,
) -> Result<DistrictReport> {
    if intervals.len() != districts.len() {
        return Err(Error::LengthMismatch {
            left: intervals.len(),
            right: districts.len(),
        });
    }

    let mut grouped: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &d) in districts.iter().enumerate() {
        grouped.entry(d).or_default().push(i);
    }

    let mut entries = Vec::with_capacity(grouped.len());
    for (&district, indices) in &grouped {
        let sets: Vec<PredictionSet> = indices.iter().map(|&i| intervals[i]).collect();
        let ys: Vec<f64> = indices.iter().map(|&i| y_true[i]).collect();
        let report = coverage_report(&sets, &ys, alpha)?;
        entries.push(DistrictEntry {
            district,
            count: indices.len(),
            coverage: report.coverage,
            coverage_gap: report.coverage_gap,
            mean_relative_width: report.relative_efficiency,
        });
    }

    let gaps: Vec<f64> = entries.iter().map(|e| e.coverage_gap).collect();
    let gap_quartiles = (quantile_linear(&gaps, 0.25), quantile_linear(&gaps, 0.75));

    let share = (intervals.len() / grouped.len().max(1)).max(1);
    let reference = BetaBinomialRef::new(n_calibration, share, alpha)?;
    // Coverage quartiles map to gap quartiles with the order flipped.
    let ref_cov = (reference.quantile(0.25)?, reference.quantile(0.75)?);
    let reference_gap_quartiles = ((1.0 - alpha) - ref_cov.1, (1.0 - alpha) - ref_cov.0);

    Ok(DistrictReport {
        entries,
        gap_quartiles,
        reference_gap_quartiles,
    })
}

/// Linear-interpolation sample quantile (type 7).
fn quantile_linear(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Point-prediction accuracy: RMSE, median absolute error, and the
/// percentage of predictions within 10% / 20% of the truth.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AccuracyMetrics {
    pub rmse: f64,
    pub mdae: f64,
    pub per10: f64,
    pub per20: f64,
}

pub fn accuracy_metrics(y_pred: &[f64], y_true: &[f64]) -> Result<AccuracyMetrics> {
    if y_pred.len() != y_true.len() {
        return Err(Error::LengthMismatch {
            left: y_pred.len(),
            right: y_true.len(),
        });
    }
    if y_pred.is_empty() {
        return Err(Error::EmptyScores);
    }
    if y_true.iter().any(|&y| y <= 0.0) {
        return Err(Error::NonPositiveResponse);
    }

    let n = y_pred.len() as f64;
    let mut abs_errors: Vec<f64> = y_pred.iter().zip(y_true).map(|(p, t)| (p - t).abs()).collect();
    let rmse = (abs_errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();

    abs_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Lower median for even lengths.
    let mdae = abs_errors[(abs_errors.len() - 1) / 2];

    let within = |threshold: f64| {
        let count = y_pred
            .iter()
            .zip(y_true)
            .filter(|(p, t)| ((*p - *t).abs() / **t) <= threshold)
            .count();
        100.0 * count as f64 / n
    };
    Ok(AccuracyMetrics {
        rmse,
        mdae,
        per10: within(0.10),
        per20: within(0.20),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn interval(lower: f64, upper: f64) -> PredictionSet {
        PredictionSet { lower, upper }
    }

    #[test]
    fn full_coverage_gives_negative_alpha_gap() {
        let sets = vec![interval(0.0, 10.0); 5];
        let y = vec![4.0; 5];
        let report = coverage_report(&sets, &y, 0.1).unwrap();
        assert_eq!(report.coverage, 1.0);
        assert!((report.coverage_gap + 0.1).abs() < 1e-12);
    }

    #[test]
    fn relative_efficiency_is_width_over_truth() {
        let sets = vec![interval(3.6, 4.4)];
        let y = vec![4.0];
        let report = coverage_report(&sets, &y, 0.1).unwrap();
        assert!((report.mean_width - 0.8).abs() < 1e-12);
        assert!((report.relative_efficiency - 20.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_hits_count_as_covered() {
        let sets = vec![interval(4.0, 5.0)];
        let report = coverage_report(&sets, &[4.0], 0.1).unwrap();
        assert_eq!(report.coverage, 1.0);
    }

    #[test]
    fn infinite_sets_count_covered_but_not_in_widths() {
        let sets = vec![PredictionSet::unbounded(), interval(1.0, 2.0)];
        let y = vec![100.0, 1.5];
        let report = coverage_report(&sets, &y, 0.1).unwrap();
        assert_eq!(report.coverage, 1.0);
        assert_eq!(report.n_infinite_sets, 1);
        assert!((report.mean_width - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_membership_count() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let sets: Vec<PredictionSet> = (0..100)
            .map(|_| {
                let center = rng.random_range(1.0..10.0);
                let half = rng.random_range(0.0..3.0);
                interval(center - half, center + half)
            })
            .collect();
        let y: Vec<f64> = (0..100).map(|_| rng.random_range(1.0..10.0)).collect();
        let report = coverage_report(&sets, &y, 0.1).unwrap();

        let mut covered = 0;
        for (s, &yi) in sets.iter().zip(&y) {
            if yi >= s.lower && yi <= s.upper {
                covered += 1;
            }
        }
        assert_eq!(report.coverage, covered as f64 / 100.0);
        // Coverage plus brute-force miscoverage is exactly one.
        let miss = sets
            .iter()
            .zip(&y)
            .filter(|(s, &yi)| yi < s.lower || yi > s.upper)
            .count();
        assert_eq!(covered + miss, 100);
    }

    #[test]
    fn beta_binomial_reference_constants() {
        let reference = BetaBinomialRef::new(2000, 2000, 0.1).unwrap();
        assert_eq!(reference.l, 200);
        assert_eq!(reference.beta_a, 1801.0);
        assert_eq!(reference.beta_b, 200.0);
    }

    #[test]
    fn beta_binomial_pmf_sums_to_one() {
        let reference = BetaBinomialRef::new(500, 400, 0.1).unwrap();
        let total: f64 = (0..=400).map(|k| reference.pmf(k)).sum();
        assert!((total - 1.0).abs() < 1e-9, "pmf total {total}");
    }

    #[test]
    fn beta_binomial_quantile_is_monotone() {
        let reference = BetaBinomialRef::new(2000, 2000, 0.1).unwrap();
        let mut last = 0.0;
        for p in [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99] {
            let q = reference.quantile(p).unwrap();
            assert!(q >= last);
            last = q;
        }
    }

    #[test]
    fn single_test_point_quantile_is_zero_or_one() {
        let reference = BetaBinomialRef::new(99, 1, 0.1).unwrap();
        for p in [0.05, 0.5, 0.95] {
            let q = reference.quantile(p).unwrap();
            assert!(q == 0.0 || q == 1.0);
        }
    }

    #[test]
    fn district_report_matches_group_by_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let n = 300;
        let districts: Vec<u32> = (0..n).map(|_| rng.random_range(1..4u32)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
        let sets: Vec<PredictionSet> = y
            .iter()
            .map(|&yi| {
                if rng.random_range(0.0..1.0) < 0.9 {
                    interval(yi - 0.5, yi + 0.5)
                } else {
                    interval(yi + 1.0, yi + 2.0)
                }
            })
            .collect();

        let report = district_report(&sets, &y, &districts, 0.1, 100).unwrap();
        assert_eq!(report.entries.iter().map(|e| e.count).sum::<usize>(), n);

        for entry in &report.entries {
            let mut covered = 0;
            let mut count = 0;
            for i in 0..n {
                if districts[i] == entry.district {
                    count += 1;
                    if sets[i].contains(y[i]) {
                        covered += 1;
                    }
                }
            }
            assert_eq!(count, entry.count);
            let oracle_cov = covered as f64 / count as f64;
            assert!((entry.coverage - oracle_cov).abs() < 1e-12);
            assert!((entry.coverage_gap - (0.9 - oracle_cov)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_district_report_equals_marginal() {
        let y = vec![2.0, 3.0, 4.0];
        let sets = vec![interval(1.0, 5.0), interval(3.5, 4.0), interval(3.0, 5.0)];
        let marginal = coverage_report(&sets, &y, 0.1).unwrap();
        let per_district = district_report(&sets, &y, &[7, 7, 7], 0.1, 100).unwrap();
        assert_eq!(per_district.entries.len(), 1);
        assert_eq!(per_district.entries[0].coverage_gap, marginal.coverage_gap);
    }

    #[test]
    fn two_district_gaps() {
        // District 1 fully covered, district 2 at 0.8.
        let y = vec![1.0; 10];
        let mut sets = vec![interval(0.5, 1.5); 10];
        sets[5] = interval(2.0, 3.0);
        let districts: Vec<u32> = (0..10).map(|i| if i < 5 { 1 } else { 2 }).collect();
        let report = district_report(&sets, &y, &districts, 0.1, 100).unwrap();
        assert!((report.entries[0].coverage_gap + 0.1).abs() < 1e-12);
        assert!((report.entries[1].coverage_gap - 0.1).abs() < 1e-12);
    }

    #[test]
    fn accuracy_on_perfect_predictions() {
        let y = vec![1.0, 2.0, 3.0];
        let m = accuracy_metrics(&y, &y).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mdae, 0.0);
        assert_eq!(m.per10, 100.0);
        assert_eq!(m.per20, 100.0);
    }

    #[test]
    fn per_thresholds_split_borderline_cases() {
        let y = vec![1.0, 1.0];
        let pred = vec![1.05, 1.5];
        let m = accuracy_metrics(&pred, &y).unwrap();
        assert_eq!(m.per10, 50.0);
        assert_eq!(m.per20, 50.0);
    }

    #[test]
    fn metrics_match_direct_recomputation() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let y: Vec<f64> = (0..57).map(|_| rng.random_range(1.0..10.0)).collect();
        let pred: Vec<f64> = y.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
        let m = accuracy_metrics(&pred, &y).unwrap();

        let sq: f64 = pred.iter().zip(&y).map(|(p, t)| (p - t) * (p - t)).sum();
        assert!((m.rmse - (sq / 57.0).sqrt()).abs() < 1e-12);

        let mut errs: Vec<f64> = pred.iter().zip(&y).map(|(p, t)| (p - t).abs()).collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(m.mdae, errs[28]);

        let p10 = pred.iter().zip(&y).filter(|(p, t)| ((*p - *t).abs() / **t) <= 0.1).count();
        assert!((m.per10 - 100.0 * p10 as f64 / 57.0).abs() < 1e-12);
        assert!(m.per20 >= m.per10);
    }

    #[test]
    fn length_and_positivity_checks() {
        assert!(matches!(
            accuracy_metrics(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            accuracy_metrics(&[1.0], &[0.0]),
            Err(Error::NonPositiveResponse)
        ));
        assert!(matches!(
            coverage_report(&[interval(0.0, 1.0)], &[1.0, 2.0], 0.1),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
