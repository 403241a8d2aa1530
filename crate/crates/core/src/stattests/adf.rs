//! Augmented Dickey-Fuller unit-root test with asymptotic response-surface
//! p-values (MacKinnon 1994, single-series coefficients).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::distributions::normal_cdf;
use super::{ols, StatsError};
use crate::scalar::Scalar;

/// Deterministic terms included in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdfSpec {
    /// No constant, no trend.
    Nc,
    /// Constant only.
    C,
    /// Constant and linear trend.
    Ct,
    /// Constant, linear and quadratic trend.
    Ctt,
}

impl AdfSpec {
    pub const ALL: [AdfSpec; 4] = [AdfSpec::Nc, AdfSpec::C, AdfSpec::Ct, AdfSpec::Ctt];

    fn deterministic_terms(self) -> usize {
        match self {
            AdfSpec::Nc => 0,
            AdfSpec::C => 1,
            AdfSpec::Ct => 2,
            AdfSpec::Ctt => 3,
        }
    }

    fn surface(self) -> &'static Surface {
        match self {
            AdfSpec::Nc => &NC,
            AdfSpec::C => &C,
            AdfSpec::Ct => &CT,
            AdfSpec::Ctt => &CTT,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AdfSpec::Nc => "nc",
            AdfSpec::C => "c",
            AdfSpec::Ct => "ct",
            AdfSpec::Ctt => "ctt",
        }
    }
}

impl fmt::Display for AdfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdfSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nc" | "n" => Ok(AdfSpec::Nc),
            "c" => Ok(AdfSpec::C),
            "ct" => Ok(AdfSpec::Ct),
            "ctt" => Ok(AdfSpec::Ctt),
            other => Err(format!("unknown ADF specification `{other}`")),
        }
    }
}

struct Surface {
    tau_star: f64,
    tau_min: f64,
    tau_max: f64,
    small_p: [f64; 3],
    large_p: [f64; 4],
}

// Coefficients already multiplied by their published scaling factors
// (small: 1, 1, 1e-2; large: 1, 1e-1, 1e-1, 1e-2).
const NC: Surface = Surface {
    tau_star: -1.04,
    tau_min: -19.04,
    tau_max: f64::INFINITY,
    small_p: [0.6344, 1.2378, 3.2496e-2],
    large_p: [0.4797, 9.3557e-1, -0.6999e-1, 3.3066e-2],
};
const C: Surface = Surface {
    tau_star: -1.61,
    tau_min: -18.83,
    tau_max: 2.74,
    small_p: [2.1659, 1.4412, 3.8269e-2],
    large_p: [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2],
};
const CT: Surface = Surface {
    tau_star: -2.89,
    tau_min: -16.18,
    tau_max: 0.7,
    small_p: [3.2512, 1.6047, 4.9588e-2],
    large_p: [2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2],
};
const CTT: Surface = Surface {
    tau_star: -3.21,
    tau_min: -17.17,
    tau_max: 0.54,
    small_p: [4.0003, 1.658, 4.8288e-2],
    large_p: [3.0778, 4.9529e-1, -4.1477e-1, -5.9359e-2],
};

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Asymptotic p-value of a Dickey-Fuller t statistic.
///
/// Both branches are capped at their turning points so the p-value
/// is non-decreasing in the statistic up to the cut-off where it becomes 1.
pub fn mackinnon_p_value(stat: f64, spec: AdfSpec) -> f64 {
    let s = spec.surface();
    if stat.is_nan() {
        return f64::NAN;
    }
    if stat > s.tau_max {
        return 1.0;
    }
    if stat < s.tau_min {
        return 0.0;
    }
    let z = if stat <= s.tau_star {
        // The quadratic can dip just above tau_min; hold it at its vertex there.
        let vertex = -s.small_p[1] / (2.0 * s.small_p[2]);
        poly(&s.small_p, stat.max(vertex))
    } else {
        let x = match cubic_turning_point(&s.large_p, s.tau_star, s.tau_max) {
            Some(peak) if stat > peak => peak,
            _ => stat,
        };
        poly(&s.large_p, x)
    };
    normal_cdf(z)
}

// First point in (lo, hi) where the cubic stops increasing.
fn cubic_turning_point(c: &[f64; 4], lo: f64, hi: f64) -> Option<f64> {
    let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    if a == 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)];
    roots.sort_by(f64::total_cmp);
    roots.into_iter().find(|&r| {
        r > lo && r < hi && (a * (r + 1e-9) * (r + 1e-9) + b * (r + 1e-9) + cc) < 0.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub spec: AdfSpec,
    pub test_statistic: f64,
    pub p_value: f64,
    pub lags_used: usize,
    /// Observations in the final test regression.
    pub nobs: usize,
}

impl AdfResult {
    /// Asymptotic critical value at `level`, obtained by inverting the p-value surface.
    pub fn critical_value(spec: AdfSpec, level: f64) -> f64 {
        let (mut lo, mut hi) = (spec.surface().tau_min, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mackinnon_p_value(mid, spec) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Default upper bound for the augmentation lag, `⌊12·(T/100)^{1/4}⌋`.
pub fn default_max_lag(len: usize) -> usize {
    (12.0 * (len as f64 / 100.0).powf(0.25)).floor() as usize
}

/// ADF test with the augmentation lag chosen by AIC over `0..=max_lag`.
///
/// Candidate lags are compared on a common sample; the chosen lag is then
/// refit on every usable observation.
pub fn adf_test<T: Scalar>(
    y: &[T],
    spec: AdfSpec,
    max_lag: Option<usize>,
) -> Result<AdfResult, StatsError> {
    let len = y.len();
    let k_det = spec.deterministic_terms();
    let max_lag = match max_lag {
        Some(m) => {
            check_length(len, m)?;
            m
        }
        None => {
            check_length(len, 0)?;
            // Keep at least half the differenced sample for the largest model.
            let feasible = ((len - 1) / 2).saturating_sub(k_det + 1);
            default_max_lag(len).min(feasible)
        }
    };
    check_constant(y)?;

    let dy: Vec<T> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let mut best: Option<(f64, usize)> = None;
    for lag in 0..=max_lag {
        let (target, design) = adf_design(y, &dy, spec, lag, max_lag);
        let fit = ols(&target, &design)?;
        let n = target.len() as f64;
        let aic = n * (fit.rss.as_f64() / n).ln() + 2.0 * design.ncols() as f64;
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, lag));
        }
    }
    let lag = best.map(|(_, l)| l).unwrap_or(0);
    adf_with(y, &dy, spec, lag)
}

/// ADF test with a fixed augmentation lag.
pub fn adf_test_with_lag<T: Scalar>(
    y: &[T],
    spec: AdfSpec,
    lag: usize,
) -> Result<AdfResult, StatsError> {
    check_length(y.len(), lag)?;
    check_constant(y)?;
    let dy: Vec<T> = y.windows(2).map(|w| w[1] - w[0]).collect();
    adf_with(y, &dy, spec, lag)
}

fn check_length(len: usize, lag: usize) -> Result<(), StatsError> {
    if len < lag + 10 {
        return Err(StatsError::TooShort {
            needed: lag + 10,
            got: len,
        });
    }
    Ok(())
}

fn check_constant<T: Scalar>(y: &[T]) -> Result<(), StatsError> {
    if y.iter().all(|v| *v == y[0]) {
        return Err(StatsError::Constant);
    }
    Ok(())
}

fn adf_with<T: Scalar>(y: &[T], dy: &[T], spec: AdfSpec, lag: usize) -> Result<AdfResult, StatsError> {
    let (target, design) = adf_design(y, dy, spec, lag, lag);
    let fit = ols(&target, &design)?;
    let stat = fit.t_values[0].as_f64();
    Ok(AdfResult {
        spec,
        test_statistic: stat,
        p_value: mackinnon_p_value(stat, spec),
        lags_used: lag,
        nobs: target.len(),
    })
}

// Regression of Δy_t on [y_{t−1}, Δy_{t−1..t−lag}, deterministic terms] using
// the sample that starts after `sample_lag` lagged differences.
fn adf_design<T: Scalar>(
    y: &[T],
    dy: &[T],
    spec: AdfSpec,
    lag: usize,
    sample_lag: usize,
) -> (DVector<T>, DMatrix<T>) {
    let nobs = dy.len() - sample_lag;
    let k = 1 + lag + spec.deterministic_terms();
    let mut design = DMatrix::zeros(nobs, k);
    let mut target = DVector::zeros(nobs);
    for row in 0..nobs {
        // Index into dy of the current difference Δy_t.
        let t = sample_lag + row;
        target[row] = dy[t];
        design[(row, 0)] = y[t];
        for l in 1..=lag {
            design[(row, l)] = dy[t - l];
        }
        let trend = T::of((row + 1) as f64);
        let base = 1 + lag;
        match spec {
            AdfSpec::Nc => {}
            AdfSpec::C => design[(row, base)] = T::one(),
            AdfSpec::Ct => {
                design[(row, base)] = T::one();
                design[(row, base + 1)] = trend;
            }
            AdfSpec::Ctt => {
                design[(row, base)] = T::one();
                design[(row, base + 1)] = trend;
                design[(row, base + 2)] = trend * trend;
            }
        }
    }
    (target, design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn walk(seed: u64, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = 0.0;
        (0..len)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                acc += e;
                acc
            })
            .collect()
    }

    #[test]
    fn critical_value_anchors() {
        assert!((AdfResult::critical_value(AdfSpec::Nc, 0.05) + 1.95).abs() < 0.02);
        assert!((AdfResult::critical_value(AdfSpec::C, 0.05) + 2.86).abs() < 0.02);
        assert!((AdfResult::critical_value(AdfSpec::Ct, 0.05) + 3.41).abs() < 0.02);
    }

    #[test]
    fn p_value_is_monotone() {
        for spec in AdfSpec::ALL {
            let mut prev = 0.0;
            let mut x = -25.0;
            while x < 4.0 {
                let p = mackinnon_p_value(x, spec);
                assert!((0.0..=1.0).contains(&p));
                assert!(p >= prev, "{spec}: p({x}) = {p} < {prev}");
                prev = p;
                x += 0.001;
            }
        }
    }

    #[test]
    fn random_walk_not_rejected_white_noise_rejected() {
        let rw = walk(7, 500);
        let res = adf_test(&rw, AdfSpec::C, None).unwrap();
        assert!(res.p_value > 0.05, "{res:?}");

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let noise: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let res = adf_test(&noise, AdfSpec::C, None).unwrap();
        assert!(res.p_value < 0.01, "{res:?}");
    }

    #[test]
    fn all_four_specifications_run() {
        let rw = walk(1, 300);
        let results: Vec<_> = AdfSpec::ALL
            .iter()
            .map(|&s| adf_test(&rw, s, None).unwrap())
            .collect();
        assert_eq!(results.len(), 4);
        assert_eq!(
            results.iter().map(|r| r.spec).collect::<Vec<_>>(),
            AdfSpec::ALL.to_vec()
        );
    }

    #[test]
    fn statistic_is_scale_invariant() {
        let rw = walk(21, 200);
        let scaled: Vec<f64> = rw.iter().map(|v| 37.5 * v).collect();
        for spec in AdfSpec::ALL {
            let a = adf_test(&rw, spec, Some(4)).unwrap();
            let b = adf_test(&scaled, spec, Some(4)).unwrap();
            assert_eq!(a.lags_used, b.lags_used);
            assert!((a.test_statistic - b.test_statistic).abs() < 1e-8);
        }
    }

    #[test]
    fn short_and_constant_series_error() {
        assert!(matches!(
            adf_test(&[1.0; 5], AdfSpec::C, None),
            Err(StatsError::TooShort { .. })
        ));
        assert!(matches!(
            adf_test(&[2.0; 50], AdfSpec::C, None),
            Err(StatsError::Constant)
        ));
        let rw = walk(2, 20);
        assert!(adf_test(&rw, AdfSpec::C, Some(15)).is_err());
    }

    #[test]
    fn fixed_lag_matches_manual_regression() {
        let y = walk(9, 120);
        let res = adf_test_with_lag(&y, AdfSpec::C, 2).unwrap();
        // Δy_t on y_{t−1}, Δy_{t−1}, Δy_{t−2}, 1 for t = 3..len−1.
        let n = y.len() - 3;
        let mut x = DMatrix::zeros(n, 4);
        let mut target = DVector::zeros(n);
        for r in 0..n {
            let t = r + 3;
            target[r] = y[t] - y[t - 1];
            x[(r, 0)] = y[t - 1];
            x[(r, 1)] = y[t - 1] - y[t - 2];
            x[(r, 2)] = y[t - 2] - y[t - 3];
            x[(r, 3)] = 1.0;
        }
        let fit = ols(&target, &x).unwrap();
        assert!((fit.t_values[0] - res.test_statistic).abs() < 1e-10);
        assert_eq!(res.nobs, n);
    }
}
