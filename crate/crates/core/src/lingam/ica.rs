//! Symmetric FastICA with the `tanh` contrast.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LingamError;
use crate::scalar::Scalar;
use crate::stattests::jarque_bera;

// E[log cosh(ν)] for ν ~ N(0, 1).
const GAUSS_LOGCOSH: f64 = 0.374_567_207_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcaConfig {
    /// Largest allowed row-angle change (radians) between iterations.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Extra reseeded attempts after a non-converged first run.
    pub restarts: usize,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 1000,
            seed: 0x5eed,
            restarts: 5,
        }
    }
}

/// Per-attempt record kept for non-convergence reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaAttempt {
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    /// Max row-angle change after each iteration.
    pub changes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaResult<T: Scalar> {
    /// Applied to centered data: `s = W (x − mean)`.
    pub unmixing: DMatrix<T>,
    pub whitening: DMatrix<T>,
    pub mean: DVector<T>,
    pub converged: bool,
    pub iterations: usize,
    /// Negated sum of squared negentropy approximations; lower is better.
    pub objective: f64,
    /// Number of recovered sources that look Gaussian (JB p > 0.01).
    pub gaussian_sources: usize,
    pub attempts: Vec<IcaAttempt>,
}

impl<T: Scalar> IcaResult<T> {
    pub fn sources(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut xc = x.clone();
        for (mut row, m) in xc.row_iter_mut().zip(self.mean.iter()) {
            row.add_scalar_mut(-*m);
        }
        &self.unmixing * xc
    }
}

/// Estimates `W` such that `W (x − mean)` has independent rows.
///
/// `x` is `n × T` (one row per signal).
pub fn fastica<T: Scalar>(x: &DMatrix<T>, config: &IcaConfig) -> Result<IcaResult<T>, LingamError> {
    let (n, len) = x.shape();
    if n == 0 {
        return Err(LingamError::Shape("no signals".into()));
    }
    if len <= 10 * n {
        return Err(LingamError::TooFewSamples {
            needed: 10 * n + 1,
            got: len,
        });
    }
    let mean = DVector::from_iterator(n, x.row_iter().map(|r| r.sum() / T::of(len as f64)));
    let mut xc = x.clone();
    for (i, mut row) in xc.row_iter_mut().enumerate() {
        row.add_scalar_mut(-mean[i]);
        let scale = row.amax();
        if scale <= T::zero() || row.norm() <= T::rank_tolerance() * scale {
            return Err(LingamError::ConstantSignal(i));
        }
    }

    let cov = &xc * xc.transpose() / T::of(len as f64);
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.max();
    if eig.eigenvalues.min() <= T::rank_tolerance() * top {
        return Err(LingamError::SingularCovariance);
    }
    let d_inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| T::one() / v.sqrt()));
    let whitening = d_inv_sqrt * eig.eigenvectors.transpose();
    let z = &whitening * &xc;

    let run = |attempt: usize| {
        let seed = config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(attempt as u64));
        let (w, record) = iterate(&z, seed, config);
        let objective = negentropy_objective(&(&w * &z));
        (w, record, objective)
    };

    let first = run(0);
    let mut runs = vec![first];
    if !runs[0].1.converged && config.restarts > 0 {
        let more: Vec<_> = (1..=config.restarts).into_par_iter().map(run).collect();
        runs.extend(more);
    }

    let attempts: Vec<IcaAttempt> = runs.iter().map(|r| r.1.clone()).collect();
    let best = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.1.converged)
        .min_by(|a, b| a.1 .2.total_cmp(&b.1 .2).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let Some(best) = best else {
        return Err(LingamError::IcaNonConvergence { attempts });
    };
    let (w, record, objective) = runs.swap_remove(best);
    let unmixing = &w * &whitening;

    let sources = &w * &z;
    let gaussian_sources = match jarque_bera(&sources.transpose()) {
        Ok(jb) => jb.columns.iter().filter(|c| c.p_value > 0.01).count(),
        Err(_) => 0,
    };
    if gaussian_sources >= 2 {
        log::warn!("{gaussian_sources} recovered sources look Gaussian; unmixing is not identifiable");
    }

    Ok(IcaResult {
        unmixing,
        whitening,
        mean,
        converged: true,
        iterations: record.iterations,
        objective,
        gaussian_sources,
        attempts,
    })
}

fn iterate<T: Scalar>(z: &DMatrix<T>, seed: u64, config: &IcaConfig) -> (DMatrix<T>, IcaAttempt) {
    let (n, len) = z.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = DMatrix::from_fn(n, n, |_, _| T::of(StandardNormal.sample(&mut rng)));
    let mut w = symmetric_decorrelation(&init);
    let inv_len = T::of(1.0 / len as f64);
    let mut changes = Vec::new();

    for it in 1..=config.max_iter {
        let wz = &w * z;
        let g = wz.map(|v| v.tanh());
        let g_prime_mean =
            DVector::from_iterator(n, g.row_iter().map(|r| T::one() - r.norm_squared() * inv_len));
        let mut next = &g * z.transpose() * inv_len;
        for i in 0..n {
            let wi = w.row(i) * g_prime_mean[i];
            let mut row = next.row_mut(i);
            row -= wi;
        }
        let next = symmetric_decorrelation(&next);
        let change = max_row_angle(&w, &next);
        changes.push(change);
        w = next;
        if change < config.tol {
            return (
                w,
                IcaAttempt {
                    seed,
                    iterations: it,
                    converged: true,
                    changes,
                },
            );
        }
    }
    (
        w,
        IcaAttempt {
            seed,
            iterations: config.max_iter,
            converged: false,
            changes,
        },
    )
}

/// `(W Wᵀ)^{-1/2} W`.
fn symmetric_decorrelation<T: Scalar>(w: &DMatrix<T>) -> DMatrix<T> {
    let eig = SymmetricEigen::new(w * w.transpose());
    let floor = T::rank_tolerance() * T::rank_tolerance();
    let d = eig.eigenvalues.map(|v| T::one() / v.max(floor).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose() * w
}

// Rows are unit vectors; the angle is taken up to sign.
fn max_row_angle<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.row_iter()
        .zip(b.row_iter())
        .map(|(ra, rb)| {
            let s = if ra.dot(&rb) < T::zero() { -T::one() } else { T::one() };
            let chord = (rb - ra * s).norm().as_f64();
            2.0 * (chord / 2.0).min(1.0).asin()
        })
        .fold(0.0, f64::max)
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn negentropy_objective<T: Scalar>(sources: &DMatrix<T>) -> f64 {
    let len = sources.ncols() as f64;
    -sources
        .row_iter()
        .map(|r| {
            let e = r.iter().map(|v| log_cosh(v.as_f64())).sum::<f64>() / len;
            (e - GAUSS_LOGCOSH).powi(2)
        })
        .sum::<f64>()
}

/// Amari distance of `P = W·A` from a scaled permutation, normalized to `[0, 1]`.
pub fn amari_error<T: Scalar>(p: &DMatrix<T>) -> f64 {
    let n = p.nrows();
    if n < 2 {
        return 0.0;
    }
    let a = p.map(|v| v.as_f64().abs());
    let rows: f64 = a
        .row_iter()
        .map(|r| r.sum() / r.max() - 1.0)
        .sum();
    let cols: f64 = a
        .column_iter()
        .map(|c| c.sum() / c.max() - 1.0)
        .sum();
    (rows + cols) / (2.0 * n as f64 * (n as f64 - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn uniform_sources(n: usize, len: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 3f64.sqrt();
        DMatrix::from_fn(n, len, |_, _| rng.random_range(-r..r))
    }

    #[test]
    fn unmixes_two_uniform_sources() {
        let s = uniform_sources(2, 10_000, 1);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, -0.4, 1.2]);
        let res = fastica(&(&a * &s), &IcaConfig::default()).unwrap();
        let p = &res.unmixing * &a;
        assert!(amari_error(&p) < 0.05, "{p}");
        let src = res.sources(&(&a * &s));
        let c = crate::stattests::pearson(
            &src.row(0).iter().copied().collect::<Vec<_>>(),
            &src.row(1).iter().copied().collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(c.abs() < 0.05);
    }

    #[test]
    fn whitened_independent_input_is_left_alone() {
        let s = uniform_sources(3, 10_000, 2);
        let res = fastica(&s, &IcaConfig::default()).unwrap();
        let p = res.unmixing.map(f64::abs);
        for row in p.row_iter() {
            let mut v: Vec<f64> = row.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            assert!((v[2] - 1.0).abs() < 0.05 && v[1] < 0.05, "{p}");
        }
    }

    #[test]
    fn gaussian_sources_are_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: DMatrix<f64> = DMatrix::from_fn(2, 5000, |_, _| StandardNormal.sample(&mut rng));
        match fastica(&s, &IcaConfig::default()) {
            Ok(res) => assert!(res.gaussian_sources >= 2),
            Err(e) => assert!(matches!(e, LingamError::IcaNonConvergence { .. })),
        }
    }

    #[test]
    fn rejects_short_and_constant_input() {
        let s = uniform_sources(2, 15, 4);
        assert!(matches!(
            fastica(&s, &IcaConfig::default()),
            Err(LingamError::TooFewSamples { .. })
        ));
        let mut s = uniform_sources(2, 500, 4);
        s.row_mut(1).fill(2.0);
        assert!(matches!(
            fastica(&s, &IcaConfig::default()),
            Err(LingamError::ConstantSignal(1))
        ));
    }

    #[test]
    fn same_seed_same_result() {
        let s = uniform_sources(3, 2000, 5);
        let a = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.3 });
        let x = &a * &s;
        let r1 = fastica(&x, &IcaConfig::default()).unwrap();
        let r2 = fastica(&x, &IcaConfig::default()).unwrap();
        assert_eq!(r1.unmixing, r2.unmixing);
    }

    #[test]
    fn amari_error_of_scaled_permutation_is_zero() {
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 0.0, 0.0, -1.0, 5.0, 0.0, 0.0]);
        assert_eq!(amari_error(&p), 0.0);
        assert!(amari_error(&DMatrix::from_element(3, 3, 1.0)) > 0.9);
    }

    #[test]
    fn single_precision_unmixing() {
        let s = uniform_sources(2, 10_000, 6).map(|v| v as f32);
        let a = DMatrix::from_row_slice(2, 2, &[1.0f32, 0.5, 0.2, 1.0]);
        let res = fastica(&(&a * &s), &IcaConfig::default()).unwrap();
        assert!(amari_error(&(&res.unmixing * &a)) < 0.05);
    }
}
