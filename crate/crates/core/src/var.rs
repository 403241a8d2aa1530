//! Vector autoregression: equation-by-equation OLS, information-criterion
//! order selection and companion-matrix stability.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::TimeSeriesDataset;
use crate::scalar::Scalar;
use crate::stattests::{ols, StatsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarError {
    #[error("lag order must be at least 1")]
    ZeroOrder,
    #[error("insufficient observations for order {order}: need more than {needed}, got {got}")]
    InsufficientObservations {
        order: usize,
        needed: usize,
        got: usize,
    },
    #[error("regressors are rank deficient: {0}")]
    RankDeficient(StatsError),
    #[error("residual covariance is singular")]
    SingularCovariance,
}

impl From<StatsError> for VarError {
    fn from(e: StatsError) -> Self {
        VarError::RankDeficient(e)
    }
}

/// Fitted `x(t) = c + Σ_τ M_τ x(t−τ) + u(t)`.
///
/// Coefficient matrices are indexed `[(effect, cause)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel<T: Scalar> {
    pub variable_names: Vec<String>,
    pub order: usize,
    /// `M_1 .. M_p`.
    pub coefficients: Vec<DMatrix<T>>,
    pub intercept: DVector<T>,
    pub standard_errors: Vec<DMatrix<T>>,
    pub intercept_standard_errors: DVector<T>,
    /// `(T − p) × n`, row `r` belongs to observation `p + r`.
    pub residuals: DMatrix<T>,
    /// `uᵀu / (T − p)`.
    pub residual_covariance: DMatrix<T>,
}

impl<T: Scalar> VarModel<T> {
    pub fn n_vars(&self) -> usize {
        self.intercept.len()
    }

    pub fn nobs(&self) -> usize {
        self.residuals.nrows()
    }

    /// One-step fitted values for rows `p..T` of `values`.
    pub fn fitted(&self, values: &DMatrix<T>) -> DMatrix<T> {
        let p = self.order;
        let rows = values.nrows() - p;
        let mut out = DMatrix::zeros(rows, self.n_vars());
        for r in 0..rows {
            let t = p + r;
            let mut row = self.intercept.clone();
            for (lag, m) in self.coefficients.iter().enumerate() {
                let past = values.row(t - lag - 1).transpose();
                row += m * past;
            }
            out.set_row(r, &row.transpose());
        }
        out
    }

    /// Spectral radius of the companion matrix; the model is stable iff it is below 1.
    pub fn spectral_radius(&self) -> T {
        spectral_radius(&self.coefficients)
    }
}

/// Lagged regressor matrix `[1, x(t−1)ᵀ, …, x(t−p)ᵀ]` for `t = start..T`.
pub(crate) fn lagged_design<T: Scalar>(values: &DMatrix<T>, p: usize, start: usize) -> DMatrix<T> {
    let n = values.ncols();
    let rows = values.nrows() - start;
    DMatrix::from_fn(rows, 1 + n * p, |r, c| {
        if c == 0 {
            T::one()
        } else {
            let lag = (c - 1) / n + 1;
            let var = (c - 1) % n;
            values[(start + r - lag, var)]
        }
    })
}

pub fn fit<T: Scalar>(ds: &TimeSeriesDataset<T>, p: usize) -> Result<VarModel<T>, VarError> {
    fit_values(ds.values(), ds.names().to_vec(), p)
}

pub(crate) fn fit_values<T: Scalar>(
    values: &DMatrix<T>,
    names: Vec<String>,
    p: usize,
) -> Result<VarModel<T>, VarError> {
    if p == 0 {
        return Err(VarError::ZeroOrder);
    }
    let (len, n) = values.shape();
    let needed = n * p + n + 1;
    if len <= needed {
        return Err(VarError::InsufficientObservations {
            order: p,
            needed,
            got: len,
        });
    }
    let design = lagged_design(values, p, p);
    let rows = len - p;
    let mut coefficients = vec![DMatrix::zeros(n, n); p];
    let mut standard_errors = vec![DMatrix::zeros(n, n); p];
    let mut intercept = DVector::zeros(n);
    let mut intercept_se = DVector::zeros(n);
    let mut residuals = DMatrix::zeros(rows, n);
    for i in 0..n {
        let y = values.column(i).rows(p, rows).into_owned();
        let eq = ols(&y, &design)?;
        intercept[i] = eq.coefficients[0];
        intercept_se[i] = eq.standard_errors[0];
        for lag in 0..p {
            for j in 0..n {
                coefficients[lag][(i, j)] = eq.coefficients[1 + lag * n + j];
                standard_errors[lag][(i, j)] = eq.standard_errors[1 + lag * n + j];
            }
        }
        residuals.set_column(i, &eq.residuals);
    }
    let residual_covariance = residuals.transpose() * &residuals / T::of(rows as f64);
    Ok(VarModel {
        variable_names: names,
        order: p,
        coefficients,
        intercept,
        standard_errors,
        intercept_standard_errors: intercept_se,
        residuals,
        residual_covariance,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
    #[default]
    Hqic,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
            Criterion::Hqic => "hqic",
        })
    }
}

impl FromStr for Criterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            "hqic" => Ok(Criterion::Hqic),
            other => Err(format!("unknown criterion `{other}` (expected aic, bic or hqic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub order: usize,
    pub aic: f64,
    pub bic: f64,
    pub hqic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelection {
    pub max_order: usize,
    /// Common estimation sample size shared by every row.
    pub nobs: usize,
    pub rows: Vec<OrderRow>,
    pub aic_order: usize,
    pub bic_order: usize,
    pub hqic_order: usize,
}

impl OrderSelection {
    pub fn order(&self, criterion: Criterion) -> usize {
        match criterion {
            Criterion::Aic => self.aic_order,
            Criterion::Bic => self.bic_order,
            Criterion::Hqic => self.hqic_order,
        }
    }
}

/// Evaluates AIC, BIC and HQIC for orders `1..=max_p`.
///
/// Every order is estimated on observations `max_p..T` so the criteria are
/// computed on identical samples:
/// `ln det Σ̃_p + penalty · (n²p + n) / T'` with `T' = T − max_p` and
/// penalties `2`, `ln T'` and `2 ln ln T'`.
pub fn select_order<T: Scalar>(
    ds: &TimeSeriesDataset<T>,
    max_p: usize,
) -> Result<OrderSelection, VarError> {
    select_order_values(ds.values(), max_p)
}

pub(crate) fn select_order_values<T: Scalar>(
    values: &DMatrix<T>,
    max_p: usize,
) -> Result<OrderSelection, VarError> {
    if max_p == 0 {
        return Err(VarError::ZeroOrder);
    }
    let (len, n) = values.shape();
    let needed = n * max_p + n + 1;
    if len <= needed {
        return Err(VarError::InsufficientObservations {
            order: max_p,
            needed,
            got: len,
        });
    }
    let nobs = len - max_p;
    let tn = nobs as f64;
    let targets = values.rows(max_p, nobs).into_owned();
    let mut rows = Vec::with_capacity(max_p);
    for p in 1..=max_p {
        let design = lagged_design(values, p, max_p);
        let resid = crate::stattests::residualize_columns(&design, &targets)?;
        let sigma = (resid.transpose() * &resid).map(|v| v.as_f64()) / tn;
        let chol = sigma.cholesky().ok_or(VarError::SingularCovariance)?;
        let ln_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let k = (n * n * p + n) as f64;
        rows.push(OrderRow {
            order: p,
            aic: ln_det + 2.0 * k / tn,
            bic: ln_det + tn.ln() * k / tn,
            hqic: ln_det + 2.0 * tn.ln().ln() * k / tn,
        });
    }
    let argmin = |f: fn(&OrderRow) -> f64| {
        rows.iter()
            .fold(None::<&OrderRow>, |best, r| match best {
                Some(b) if f(b) <= f(r) => Some(b),
                _ => Some(r),
            })
            .map(|r| r.order)
            .unwrap_or(1)
    };
    Ok(OrderSelection {
        max_order: max_p,
        nobs,
        aic_order: argmin(|r| r.aic),
        bic_order: argmin(|r| r.bic),
        hqic_order: argmin(|r| r.hqic),
        rows,
    })
}

/// `np × np` companion matrix of `M_1 .. M_p`.
pub fn companion<T: Scalar>(coefficients: &[DMatrix<T>]) -> DMatrix<T> {
    let p = coefficients.len();
    let n = coefficients.first().map_or(0, |m| m.nrows());
    let mut c = DMatrix::zeros(n * p, n * p);
    for (lag, m) in coefficients.iter().enumerate() {
        c.view_mut((0, lag * n), (n, n)).copy_from(m);
    }
    for k in 0..n * (p.saturating_sub(1)) {
        c[(n + k, k)] = T::one();
    }
    c
}

pub fn spectral_radius<T: Scalar>(coefficients: &[DMatrix<T>]) -> T {
    let c = companion(coefficients);
    if c.is_empty() {
        return T::zero();
    }
    match Schur::try_new(c.clone(), T::default_epsilon(), 10_000) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re * z.re + z.im * z.im).sqrt())
            .fold(T::zero(), |a, b| if b > a { b } else { a }),
        None => gelfand_radius(&c),
    }
}

// ‖C^k‖^{1/k} with repeated squaring; used only if the Schur iteration stalls.
fn gelfand_radius<T: Scalar>(c: &DMatrix<T>) -> T {
    let mut m = c.clone();
    let mut log_scale = T::zero();
    let mut k = T::one();
    for _ in 0..30 {
        let norm = m.norm();
        if norm == T::zero() {
            return T::zero();
        }
        log_scale += norm.ln() / k;
        m /= norm;
        m = &m * &m;
        k *= T::of(2.0);
    }
    (log_scale + m.norm().ln() / k).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    fn simulate_ar1(coef: f64, len: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(len, 1);
        let mut prev = 0.0;
        for t in 0..len {
            let e: f64 = StandardNormal.sample(&mut rng);
            prev = coef * prev + e;
            x[(t, 0)] = prev;
        }
        x
    }

    #[test]
    fn recovers_ar1_coefficient() {
        let x = simulate_ar1(0.5, 5000, 1);
        let m = fit_values(&x, names(1), 1).unwrap();
        assert!((m.coefficients[0][(0, 0)] - 0.5).abs() < 0.05);
    }

    #[test]
    fn pure_noise_has_small_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(5000, 2, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let m = fit_values(&x, names(2), 1).unwrap();
        assert!(m.coefficients[0].iter().all(|c| c.abs() < 0.05));
    }

    #[test]
    fn insufficient_data_errors() {
        // n = 1, p = 1: T = n·p + 2 = 3 observations.
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 0.5]);
        assert!(matches!(
            fit_values(&x, names(1), 1),
            Err(VarError::InsufficientObservations { .. })
        ));
        assert!(matches!(fit_values(&x, names(1), 0), Err(VarError::ZeroOrder)));
    }

    #[test]
    fn fitted_plus_residuals_reconstructs_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(300, 3, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let m = fit_values(&x, names(3), 2).unwrap();
        let recon = m.fitted(&x) + &m.residuals;
        let diff = (recon - x.rows(2, 298)).abs().max();
        assert!(diff < 1e-8);
        for j in 0..3 {
            assert!(m.residuals.column(j).mean().abs() < 1e-8);
        }
    }

    #[test]
    fn single_order_selection_table() {
        let x = simulate_ar1(0.3, 200, 4);
        let sel = select_order_values(&x, 1).unwrap();
        assert_eq!(sel.rows.len(), 1);
        assert_eq!(sel.bic_order, 1);
        assert_eq!(sel.hqic_order, 1);
        assert_eq!(sel.aic_order, 1);
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(spectral_radius(&[DMatrix::<f64>::zeros(2, 2)]), 0.0);
        let r = spectral_radius(&[DMatrix::from_element(1, 1, 0.9f64)]);
        assert!((r - 0.9).abs() < 1e-12);

        // λ² − 0.5λ − 0.3 = 0 solved directly.
        let disc: f64 = 0.25 + 4.0 * 0.3;
        let roots = [(0.5 + disc.sqrt()) / 2.0, (0.5 - disc.sqrt()) / 2.0];
        let expected = roots.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        let r = spectral_radius(&[DMatrix::from_element(1, 1, 0.5f64), DMatrix::from_element(1, 1, 0.3)]);
        assert!((r - expected).abs() < 1e-10, "{r} vs {expected}");
    }

    #[test]
    fn gelfand_fallback_agrees_with_schur() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5f64, 0.4, -0.3, 0.2]);
        let c = companion(std::slice::from_ref(&m));
        let a = gelfand_radius(&c);
        let b = spectral_radius(&[m]);
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("HQIC".parse::<Criterion>().unwrap(), Criterion::Hqic);
        assert!("fpe".parse::<Criterion>().is_err());
    }
}
