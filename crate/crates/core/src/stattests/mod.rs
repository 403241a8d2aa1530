//! Hypothesis tests and the regression primitive shared by the estimators.

mod adf;
pub mod distributions;
mod normality;
mod ols;
mod partial;

use thiserror::Error;

pub use adf::{adf_test, adf_test_with_lag, mackinnon_p_value, AdfResult, AdfSpec};
pub use normality::{jarque_bera, jarque_bera_statistic, JarqueBera, NormalityResult};
pub use ols::{ols, OlsFit};
pub use partial::{partial_correlation_test, PartialCorrelation};
pub(crate) use ols::residualize as residualize_columns;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },
    #[error("need more observations than regressors ({rows} rows, {cols} columns)")]
    Underdetermined { rows: usize, cols: usize },
    #[error("series too short: need {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series is constant")]
    Constant,
    #[error("column {0} is constant")]
    ConstantColumn(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[-1.0, -2.0, -3.0, -4.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 4]), None);
    }
}
