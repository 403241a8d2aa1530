use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::distributions::student_t_two_sided;
use super::ols::residualize;
use super::{pearson, StatsError};
use crate::scalar::Scalar;

/// Outcome of a partial-correlation conditional independence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialCorrelation {
    /// Correlation of the residualized pair.
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
    /// `None` when a residual has no variance left, so the test cannot decide.
    pub independent: Option<bool>,
}

/// Tests `x ⟂ y | Z` for linear association.
///
/// `z` holds one conditioning variable per column (it may have zero columns).
/// Both inputs are residualized on `[1, Z]`; the residual correlation `r` is
/// referred to a Student-t with `T − 2 − |Z|` degrees of freedom.
pub fn partial_correlation_test<T: Scalar>(
    x: &[T],
    y: &[T],
    z: &DMatrix<T>,
    alpha: f64,
) -> Result<PartialCorrelation, StatsError> {
    let rows = x.len();
    if y.len() != rows {
        return Err(StatsError::LengthMismatch(rows, y.len()));
    }
    if z.nrows() != rows {
        return Err(StatsError::LengthMismatch(rows, z.nrows()));
    }
    let k = z.ncols();
    if rows < k + 3 {
        return Err(StatsError::TooShort {
            needed: k + 3,
            got: rows,
        });
    }
    let dof = rows - 2 - k;

    let mut design = DMatrix::from_element(rows, k + 1, T::one());
    design.columns_mut(1, k).copy_from(z);
    let mut targets = DMatrix::zeros(rows, 2);
    for i in 0..rows {
        targets[(i, 0)] = x[i];
        targets[(i, 1)] = y[i];
    }
    let undetermined = PartialCorrelation {
        statistic: 0.0,
        p_value: f64::NAN,
        dof,
        independent: None,
    };
    let resid = match residualize(&design, &targets) {
        Ok(r) => r,
        Err(StatsError::RankDeficient { .. }) => return Ok(undetermined),
        Err(e) => return Err(e),
    };
    let rx: Vec<f64> = resid.column(0).iter().map(|v| v.as_f64()).collect();
    let ry: Vec<f64> = resid.column(1).iter().map(|v| v.as_f64()).collect();

    // Residual energy below rounding level relative to the input means the
    // conditioning set explains the variable exactly.
    let energy = |r: &[f64], orig: &[T]| {
        let e: f64 = r.iter().map(|v| v * v).sum();
        let o: f64 = orig.iter().map(|v| v.as_f64().powi(2)).sum();
        e <= (1e3 * T::default_epsilon().as_f64()).powi(2) * o.max(f64::MIN_POSITIVE)
    };
    if energy(&rx, x) || energy(&ry, y) {
        return Ok(undetermined);
    }
    let Some(r) = pearson(&rx, &ry) else {
        return Ok(undetermined);
    };
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (dof as f64 / (1.0 - r * r)).sqrt();
        student_t_two_sided(t, dof as f64)
    };
    Ok(PartialCorrelation {
        statistic: r,
        p_value,
        dof,
        independent: Some(p_value > alpha),
    })
}
