use nalgebra::{DMatrix, DVector};

use super::StatsError;
use crate::scalar::Scalar;

/// Ordinary least squares fit of `y` on the columns of a design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit<T: Scalar> {
    pub coefficients: DVector<T>,
    pub residuals: DVector<T>,
    pub standard_errors: DVector<T>,
    pub t_values: DVector<T>,
    /// Observations minus regressors.
    pub dof: usize,
    /// Residual sum of squares.
    pub rss: T,
}

impl<T: Scalar> OlsFit<T> {
    pub fn sigma2(&self) -> T {
        self.rss / T::of(self.dof as f64)
    }
}

/// Solves `min ‖y − Xβ‖²` by Householder QR on the column-normalized design.
pub fn ols<T: Scalar>(y: &DVector<T>, x: &DMatrix<T>) -> Result<OlsFit<T>, StatsError> {
    let (rows, cols) = x.shape();
    if y.len() != rows {
        return Err(StatsError::LengthMismatch(y.len(), rows));
    }
    if rows <= cols {
        return Err(StatsError::Underdetermined { rows, cols });
    }

    let norms: Vec<T> = x.column_iter().map(|c| c.norm()).collect();
    let mut scaled = x.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        if norms[j] <= T::zero() {
            return Err(StatsError::RankDeficient { column: j });
        }
        col /= norms[j];
    }

    let qr = scaled.qr();
    let r = qr.r();
    for j in 0..cols {
        if r[(j, j)].abs() < T::rank_tolerance() {
            return Err(StatsError::RankDeficient { column: j });
        }
    }
    let qty = qr.q().transpose() * y;
    let beta_scaled = r
        .solve_upper_triangular(&qty)
        .ok_or(StatsError::RankDeficient { column: 0 })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or(StatsError::RankDeficient { column: 0 })?;

    let coefficients = DVector::from_iterator(cols, (0..cols).map(|j| beta_scaled[j] / norms[j]));
    let residuals = y - x * &coefficients;
    let rss = residuals.norm_squared();
    let dof = rows - cols;
    let sigma2 = rss / T::of(dof as f64);

    // Var(β̂_scaled) = σ² R⁻¹R⁻ᵀ; only the diagonal is needed.
    let standard_errors = DVector::from_iterator(
        cols,
        (0..cols).map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt() / norms[j]),
    );
    let t_values = coefficients.component_div(&standard_errors);
    Ok(OlsFit {
        coefficients,
        residuals,
        standard_errors,
        t_values,
        dof,
        rss,
    })
}

/// Residuals of every column of `ys` after projecting out the columns of `x`.
pub(crate) fn residualize<T: Scalar>(
    x: &DMatrix<T>,
    ys: &DMatrix<T>,
) -> Result<DMatrix<T>, StatsError> {
    let (rows, cols) = x.shape();
    if rows <= cols {
        return Err(StatsError::Underdetermined { rows, cols });
    }
    if cols == 0 {
        return Ok(ys.clone());
    }
    let norms: Vec<T> = x.column_iter().map(|c| c.norm()).collect();
    let mut scaled = x.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        if norms[j] <= T::zero() {
            return Err(StatsError::RankDeficient { column: j });
        }
        col /= norms[j];
    }
    let qr = scaled.qr();
    let r = qr.r();
    for j in 0..cols {
        if r[(j, j)].abs() < T::rank_tolerance() {
            return Err(StatsError::RankDeficient { column: j });
        }
    }
    let q = qr.q();
    Ok(ys - &q * (q.transpose() * ys))
}
