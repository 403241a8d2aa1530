use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::distributions::chi2_sf;
use super::StatsError;
use crate::scalar::Scalar;

/// Jarque-Bera result for a single column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    pub skewness: f64,
    /// Raw (non-excess) kurtosis; 3 for a normal distribution.
    pub kurtosis: f64,
    pub jb_statistic: f64,
    pub p_value: f64,
}

/// Per-column Jarque-Bera tests plus their sum against χ²(2n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JarqueBera {
    pub columns: Vec<NormalityResult>,
    pub aggregate_statistic: f64,
    pub aggregate_dof: usize,
    pub aggregate_p_value: f64,
}

pub fn jarque_bera_statistic(n: usize, skewness: f64, kurtosis: f64) -> f64 {
    n as f64 / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0)
}

pub fn jarque_bera<T: Scalar>(residuals: &DMatrix<T>) -> Result<JarqueBera, StatsError> {
    let t = residuals.nrows();
    if t < 8 {
        return Err(StatsError::TooShort { needed: 8, got: t });
    }
    let mut columns = Vec::with_capacity(residuals.ncols());
    for (j, col) in residuals.column_iter().enumerate() {
        let x: Vec<f64> = col.iter().map(|v| v.as_f64()).collect();
        let mean = x.iter().sum::<f64>() / t as f64;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for v in &x {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= t as f64;
        m3 /= t as f64;
        m4 /= t as f64;
        if m2 <= f64::EPSILON * mean.abs().max(1.0).powi(2) {
            return Err(StatsError::ConstantColumn(j));
        }
        let skewness = m3 / m2.powf(1.5);
        let kurtosis = m4 / (m2 * m2);
        let jb = jarque_bera_statistic(t, skewness, kurtosis);
        columns.push(NormalityResult {
            skewness,
            kurtosis,
            jb_statistic: jb,
            p_value: chi2_sf(jb, 2.0),
        });
    }
    let aggregate_statistic: f64 = columns.iter().map(|c| c.jb_statistic).sum();
    let aggregate_dof = 2 * columns.len();
    Ok(JarqueBera {
        aggregate_p_value: chi2_sf(aggregate_statistic, aggregate_dof as f64),
        columns,
        aggregate_statistic,
        aggregate_dof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    #[test]
    fn zero_case_gives_unit_p_value() {
        // Symmetric sample with raw kurtosis exactly 3: ±1 twice each, eight zeros.
        let mut v = vec![0.0; 12];
        v[0] = -1.0;
        v[1] = -1.0;
        v[2] = 1.0;
        v[3] = 1.0;
        let jb = jarque_bera(&DMatrix::from_column_slice(12, 1, &v)).unwrap();
        let c = &jb.columns[0];
        assert!(c.skewness.abs() < 1e-12);
        assert!((c.kurtosis - 3.0).abs() < 1e-12);
        assert!(c.jb_statistic.abs() < 1e-10);
        assert!((c.p_value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn formula_value() {
        assert!((jarque_bera_statistic(1000, 0.0, 1.8) - 60.0).abs() < 1e-9);
    }

    #[test]
    fn statistic_matches_reported_moments_and_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = Uniform::new(-1.0, 1.0).unwrap();
        let x: Vec<f64> = (0..500).map(|_| u.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.5 * v - 11.0).collect();
        let a = jarque_bera(&DMatrix::from_column_slice(500, 1, &x)).unwrap();
        let b = jarque_bera(&DMatrix::from_column_slice(500, 1, &y)).unwrap();
        let c = &a.columns[0];
        assert_eq!(c.jb_statistic, jarque_bera_statistic(500, c.skewness, c.kurtosis));
        assert!((c.jb_statistic - b.columns[0].jb_statistic).abs() < 1e-8 * c.jb_statistic);
        assert!(c.p_value < 1e-6);
    }

    #[test]
    fn aggregate_sums_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = DMatrix::from_fn(400, 3, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let jb = jarque_bera(&m).unwrap();
        let sum: f64 = jb.columns.iter().map(|c| c.jb_statistic).sum();
        assert_eq!(jb.aggregate_statistic, sum);
        assert_eq!(jb.aggregate_dof, 6);
    }

    #[test]
    fn rejects_short_and_constant_columns() {
        assert!(jarque_bera(&DMatrix::<f64>::zeros(5, 1)).is_err());
        assert!(matches!(
            jarque_bera(&DMatrix::from_element(20, 1, 2.0)),
            Err(StatsError::ConstantColumn(0))
        ));
    }
}
