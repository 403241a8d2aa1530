//! Exact linear assignment (Hungarian method with potentials, O(n³)).

use nalgebra::DMatrix;

use super::LingamError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    /// Sum of the assigned entries, accumulated in row order.
    pub cost: T,
}

/// Minimum-cost perfect matching of rows to columns of a square matrix.
pub fn solve_assignment<T: Scalar>(cost: &DMatrix<T>) -> Result<Assignment<T>, LingamError> {
    let n = cost.nrows();
    if cost.ncols() != n {
        return Err(LingamError::Shape(format!(
            "assignment needs a square matrix, got {}x{}",
            n,
            cost.ncols()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(LingamError::Shape("assignment costs must be finite".into()));
    }
    if n == 0 {
        return Ok(Assignment {
            row_to_col: vec![],
            cost: T::zero(),
        });
    }

    let inf = T::of(f64::INFINITY);
    // 1-based potentials; index 0 is the virtual source column.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[matched_row[j] - 1] = j - 1;
    }
    let total = row_to_col
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &j)| acc + cost[(i, j)]);
    Ok(Assignment {
        row_to_col,
        cost: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(cost: &DMatrix<f64>) -> f64 {
        let n = cost.nrows();
        (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().fold(0.0, |a, (i, &j)| a + cost[(i, j)]))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.random_range(1..=7);
            let cost = DMatrix::from_fn(n, n, |_, _| rng.random_range(0..100) as f64);
            let a = solve_assignment(&cost).unwrap();
            assert_eq!(a.cost, brute_force(&cost));
            let mut cols = a.row_to_col.clone();
            cols.sort_unstable();
            assert_eq!(cols, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn five_by_five_real_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let cost = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() * 10.0 - 3.0);
            let a = solve_assignment(&cost).unwrap();
            assert!((a.cost - brute_force(&cost)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_square_and_infinite() {
        assert!(solve_assignment(&DMatrix::<f64>::zeros(2, 3)).is_err());
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 0)] = f64::INFINITY;
        assert!(solve_assignment(&m).is_err());
    }
}
