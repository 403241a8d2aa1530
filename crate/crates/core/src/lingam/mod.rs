//! ICA-LiNGAM for the instantaneous (lag-0) structure of VAR residuals.
//!
//! `e = B0 e + ε` with acyclic `B0` and independent non-Gaussian `ε`. ICA gives
//! `W ≈ P D (I − B0)`; the row permutation `P` and scaling `D` are undone by an
//! assignment problem, after which a causal order is searched for and the
//! coefficients are re-estimated by ordinary least squares along that order.

pub mod assignment;
pub mod ica;
pub mod knowledge;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assignment::{solve_assignment, Assignment};
pub use ica::{amari_error, fastica, IcaAttempt, IcaConfig, IcaResult};
pub use knowledge::{EdgeConstraint, Knowledge, KnowledgeError, ResolvedKnowledge};

use crate::dataset::mean_and_sd;
use crate::scalar::Scalar;
use crate::stattests::{jarque_bera, ols, StatsError};

/// Largest `n` for which the causal order is found by exhaustive search.
pub const MAX_EXACT_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LingamError {
    #[error("ICA did not converge in {} attempts (final changes: {})", .attempts.len(), final_changes(.attempts))]
    IcaNonConvergence { attempts: Vec<IcaAttempt> },
    #[error("need more than 10 samples per signal: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("signal {0} is constant")]
    ConstantSignal(usize),
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("unmixing matrix admits no zero-free diagonal")]
    SingularAssignment,
    #[error("{n} variables exceed exact order search (max {MAX_EXACT_ORDER}); enable approximate search")]
    TooManyVariables { n: usize },
    #[error("required edges admit no acyclic causal order")]
    KnowledgeContradiction,
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Shape(String),
}

fn final_changes(attempts: &[IcaAttempt]) -> String {
    attempts
        .iter()
        .map(|a| format!("{:.3e}", a.changes.last().copied().unwrap_or(f64::NAN)))
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LingamWarning {
    /// Fewer than `n − 1` residual columns reject normality at 5%.
    GaussianResiduals { non_gaussian: usize, needed: usize },
    /// At least two recovered ICA sources look Gaussian.
    GaussianComponents { count: usize },
    /// A forbidden edge that the unconstrained estimate would have kept.
    ConstraintBinding {
        cause: String,
        effect: String,
        lag: usize,
        unconstrained: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LingamConfig {
    pub ica: IcaConfig,
    /// Standardized coefficients below this magnitude are set to zero.
    pub prune_threshold: f64,
    /// Greedy order search for more than [`MAX_EXACT_ORDER`] variables.
    pub approximate_order: bool,
}

impl Default for LingamConfig {
    fn default() -> Self {
        Self {
            ica: IcaConfig::default(),
            prune_threshold: 0.05,
            approximate_order: false,
        }
    }
}

/// Estimated lag-0 structure. `b0[(effect, cause)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantaneousModel<T: Scalar> {
    pub variable_names: Vec<String>,
    pub b0: DMatrix<T>,
    /// Variable indices, causes first.
    pub causal_order: Vec<usize>,
    /// `true` for off-diagonal entries removed by ordering, knowledge or pruning.
    pub pruned_mask: DMatrix<bool>,
    /// `I − W'` straight from ICA, before ordering and re-estimation.
    pub b0_ica: DMatrix<T>,
    pub ica_iterations: usize,
    pub warnings: Vec<LingamWarning>,
}

/// Permutes the rows of `w` so the diagonal is as large as possible in the
/// `Σ 1/|w_ii|` sense, then scales every row to a unit diagonal.
pub fn permute_and_scale<T: Scalar>(w: &DMatrix<T>) -> Result<DMatrix<T>, LingamError> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(LingamError::Shape(format!("{}x{} unmixing matrix", n, w.ncols())));
    }
    let inverse = w.map(|v| if v == T::zero() { None } else { Some(T::one() / v.abs()) });
    let worst = inverse.iter().flatten().fold(T::zero(), |m, &c| m.max(c));
    if !worst.is_finite() {
        return Err(LingamError::SingularAssignment);
    }
    // Any assignment through a zero must cost more than every zero-free one.
    let big = worst * T::of(2.0 * (n as f64 + 1.0)) + T::one();
    let cost = inverse.map(|c| c.unwrap_or(big));
    let assignment = solve_assignment(&cost)?;

    let mut out = DMatrix::zeros(n, n);
    for (i, &col) in assignment.row_to_col.iter().enumerate() {
        let d = w[(i, col)];
        if d == T::zero() {
            return Err(LingamError::SingularAssignment);
        }
        out.set_row(col, &(w.row(i) / d));
        out[(col, col)] = T::one();
    }
    Ok(out)
}

/// Causal order minimizing the squared mass of `b` above the diagonal once
/// rows and columns are reordered. Required lag-0 edges must point forward.
pub fn search_causal_order<T: Scalar>(
    b: &DMatrix<T>,
    required: &[(usize, usize)],
    approximate: bool,
) -> Result<Vec<usize>, LingamError> {
    let n = b.nrows();
    let sq = b.map(|v| v.as_f64() * v.as_f64());
    if n > MAX_EXACT_ORDER {
        if !approximate {
            return Err(LingamError::TooManyVariables { n });
        }
        return greedy_order(&sq, required);
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for order in (0..n).permutations(n) {
        let mut pos = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        if required.iter().any(|&(c, e)| pos[c] >= pos[e]) {
            continue;
        }
        let mut cost = 0.0;
        for k in 0..n {
            for l in k + 1..n {
                cost += sq[(order[k], order[l])];
            }
        }
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, order));
        }
    }
    best.map(|(_, o)| o).ok_or(LingamError::KnowledgeContradiction)
}

// Repeatedly places the variable least explained by the ones still unplaced.
fn greedy_order(sq: &DMatrix<f64>, required: &[(usize, usize)]) -> Result<Vec<usize>, LingamError> {
    let n = sq.nrows();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let pick = remaining
            .iter()
            .copied()
            .filter(|&v| {
                !required
                    .iter()
                    .any(|&(c, e)| e == v && remaining.contains(&c))
            })
            .map(|v| {
                let mass: f64 = remaining.iter().filter(|&&c| c != v).map(|&c| sq[(v, c)]).sum();
                (mass, v)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, v)| v)
            .ok_or(LingamError::KnowledgeContradiction)?;
        remaining.retain(|&v| v != pick);
        order.push(pick);
    }
    Ok(order)
}

/// Estimates `B0` from residuals (`T × n`, one column per variable).
///
/// Only lag-0 entries of `knowledge` are used.
pub fn estimate_b0<T: Scalar>(
    residuals: &DMatrix<T>,
    names: &[String],
    knowledge: &Knowledge,
    config: &LingamConfig,
) -> Result<InstantaneousModel<T>, LingamError> {
    let n = residuals.ncols();
    if names.len() != n {
        return Err(LingamError::Shape(format!(
            "{} names for {} residual columns",
            names.len(),
            n
        )));
    }
    let resolved = knowledge.resolve(names)?;
    let required: Vec<(usize, usize)> = resolved.required_at(0).collect();
    if required.iter().any(|&(c, e)| resolved.is_forbidden(c, e, 0)) {
        return Err(LingamError::KnowledgeContradiction);
    }
    let mut warnings = Vec::new();

    if n >= 2 {
        if let Ok(jb) = jarque_bera(residuals) {
            let non_gaussian = jb.columns.iter().filter(|c| c.p_value < 0.05).count();
            if non_gaussian + 1 < n {
                log::warn!("only {non_gaussian} of {n} residual columns reject normality");
                warnings.push(LingamWarning::GaussianResiduals {
                    non_gaussian,
                    needed: n - 1,
                });
            }
        }
    }

    let ica = fastica(&residuals.transpose(), &config.ica)?;
    if ica.gaussian_sources >= 2 {
        warnings.push(LingamWarning::GaussianComponents {
            count: ica.gaussian_sources,
        });
    }
    let w = permute_and_scale(&ica.unmixing)?;
    let b0_ica = DMatrix::identity(n, n) - w;
    let order = search_causal_order(&b0_ica, &required, config.approximate_order)?;

    let centered = center_columns(residuals);
    let sd: Vec<T> = (0..n)
        .map(|j| mean_and_sd(residuals.column(j).as_slice()).1)
        .collect();
    let standardized = |b: T, cause: usize, effect: usize| (b * sd[cause] / sd[effect]).as_f64();

    // Regress each variable on its predecessors, minus forbidden causes.
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, &effect) in order.iter().enumerate() {
        parents[effect] = order[..k]
            .iter()
            .copied()
            .filter(|&c| !resolved.is_forbidden(c, effect, 0))
            .collect();
    }
    let mut b0 = regress_on_parents(&centered, &parents)?;

    let mut refit = false;
    for effect in 0..n {
        let before = parents[effect].len();
        parents[effect].retain(|&c| {
            resolved.is_required(c, effect, 0)
                || standardized(b0[(effect, c)], c, effect).abs() >= config.prune_threshold
        });
        refit |= parents[effect].len() != before;
    }
    if refit {
        b0 = regress_on_parents(&centered, &parents)?;
    }

    for &(c, e, lag) in &resolved.forbidden {
        if lag != 0 {
            continue;
        }
        let unconstrained = standardized(b0_ica[(e, c)], c, e);
        if unconstrained.abs() >= config.prune_threshold {
            log::warn!("forbidden edge {} -> {} carries {unconstrained:.3}", names[c], names[e]);
            warnings.push(LingamWarning::ConstraintBinding {
                cause: names[c].clone(),
                effect: names[e].clone(),
                lag: 0,
                unconstrained,
            });
        }
    }
    warnings.sort_by_key(|w| format!("{w:?}"));

    let pruned_mask = DMatrix::from_fn(n, n, |i, j| i != j && b0[(i, j)] == T::zero());
    Ok(InstantaneousModel {
        variable_names: names.to_vec(),
        b0,
        causal_order: order,
        pruned_mask,
        b0_ica,
        ica_iterations: ica.iterations,
        warnings,
    })
}

pub(crate) fn center_columns<T: Scalar>(x: &DMatrix<T>) -> DMatrix<T> {
    let mut out = x.clone();
    let len = T::of(x.nrows() as f64);
    for mut col in out.column_iter_mut() {
        let m = col.sum() / len;
        col.add_scalar_mut(-m);
    }
    out
}

// No intercept: columns are centered.
fn regress_on_parents<T: Scalar>(
    x: &DMatrix<T>,
    parents: &[Vec<usize>],
) -> Result<DMatrix<T>, LingamError> {
    let n = x.ncols();
    let mut b = DMatrix::zeros(n, n);
    for (effect, ps) in parents.iter().enumerate() {
        if ps.is_empty() {
            continue;
        }
        let design = x.select_columns(ps);
        let y: DVector<T> = x.column(effect).into_owned();
        let fit = ols(&y, &design)?;
        for (k, &c) in ps.iter().enumerate() {
            b[(effect, c)] = fit.coefficients[k];
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        let r = 3f64.sqrt();
        rng.random_range(-r..r)
    }

    fn two_var(seed: u64, len: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(len, 2);
        for t in 0..len {
            let x1 = uniform(&mut rng);
            x[(t, 0)] = x1;
            x[(t, 1)] = 0.8 * x1 + uniform(&mut rng);
        }
        x
    }

    #[test]
    fn identity_is_unchanged() {
        let w = DMatrix::<f64>::identity(4, 4);
        assert_eq!(permute_and_scale(&w).unwrap(), w);
    }

    #[test]
    fn swapped_diagonal_is_restored() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 2.0, 0.0]);
        let out = permute_and_scale(&w).unwrap();
        assert_eq!(out, DMatrix::identity(2, 2));
    }

    #[test]
    fn zero_matrix_is_singular() {
        let w = DMatrix::<f64>::zeros(3, 3);
        assert!(matches!(permute_and_scale(&w), Err(LingamError::SingularAssignment)));
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 0.0]);
        assert!(matches!(permute_and_scale(&w), Err(LingamError::SingularAssignment)));
    }

    #[test]
    fn recovers_two_variable_chain() {
        let x = two_var(1, 10_000);
        let m = estimate_b0(&x, &names(2), &Knowledge::default(), &LingamConfig::default()).unwrap();
        assert_eq!(m.causal_order, vec![0, 1]);
        assert!((m.b0[(1, 0)] - 0.8).abs() < 0.05, "{}", m.b0);
        assert_eq!(m.b0[(0, 1)], 0.0);
        assert!(m.pruned_mask[(0, 1)] && !m.pruned_mask[(1, 0)]);
    }

    #[test]
    fn independent_columns_give_empty_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(10_000, 3, |_, _| uniform(&mut rng));
        let m = estimate_b0(&x, &names(3), &Knowledge::default(), &LingamConfig::default()).unwrap();
        assert!(m.b0.iter().all(|&v| v == 0.0), "{}", m.b0);
    }

    #[test]
    fn forbidden_edge_is_zero_and_reported() {
        let x = two_var(3, 10_000);
        let k = Knowledge::new([EdgeConstraint::new("x1", "x2", 0)], []).unwrap();
        let m = estimate_b0(&x, &names(2), &k, &LingamConfig::default()).unwrap();
        assert_eq!(m.b0[(1, 0)], 0.0);
        assert!(m
            .warnings
            .iter()
            .any(|w| matches!(w, LingamWarning::ConstraintBinding { cause, .. } if cause == "x1")));
    }

    #[test]
    fn required_cycle_is_contradiction() {
        let x = two_var(4, 2000);
        let k = Knowledge::new(
            [],
            [EdgeConstraint::new("x1", "x2", 0), EdgeConstraint::new("x2", "x1", 0)],
        )
        .unwrap();
        assert!(matches!(
            estimate_b0(&x, &names(2), &k, &LingamConfig::default()),
            Err(LingamError::KnowledgeContradiction)
        ));
    }

    #[test]
    fn required_edge_fixes_direction() {
        let x = two_var(5, 10_000);
        let k = Knowledge::new([], [EdgeConstraint::new("x2", "x1", 0)]).unwrap();
        let m = estimate_b0(&x, &names(2), &k, &LingamConfig::default()).unwrap();
        assert_eq!(m.causal_order, vec![1, 0]);
        assert!(m.b0[(0, 1)] != 0.0);
    }

    #[test]
    fn order_search_requires_flag_above_eight() {
        let b = DMatrix::<f64>::zeros(9, 9);
        assert!(matches!(
            search_causal_order(&b, &[], false),
            Err(LingamError::TooManyVariables { n: 9 })
        ));
        let mut b = DMatrix::<f64>::zeros(9, 9);
        for i in 1..9 {
            b[(i, i - 1)] = 0.5;
        }
        assert_eq!(search_causal_order(&b, &[], true).unwrap(), (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn order_search_finds_lower_triangular_order() {
        // 2 -> 0 -> 1
        let b = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.7, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(search_causal_order(&b, &[], false).unwrap(), vec![2, 0, 1]);
    }
}
