//! VAR-LiNGAM: `x(t) = Σ_{τ=0..p} B_τ x(t−τ) + e(t)` estimated as a reduced-form
//! VAR followed by LiNGAM on its residuals, with `B_τ = (I − B0) M_τ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{mean_and_sd, standardize, DatasetError, TimeSeriesDataset};
use crate::lingam::{
    estimate_b0, EdgeConstraint, Knowledge, KnowledgeError, LingamConfig, LingamError,
    LingamWarning, ResolvedKnowledge,
};
use crate::scalar::Scalar;
use crate::stattests::{adf_test_with_lag, ols, AdfSpec, StatsError};
use crate::var::{self, Criterion, OrderSelection, VarError};

#[derive(Debug, Error)]
pub enum VarLingamError {
    #[error("VAR stage: {0}")]
    Var(#[from] VarError),
    #[error("LiNGAM stage: {0}")]
    Lingam(#[from] LingamError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error("lagged re-estimation: {0}")]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VarLingamConfig {
    /// Fixed VAR order; selected by `criterion` over `1..=max_order` when `None`.
    pub order: Option<usize>,
    pub max_order: usize,
    pub criterion: Criterion,
    /// Z-score every column before fitting.
    pub standardize: bool,
    pub lingam: LingamConfig,
    /// Level of the per-variable ADF screen that raises `Nonstationary` warnings.
    pub adf_alpha: f64,
}

impl Default for VarLingamConfig {
    fn default() -> Self {
        Self {
            order: None,
            max_order: 10,
            criterion: Criterion::Hqic,
            standardize: false,
            lingam: LingamConfig::default(),
            adf_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarLingamWarning {
    Nonstationary { variable: String, p_value: f64 },
    Lingam(LingamWarning),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarLingamModel<T: Scalar> {
    pub variable_names: Vec<String>,
    pub var_order: usize,
    /// `B0 .. Bp`, indexed `[(effect, cause)]`.
    pub b: Vec<DMatrix<T>>,
    /// `B0` and `(I − B0) M_τ` before lagged knowledge and pruning.
    pub b_unpruned: Vec<DMatrix<T>>,
    /// Reduced-form VAR coefficients `M_1 .. M_p`.
    pub m: Vec<DMatrix<T>>,
    pub causal_order: Vec<usize>,
    pub standardized: bool,
    /// Structural shocks `e(t) = (I − B0) u(t)`.
    pub residuals: DMatrix<T>,
    pub order_selection: Option<OrderSelection>,
    pub warnings: Vec<VarLingamWarning>,
}

impl<T: Scalar> VarLingamModel<T> {
    pub fn n_vars(&self) -> usize {
        self.variable_names.len()
    }

    pub fn to_document(&self) -> VarLingamDocument {
        VarLingamDocument {
            variable_names: self.variable_names.clone(),
            var_order: self.var_order,
            standardized: self.standardized,
            causal_order: self
                .causal_order
                .iter()
                .map(|&i| self.variable_names[i].clone())
                .collect(),
            adjacency: self
                .b
                .iter()
                .enumerate()
                .map(|(lag, m)| LagMatrix {
                    lag,
                    values: m
                        .row_iter()
                        .map(|r| r.iter().map(|v| v.as_f64()).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Serializable view of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarLingamDocument {
    pub variable_names: Vec<String>,
    pub var_order: usize,
    pub standardized: bool,
    pub causal_order: Vec<String>,
    pub adjacency: Vec<LagMatrix>,
}

/// Row-major `[effect][cause]` weights at one lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagMatrix {
    pub lag: usize,
    pub values: Vec<Vec<f64>>,
}

/// Forbids every lag-0 edge from a `us_vars` member into a `jp_vars` member.
pub fn make_market_knowledge(us_vars: &[&str], jp_vars: &[&str]) -> Result<Knowledge, KnowledgeError> {
    if let Some(dup) = us_vars.iter().find(|u| jp_vars.contains(u)) {
        return Err(KnowledgeError::OverlappingGroups(dup.to_string()));
    }
    let forbidden = us_vars
        .iter()
        .flat_map(|u| jp_vars.iter().map(move |j| EdgeConstraint::new(*u, *j, 0)));
    Knowledge::new(forbidden, [])
}

pub fn fit_var_lingam<T: Scalar>(
    ds: &TimeSeriesDataset<T>,
    knowledge: &Knowledge,
    config: &VarLingamConfig,
) -> Result<VarLingamModel<T>, VarLingamError> {
    let data = if config.standardize {
        standardize(ds)?.0
    } else {
        ds.clone()
    };
    let names = data.names().to_vec();
    let n = names.len();
    let values = data.values();
    let resolved = knowledge.resolve(&names)?;

    let (order, order_selection) = match config.order {
        Some(p) => (p, None),
        None => {
            let sel = var::select_order_values(values, feasible_max_order(values, config.max_order))?;
            (sel.order(config.criterion), Some(sel))
        }
    };
    let mut warnings = Vec::new();
    for (j, name) in names.iter().enumerate() {
        if let Ok(res) = adf_test_with_lag(values.column(j).as_slice(), AdfSpec::C, order) {
            if res.p_value > config.adf_alpha {
                warnings.push(VarLingamWarning::Nonstationary {
                    variable: name.clone(),
                    p_value: res.p_value,
                });
            }
        }
    }

    let var_model = var::fit_values(values, names.clone(), order)?;
    let inst = estimate_b0(&var_model.residuals, &names, knowledge, &config.lingam)?;
    warnings.extend(inst.warnings.iter().cloned().map(VarLingamWarning::Lingam));

    let b0 = inst.b0.clone();
    let i_minus_b0 = DMatrix::identity(n, n) - &b0;
    let mut b_unpruned = vec![b0.clone()];
    b_unpruned.extend(var_model.coefficients.iter().map(|m| &i_minus_b0 * m));

    let mut b = b_unpruned.clone();
    reestimate_forbidden_rows(values, &b0, &resolved, &mut b)?;

    let sd: Vec<T> = (0..n).map(|j| mean_and_sd(values.column(j).as_slice()).1).collect();
    for (lag, m) in b.iter_mut().enumerate().skip(1) {
        for effect in 0..n {
            for cause in 0..n {
                let s = (m[(effect, cause)] * sd[cause] / sd[effect]).as_f64().abs();
                if s < config.lingam.prune_threshold && !resolved.is_required(cause, effect, lag) {
                    m[(effect, cause)] = T::zero();
                }
            }
        }
    }

    let residuals = &var_model.residuals * i_minus_b0.transpose();
    Ok(VarLingamModel {
        variable_names: names,
        var_order: order,
        b,
        b_unpruned,
        m: var_model.coefficients,
        causal_order: inst.causal_order,
        standardized: config.standardize,
        residuals,
        order_selection,
        warnings,
    })
}

fn feasible_max_order<T: Scalar>(values: &DMatrix<T>, requested: usize) -> usize {
    let (len, n) = values.shape();
    let mut p = requested.max(1);
    while p > 1 && len <= n * p + n + 1 + p {
        p -= 1;
    }
    p
}

// Rows with a forbidden lagged cause are refit on the structural equation
// `x_e(t) − Σ_j B0[e, j] x_j(t) = c + Σ_τ Σ_{allowed j} B_τ[e, j] x_j(t−τ) + e(t)`.
fn reestimate_forbidden_rows<T: Scalar>(
    values: &DMatrix<T>,
    b0: &DMatrix<T>,
    resolved: &ResolvedKnowledge,
    b: &mut [DMatrix<T>],
) -> Result<(), VarLingamError> {
    let p = b.len() - 1;
    let (len, n) = values.shape();
    let rows = len - p;
    let design = var::lagged_design(values, p, p);
    for effect in 0..n {
        let hit = resolved
            .forbidden
            .iter()
            .any(|&(_, e, lag)| e == effect && lag >= 1 && lag <= p);
        if !hit {
            continue;
        }
        let mut keep = vec![0usize];
        let mut slots = Vec::new();
        for lag in 1..=p {
            for cause in 0..n {
                if !resolved.is_forbidden(cause, effect, lag) {
                    keep.push(1 + (lag - 1) * n + cause);
                    slots.push((lag, cause));
                }
            }
        }
        let x = design.select_columns(&keep);
        let y = DVector::from_fn(rows, |r, _| {
            let t = p + r;
            let mut v = values[(t, effect)];
            for j in 0..n {
                v -= b0[(effect, j)] * values[(t, j)];
            }
            v
        });
        let fit = ols(&y, &x)?;
        for m in b.iter_mut().skip(1) {
            m.row_mut(effect).fill(T::zero());
        }
        for (k, &(lag, cause)) in slots.iter().enumerate() {
            b[lag][(effect, cause)] = fit.coefficients[k + 1];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simulate(b0: &DMatrix<f64>, b1: &DMatrix<f64>, len: usize, seed: u64) -> TimeSeriesDataset<f64> {
        let n = b0.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (DMatrix::identity(n, n) - b0).try_inverse().unwrap();
        let r = 3f64.sqrt();
        let burn = 200;
        let mut x = DVector::zeros(n);
        let mut out = DMatrix::zeros(len, n);
        for t in 0..len + burn {
            let e = DVector::from_fn(n, |_, _| rng.random_range(-r..r));
            x = &a * (b1 * &x + e);
            if t >= burn {
                out.set_row(t - burn, &x.transpose());
            }
        }
        let names = (1..=n).map(|i| format!("x{i}")).collect();
        TimeSeriesDataset::from_matrix(names, out).unwrap()
    }

    #[test]
    fn recovers_three_variable_truth() {
        let mut b0 = DMatrix::zeros(3, 3);
        b0[(1, 0)] = 0.5;
        let b1 = DMatrix::identity(3, 3) * 0.3;
        let ds = simulate(&b0, &b1, 10_000, 1);
        let cfg = VarLingamConfig {
            order: Some(1),
            ..Default::default()
        };
        let m = fit_var_lingam(&ds, &Knowledge::default(), &cfg).unwrap();
        assert!((&m.b[0] - &b0).amax() < 0.08, "{}", m.b[0]);
        assert!((&m.b[1] - &b1).amax() < 0.08, "{}", m.b[1]);
        let pos = |v: usize| m.causal_order.iter().position(|&c| c == v).unwrap();
        assert!(pos(0) < pos(1));
    }

    #[test]
    fn correction_identity_holds_before_pruning() {
        let mut b0 = DMatrix::zeros(3, 3);
        b0[(2, 1)] = -0.4;
        let mut b1 = DMatrix::identity(3, 3) * 0.2;
        b1[(0, 2)] = 0.3;
        let ds = simulate(&b0, &b1, 3000, 2);
        let m = fit_var_lingam(&ds, &Knowledge::default(), &VarLingamConfig::default()).unwrap();
        let i_b0 = DMatrix::identity(3, 3) - &m.b[0];
        for (tau, mt) in m.m.iter().enumerate() {
            assert!((&m.b_unpruned[tau + 1] - &i_b0 * mt).amax() < 1e-8);
        }
    }

    #[test]
    fn independent_noise_is_pruned_to_empty() {
        let z = DMatrix::zeros(3, 3);
        let ds = simulate(&z, &z, 10_000, 3);
        let cfg = VarLingamConfig {
            order: Some(1),
            ..Default::default()
        };
        let m = fit_var_lingam(&ds, &Knowledge::default(), &cfg).unwrap();
        for b in &m.b {
            assert!(b.iter().all(|&v| v == 0.0), "{b}");
        }
        assert!((&m.b_unpruned[1] - &m.m[0]).amax() < 1e-12);
    }

    #[test]
    fn lagged_knowledge_zeroes_and_refits() {
        let b0 = DMatrix::zeros(2, 2);
        let mut b1 = DMatrix::identity(2, 2) * 0.3;
        b1[(1, 0)] = 0.4;
        let ds = simulate(&b0, &b1, 5000, 4);
        let k = Knowledge::new([EdgeConstraint::new("x1", "x2", 1)], []).unwrap();
        let cfg = VarLingamConfig {
            order: Some(1),
            ..Default::default()
        };
        let m = fit_var_lingam(&ds, &k, &cfg).unwrap();
        assert_eq!(m.b[1][(1, 0)], 0.0);
        assert!((m.b[1][(1, 1)] - 0.3).abs() < 0.1);
    }

    #[test]
    fn market_knowledge_forbids_cross_products() {
        let k = make_market_knowledge(
            &["Close_SP", "Close_US10Y"],
            &["Close_Nikkei", "Close_JGBF", "Close_JGB"],
        )
        .unwrap();
        assert_eq!(k.forbidden.len(), 6);
        assert!(k.forbidden.iter().all(|c| c.lag == 0));
        assert!(make_market_knowledge(&[], &["a"]).unwrap().is_empty());
        assert!(matches!(
            make_market_knowledge(&["a", "b"], &["b"]),
            Err(KnowledgeError::OverlappingGroups(_))
        ));
    }

    #[test]
    fn document_round_trips() {
        let b0 = DMatrix::zeros(2, 2);
        let b1 = DMatrix::identity(2, 2) * 0.5;
        let ds = simulate(&b0, &b1, 2000, 5);
        let m = fit_var_lingam(&ds, &Knowledge::default(), &VarLingamConfig::default()).unwrap();
        let doc = m.to_document();
        let text = serde_json::to_string(&doc).unwrap();
        let back: VarLingamDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(doc.adjacency.len(), m.var_order + 1);
    }
}
