//! Graph data model shared by the estimators: lagged DAGs, time-series PAGs
//! and time-collapsed summary graphs, with DOT and JSON export.
//!
//! Summary strengths mean different things per source: standardized
//! coefficients for DAGs, partial-correlation statistics for PAGs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lpcmci::{Mark, TimeSeriesPAG};
use crate::scalar::Scalar;
use crate::varlingam::{LagMatrix, VarLingamModel};

/// Identifier written into every exported JSON document.
pub const SCHEMA: &str = "tscausal.graph/v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("summary form requires a model fitted on standardized data")]
    Unstandardized,
    #[error("unknown export format `{0}` (expected dot or json)")]
    UnknownFormat(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("contemporaneous adjacency is cyclic")]
    Cyclic,
    #[error("invalid graph document: {0}")]
    Document(String),
}

/// Per-lag weighted adjacency, `adjacency[τ][(effect, cause)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDag<T: Scalar> {
    variable_names: Vec<String>,
    adjacency: Vec<DMatrix<T>>,
}

impl<T: Scalar> LaggedDag<T> {
    pub fn new(variable_names: Vec<String>, adjacency: Vec<DMatrix<T>>) -> Result<Self, GraphError> {
        let n = variable_names.len();
        if adjacency.is_empty() {
            return Err(GraphError::Shape("at least the lag-0 matrix is needed".into()));
        }
        if let Some(m) = adjacency.iter().find(|m| m.shape() != (n, n)) {
            return Err(GraphError::Shape(format!(
                "{}x{} matrix for {} variables",
                m.nrows(),
                m.ncols(),
                n
            )));
        }
        if !is_acyclic(&adjacency[0]) {
            return Err(GraphError::Cyclic);
        }
        Ok(Self {
            variable_names,
            adjacency,
        })
    }

    pub fn from_var_lingam(model: &VarLingamModel<T>) -> Result<Self, GraphError> {
        Self::new(model.variable_names.clone(), model.b.clone())
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn adjacency(&self) -> &[DMatrix<T>] {
        &self.adjacency
    }

    pub fn max_lag(&self) -> usize {
        self.adjacency.len() - 1
    }

    pub fn to_f64(&self) -> LaggedDag<f64> {
        LaggedDag {
            variable_names: self.variable_names.clone(),
            adjacency: self
                .adjacency
                .iter()
                .map(|m| m.map(|v| v.as_f64()))
                .collect(),
        }
    }
}

// Kahn's algorithm on the non-zero off-diagonal pattern; a self-loop is a cycle.
fn is_acyclic<T: Scalar>(b0: &DMatrix<T>) -> bool {
    let n = b0.nrows();
    let mut indegree: Vec<usize> = (0..n)
        .map(|e| (0..n).filter(|&c| b0[(e, c)] != T::zero()).count())
        .collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(c) = ready.pop() {
        seen += 1;
        for e in 0..n {
            if e != c && b0[(e, c)] != T::zero() {
                indegree[e] -= 1;
                if indegree[e] == 0 {
                    ready.push(e);
                }
            }
        }
    }
    seen == n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrengthKind {
    Coefficient,
    Statistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEdge {
    pub cause: usize,
    pub effect: usize,
    /// Signed value of the strongest contributing link.
    pub strength: f64,
    /// Contributing lags by descending `|strength|`, ties by ascending lag.
    pub lags: Vec<usize>,
    pub contemporaneous: bool,
    /// End marks `(at cause, at effect)` when collapsed from a PAG.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marks: Option<(Mark, Mark)>,
}

impl SummaryEdge {
    /// Lag annotation as drawn on the edge; empty for contemporaneous edges.
    pub fn label(&self) -> String {
        if self.contemporaneous {
            String::new()
        } else {
            self.lags.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
        }
    }

    pub fn is_negative(&self) -> bool {
        self.strength < 0.0
    }
}

/// One node per variable; edges sorted by `(cause, effect)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryGraph {
    pub variable_names: Vec<String>,
    pub strength: StrengthKind,
    pub edges: Vec<SummaryEdge>,
}

pub trait Collapse {
    fn collapse(&self) -> SummaryGraph;
}

struct Contribution {
    lag: usize,
    strength: f64,
    marks: Option<(Mark, Mark)>,
}

fn summarize(
    names: &[String],
    kind: StrengthKind,
    groups: BTreeMap<(usize, usize), Vec<Contribution>>,
) -> SummaryGraph {
    let edges = groups
        .into_iter()
        .map(|((cause, effect), mut parts)| {
            parts.sort_by(|a, b| {
                b.strength
                    .abs()
                    .total_cmp(&a.strength.abs())
                    .then(a.lag.cmp(&b.lag))
            });
            let lags: Vec<usize> = parts.iter().map(|p| p.lag).collect();
            SummaryEdge {
                cause,
                effect,
                strength: parts[0].strength,
                contemporaneous: lags == [0],
                lags,
                marks: parts[0].marks,
            }
        })
        .collect();
    SummaryGraph {
        variable_names: names.to_vec(),
        strength: kind,
        edges,
    }
}

impl<T: Scalar> Collapse for LaggedDag<T> {
    fn collapse(&self) -> SummaryGraph {
        let n = self.variable_names.len();
        let mut groups: BTreeMap<(usize, usize), Vec<Contribution>> = BTreeMap::new();
        for (lag, m) in self.adjacency.iter().enumerate() {
            for effect in 0..n {
                for cause in 0..n {
                    let w = m[(effect, cause)].as_f64();
                    if w != 0.0 && !(lag == 0 && cause == effect) {
                        groups.entry((cause, effect)).or_default().push(Contribution {
                            lag,
                            strength: w,
                            marks: None,
                        });
                    }
                }
            }
        }
        summarize(&self.variable_names, StrengthKind::Coefficient, groups)
    }
}

impl Collapse for TimeSeriesPAG {
    fn collapse(&self) -> SummaryGraph {
        let mut groups: BTreeMap<(usize, usize), Vec<Contribution>> = BTreeMap::new();
        for e in &self.edges {
            groups.entry((e.source, e.target)).or_default().push(Contribution {
                lag: e.lag,
                strength: e.max_abs_statistic,
                marks: Some((e.source_mark, e.target_mark)),
            });
        }
        summarize(&self.variable_names, StrengthKind::Statistic, groups)
    }
}

impl Collapse for SummaryGraph {
    fn collapse(&self) -> SummaryGraph {
        self.clone()
    }
}

/// Summary of a VAR-LiNGAM model on the standardized scale, for side-by-side
/// display with PAG summaries.
pub fn varlingam_to_lpcmci_form<T: Scalar>(model: &VarLingamModel<T>) -> Result<SummaryGraph, GraphError> {
    if !model.standardized {
        return Err(GraphError::Unstandardized);
    }
    Ok(LaggedDag::from_var_lingam(model)?.collapse())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(GraphError::UnknownFormat(other.to_string())),
        }
    }
}

/// Any exportable graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Graph {
    Lagged(LaggedDag<f64>),
    Pag(TimeSeriesPAG),
    Summary(SummaryGraph),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Body {
    Lagged {
        variable_names: Vec<String>,
        adjacency: Vec<LagMatrix>,
    },
    Pag(TimeSeriesPAG),
    Summary(SummaryGraph),
}

#[derive(Serialize, Deserialize)]
struct Document {
    schema: String,
    graph: Body,
}

pub fn export(graph: &Graph, format: &str) -> Result<String, GraphError> {
    match format.parse::<ExportFormat>()? {
        ExportFormat::Dot => Ok(to_dot(graph)),
        ExportFormat::Json => to_json(graph),
    }
}

pub fn to_json(graph: &Graph) -> Result<String, GraphError> {
    let body = match graph {
        Graph::Lagged(d) => Body::Lagged {
            variable_names: d.variable_names.clone(),
            adjacency: d
                .adjacency
                .iter()
                .enumerate()
                .map(|(lag, m)| LagMatrix {
                    lag,
                    values: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
                })
                .collect(),
        },
        Graph::Pag(p) => Body::Pag(p.clone()),
        Graph::Summary(s) => Body::Summary(s.clone()),
    };
    let doc = Document {
        schema: SCHEMA.to_string(),
        graph: body,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| GraphError::Document(e.to_string()))
}

pub fn from_json(text: &str) -> Result<Graph, GraphError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| GraphError::Document(e.to_string()))?;
    if doc.schema != SCHEMA {
        return Err(GraphError::Document(format!("unsupported schema `{}`", doc.schema)));
    }
    Ok(match doc.graph {
        Body::Lagged {
            variable_names,
            adjacency,
        } => {
            let n = variable_names.len();
            let mut mats = Vec::with_capacity(adjacency.len());
            for (k, lm) in adjacency.iter().enumerate() {
                if lm.lag != k || lm.values.len() != n || lm.values.iter().any(|r| r.len() != n) {
                    return Err(GraphError::Document(format!("malformed matrix at position {k}")));
                }
                mats.push(DMatrix::from_fn(n, n, |i, j| lm.values[i][j]));
            }
            Graph::Lagged(LaggedDag::new(variable_names, mats)?)
        }
        Body::Pag(p) => Graph::Pag(p),
        Body::Summary(s) => Graph::Summary(s),
    })
}

fn dot_mark(m: Mark) -> &'static str {
    match m {
        Mark::Arrow => "normal",
        Mark::Circle => "odot",
        Mark::Tail => "none",
    }
}

fn sign_color(w: f64) -> &'static str {
    if w < 0.0 {
        "blue"
    } else {
        "red"
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn node_name(names: &[String], var: usize, lag: usize) -> String {
    if lag == 0 {
        format!("{}(t)", names[var])
    } else {
        format!("{}(t-{lag})", names[var])
    }
}

pub fn to_dot(graph: &Graph) -> String {
    let mut out = String::new();
    match graph {
        Graph::Lagged(d) => {
            let names = &d.variable_names;
            out.push_str("digraph lagged {\n  rankdir=LR;\n");
            for lag in (0..d.adjacency.len()).rev() {
                for var in 0..names.len() {
                    let _ = writeln!(out, "  {};", quote(&node_name(names, var, lag)));
                }
            }
            for (lag, m) in d.adjacency.iter().enumerate() {
                for cause in 0..names.len() {
                    for effect in 0..names.len() {
                        let w = m[(effect, cause)];
                        if w == 0.0 {
                            continue;
                        }
                        let _ = writeln!(
                            out,
                            "  {} -> {} [label=\"{:.3}\", color={}];",
                            quote(&node_name(names, cause, lag)),
                            quote(&node_name(names, effect, 0)),
                            w,
                            sign_color(w)
                        );
                    }
                }
            }
        }
        Graph::Pag(p) => {
            let names = &p.variable_names;
            out.push_str("digraph pag {\n  rankdir=LR;\n");
            for lag in (0..=p.tau_max).rev() {
                for var in 0..names.len() {
                    let _ = writeln!(out, "  {};", quote(&node_name(names, var, lag)));
                }
            }
            for e in &p.edges {
                let _ = writeln!(
                    out,
                    "  {} -> {} [dir=both, arrowtail={}, arrowhead={}, label=\"{:.3}\", color={}];",
                    quote(&node_name(names, e.source, e.lag)),
                    quote(&node_name(names, e.target, 0)),
                    dot_mark(e.source_mark),
                    dot_mark(e.target_mark),
                    e.max_abs_statistic,
                    sign_color(e.max_abs_statistic)
                );
            }
        }
        Graph::Summary(s) => {
            let names = &s.variable_names;
            out.push_str("digraph summary {\n");
            for name in names {
                let _ = writeln!(out, "  {};", quote(name));
            }
            for e in &s.edges {
                let marks = match e.marks {
                    Some((tail, head)) => format!(
                        "dir=both, arrowtail={}, arrowhead={}, ",
                        dot_mark(tail),
                        dot_mark(head)
                    ),
                    None => String::new(),
                };
                let _ = writeln!(
                    out,
                    "  {} -> {} [{}label={}, color={}, penwidth={:.2}];",
                    quote(&names[e.cause]),
                    quote(&names[e.effect]),
                    marks,
                    quote(&e.label()),
                    sign_color(e.strength),
                    1.0 + 4.0 * e.strength.abs().min(1.0)
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralDistance {
    pub hamming: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Compares the edge sets of `estimate` and `truth` binarized at `|w| > threshold`.
///
/// Lag-0 diagonals are ignored. Precision and recall are 1 when their
/// denominator is empty.
pub fn structural_distance<T: Scalar>(
    estimate: &LaggedDag<T>,
    truth: &LaggedDag<T>,
    threshold: f64,
) -> Result<StructuralDistance, GraphError> {
    if estimate.variable_names.len() != truth.variable_names.len()
        || estimate.adjacency.len() != truth.adjacency.len()
    {
        return Err(GraphError::Shape(format!(
            "{} variables / {} lags vs {} / {}",
            estimate.variable_names.len(),
            estimate.adjacency.len(),
            truth.variable_names.len(),
            truth.adjacency.len()
        )));
    }
    let n = truth.variable_names.len();
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for (lag, (a, b)) in estimate.adjacency.iter().zip(&truth.adjacency).enumerate() {
        for i in 0..n {
            for j in 0..n {
                if lag == 0 && i == j {
                    continue;
                }
                let ea = a[(i, j)].as_f64().abs() > threshold;
                let eb = b[(i, j)].as_f64().abs() > threshold;
                match (ea, eb) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fne += 1,
                    (false, false) => {}
                }
            }
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    Ok(StructuralDistance {
        hamming: fp + fne,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fne),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpcmci::PagEdge;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    fn dag(n: usize, entries: &[(usize, usize, usize, f64)], lags: usize) -> LaggedDag<f64> {
        let mut mats = vec![DMatrix::zeros(n, n); lags + 1];
        for &(lag, effect, cause, w) in entries {
            mats[lag][(effect, cause)] = w;
        }
        LaggedDag::new(names(n), mats).unwrap()
    }

    #[test]
    fn collapse_orders_lags_by_strength() {
        let g = dag(3, &[(0, 2, 1, 0.2), (1, 2, 1, 0.5)], 1).collapse();
        assert_eq!(g.edges.len(), 1);
        let e = &g.edges[0];
        assert_eq!((e.cause, e.effect), (1, 2));
        assert_eq!(e.lags, vec![1, 0]);
        assert_eq!(e.label(), "1, 0");
        assert_eq!(e.strength, 0.5);
        assert!(!e.contemporaneous);
    }

    #[test]
    fn ties_broken_by_ascending_lag_and_sign_kept() {
        let g = dag(2, &[(2, 1, 0, -0.3), (1, 1, 0, 0.3), (0, 1, 0, 0.1)], 2).collapse();
        assert_eq!(g.edges[0].lags, vec![1, 2, 0]);
        let g = dag(2, &[(0, 1, 0, -0.4)], 1).collapse();
        assert!(g.edges[0].is_negative() && g.edges[0].contemporaneous);
        assert_eq!(g.edges[0].label(), "");
        assert!(to_dot(&Graph::Summary(g)).contains("color=blue"));
    }

    #[test]
    fn empty_model_gives_empty_summary_and_valid_documents() {
        let d = dag(2, &[], 1);
        let s = d.collapse();
        assert!(s.edges.is_empty());
        let dot = to_dot(&Graph::Summary(s.clone()));
        assert!(dot.starts_with("digraph") && dot.ends_with("}\n"));
        assert_eq!(from_json(&to_json(&Graph::Summary(s.clone())).unwrap()).unwrap(), Graph::Summary(s));
    }

    #[test]
    fn collapse_is_idempotent_on_summaries() {
        let s = dag(3, &[(0, 1, 0, 0.3), (1, 0, 2, -0.2)], 1).collapse();
        assert_eq!(s.collapse(), s);
    }

    fn pag() -> TimeSeriesPAG {
        TimeSeriesPAG {
            variable_names: names(2),
            tau_max: 2,
            edges: vec![
                PagEdge {
                    source: 0,
                    target: 1,
                    lag: 1,
                    source_mark: Mark::Circle,
                    target_mark: Mark::Arrow,
                    min_p_value: Some(1e-8),
                    max_abs_statistic: 0.31,
                },
                PagEdge {
                    source: 0,
                    target: 1,
                    lag: 2,
                    source_mark: Mark::Tail,
                    target_mark: Mark::Arrow,
                    min_p_value: None,
                    max_abs_statistic: -0.4,
                },
            ],
        }
    }

    #[test]
    fn pag_dot_uses_mark_shapes() {
        let dot = to_dot(&Graph::Pag(pag()));
        assert!(dot.contains("dir=both, arrowtail=odot, arrowhead=normal"));
        assert!(dot.contains("arrowtail=none, arrowhead=normal"));
    }

    #[test]
    fn pag_collapse_uses_statistics() {
        let s = pag().collapse();
        assert_eq!(s.strength, StrengthKind::Statistic);
        assert_eq!(s.edges[0].lags, vec![2, 1]);
        assert_eq!(s.edges[0].marks, Some((Mark::Tail, Mark::Arrow)));
    }

    #[test]
    fn json_round_trips_every_kind() {
        let graphs = [
            Graph::Lagged(dag(3, &[(0, 1, 0, 0.123456789), (1, 2, 2, -1e-17)], 1)),
            Graph::Pag(pag()),
            Graph::Summary(pag().collapse()),
        ];
        for g in graphs {
            let text = export(&g, "json").unwrap();
            assert!(text.contains(SCHEMA));
            assert_eq!(from_json(&text).unwrap(), g);
        }
        assert!(matches!(
            export(&Graph::Pag(pag()), "svg"),
            Err(GraphError::UnknownFormat(_))
        ));
    }

    #[test]
    fn cyclic_lag_zero_rejected() {
        let mut b0 = DMatrix::zeros(2, 2);
        b0[(0, 1)] = 0.3;
        b0[(1, 0)] = 0.3;
        assert!(matches!(LaggedDag::new(names(2), vec![b0]), Err(GraphError::Cyclic)));
    }

    #[test]
    fn structural_distance_counts() {
        let a = dag(3, &[(0, 1, 0, 0.3), (1, 2, 2, 0.5)], 1);
        let d = structural_distance(&a, &a, 0.1).unwrap();
        assert_eq!((d.hamming, d.precision, d.recall), (0, 1.0, 1.0));
        let empty = dag(3, &[], 1);
        let d = structural_distance(&empty, &a, 0.1).unwrap();
        assert_eq!((d.hamming, d.recall), (2, 0.0));
        assert!(structural_distance(&dag(2, &[], 1), &a, 0.1).is_err());
    }
}
