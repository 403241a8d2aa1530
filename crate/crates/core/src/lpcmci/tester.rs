//! Conditional independence testers: partial correlation on data and
//! d-separation on a known time-series graph.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{LpcmciError, Node};
use crate::scalar::Scalar;
use crate::stattests::partial_correlation_test;

/// Statistic and p-value of one test. `p_value` may be NaN when the test
/// cannot decide; callers treat that as dependence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `x(t − x.lag) ⟂ y(t − y.lag) | z` for a time-series process.
pub trait CiTester: Sync {
    fn n_vars(&self) -> usize;
    fn test(&self, x: Node, y: Node, z: &[Node]) -> Result<CiResult, LpcmciError>;
}

/// Partial-correlation test on the common sample `t = tau_max .. T`.
#[derive(Debug, Clone)]
pub struct PartialCorrelationTester<T: Scalar> {
    values: DMatrix<T>,
    tau_max: usize,
}

impl<T: Scalar> PartialCorrelationTester<T> {
    /// `values` is `T × n`.
    pub fn new(values: DMatrix<T>, tau_max: usize) -> Result<Self, LpcmciError> {
        if values.nrows() <= tau_max + 3 {
            return Err(LpcmciError::TooShort {
                needed: tau_max + 4,
                got: values.nrows(),
            });
        }
        Ok(Self { values, tau_max })
    }

    fn column(&self, node: Node) -> Vec<T> {
        let len = self.values.nrows();
        (self.tau_max..len)
            .map(|t| self.values[(t - node.lag, node.var)])
            .collect()
    }
}

impl<T: Scalar> CiTester for PartialCorrelationTester<T> {
    fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    fn test(&self, x: Node, y: Node, z: &[Node]) -> Result<CiResult, LpcmciError> {
        for node in [x, y].iter().chain(z) {
            if node.lag > self.tau_max || node.var >= self.values.ncols() {
                return Err(LpcmciError::NodeOutOfRange(*node));
            }
        }
        let rows = self.values.nrows() - self.tau_max;
        let mut zm = DMatrix::zeros(rows, z.len());
        for (k, node) in z.iter().enumerate() {
            for (r, v) in self.column(*node).into_iter().enumerate() {
                zm[(r, k)] = v;
            }
        }
        let res = partial_correlation_test(&self.column(x), &self.column(y), &zm, 0.05)?;
        Ok(CiResult {
            statistic: res.statistic,
            p_value: res.p_value,
        })
    }
}

/// Ground-truth time-series graph over observed and latent variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthGraph {
    pub n_vars: usize,
    /// Variables never passed to the tester; observed indices skip them.
    pub latent: BTreeSet<usize>,
    /// `(cause, effect, lag)`: `cause(t − lag) → effect(t)`.
    pub edges: BTreeSet<(usize, usize, usize)>,
}

impl TruthGraph {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            latent: BTreeSet::new(),
            edges: BTreeSet::new(),
        }
    }

    pub fn edge(mut self, cause: usize, effect: usize, lag: usize) -> Self {
        self.edges.insert((cause, effect, lag));
        self
    }

    pub fn hidden(mut self, var: usize) -> Self {
        self.latent.insert(var);
        self
    }

    /// Indices of observed variables, in order.
    pub fn observed(&self) -> Vec<usize> {
        (0..self.n_vars).filter(|v| !self.latent.contains(v)).collect()
    }

    pub fn max_lag(&self) -> usize {
        self.edges.iter().map(|e| e.2).max().unwrap_or(0)
    }

    fn contemporaneous_is_acyclic(&self) -> bool {
        let n = self.n_vars;
        let mut indegree = vec![0usize; n];
        for &(c, e, lag) in &self.edges {
            if lag == 0 {
                if c == e {
                    return false;
                }
                indegree[e] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &(c, e, lag) in &self.edges {
                if lag == 0 && c == v {
                    indegree[e] -= 1;
                    if indegree[e] == 0 {
                        queue.push_back(e);
                    }
                }
            }
        }
        seen == n
    }
}

/// Exact d-separation on the time-unrolled truth.
#[derive(Debug, Clone)]
pub struct DsepOracle {
    truth: TruthGraph,
    observed: Vec<usize>,
}

/// Builds a tester that answers by d-separation; p is exactly 0 or 1.
pub fn make_dsep_oracle(truth: TruthGraph) -> Result<DsepOracle, LpcmciError> {
    if truth.edges.iter().any(|&(c, e, _)| c >= truth.n_vars || e >= truth.n_vars) {
        return Err(LpcmciError::InvalidTruth("edge endpoint out of range".into()));
    }
    if !truth.contemporaneous_is_acyclic() {
        return Err(LpcmciError::InvalidTruth("contemporaneous edges form a cycle".into()));
    }
    let observed = truth.observed();
    Ok(DsepOracle { truth, observed })
}

impl DsepOracle {
    /// d-separation between observed nodes.
    pub fn d_separated(&self, x: Node, y: Node, z: &[Node]) -> bool {
        let n = self.truth.n_vars;
        let deepest = [x, y].iter().chain(z).map(|v| v.lag).max().unwrap_or(0);
        // Any active path can be shifted to lie within this many steps of the query.
        let horizon = deepest + (self.truth.max_lag() + 1) * (n + 1);
        let slices = horizon + 1;
        let id = |var: usize, lag: usize| lag * n + var;
        let total = slices * n;

        let mut parents = vec![Vec::new(); total];
        let mut children = vec![Vec::new(); total];
        for lag_e in 0..slices {
            for &(c, e, l) in &self.truth.edges {
                let lag_c = lag_e + l;
                if lag_c < slices {
                    parents[id(e, lag_e)].push(id(c, lag_c));
                    children[id(c, lag_c)].push(id(e, lag_e));
                }
            }
        }

        let map = |v: Node| id(self.observed[v.var], v.lag);
        let (src, dst) = (map(x), map(y));
        let mut given = vec![false; total];
        for v in z {
            given[map(*v)] = true;
        }
        if given[src] || given[dst] {
            return true;
        }
        // Ancestors of the conditioning set, itself included.
        let mut anc = given.clone();
        let mut stack: Vec<usize> = (0..total).filter(|&v| given[v]).collect();
        while let Some(v) = stack.pop() {
            for &p in &parents[v] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }
        // Bayes-ball: `up` means the ball arrived from a child.
        let mut seen = vec![[false; 2]; total];
        let mut queue = VecDeque::from([(src, true)]);
        while let Some((v, up)) = queue.pop_front() {
            if seen[v][up as usize] {
                continue;
            }
            seen[v][up as usize] = true;
            if v == dst && !given[v] {
                return false;
            }
            if up {
                if !given[v] {
                    queue.extend(parents[v].iter().map(|&p| (p, true)));
                    queue.extend(children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !given[v] {
                    queue.extend(children[v].iter().map(|&c| (c, false)));
                }
                if anc[v] {
                    queue.extend(parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        true
    }
}

impl CiTester for DsepOracle {
    fn n_vars(&self) -> usize {
        self.observed.len()
    }

    fn test(&self, x: Node, y: Node, z: &[Node]) -> Result<CiResult, LpcmciError> {
        for node in [x, y].iter().chain(z) {
            if node.var >= self.observed.len() {
                return Err(LpcmciError::NodeOutOfRange(*node));
            }
        }
        Ok(if self.d_separated(x, y, z) {
            CiResult {
                statistic: 0.0,
                p_value: 1.0,
            }
        } else {
            CiResult {
                statistic: 1.0,
                p_value: 0.0,
            }
        })
    }
}
