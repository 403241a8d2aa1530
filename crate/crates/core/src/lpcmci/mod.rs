//! Constraint-based discovery of a time-series PAG under latent confounding.
//!
//! A time-series FCI variant: nodes are `(variable, lag)` pairs in a window of
//! `tau_max + 1` slices and every link is stored once per time translation, so
//! stationarity holds by construction. Conditioning sets come from the current
//! window adjacencies and are additionally tested with the lagged adjacencies of
//! both endpoints added (momentary-conditional-independence style). Orientation
//! uses unshielded colliders and Zhang's rules R1–R4 and R8–R10.

mod orient;
mod tester;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tester::{make_dsep_oracle, CiResult, CiTester, DsepOracle, PartialCorrelationTester, TruthGraph};

use crate::dataset::TimeSeriesDataset;
use crate::lingam::{Knowledge, KnowledgeError};
use crate::scalar::Scalar;
use crate::stattests::StatsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpcmciError {
    #[error("tau_max must be at least 1")]
    ZeroTauMax,
    #[error("need more than 10·n·(tau_max+1) = {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("node {0} outside the tester's range")]
    NodeOutOfRange(Node),
    #[error("invalid ground truth: {0}")]
    InvalidTruth(String),
    #[error("inconsistent knowledge: {0}")]
    InconsistentKnowledge(String),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error("test failed: {0}")]
    Stats(#[from] StatsError),
    #[error("tester has {tester} variables, {names} names given")]
    NameMismatch { tester: usize, names: usize },
}

/// Variable `var` at time `t − lag`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Node {
    pub var: usize,
    pub lag: usize,
}

impl Node {
    pub fn new(var: usize, lag: usize) -> Self {
        Self { var, lag }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(t-{})", self.var, self.lag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

/// `source(t − lag) *–* target(t)`; at lag 0, `source < target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PagEdge {
    pub source: usize,
    pub target: usize,
    pub lag: usize,
    pub source_mark: Mark,
    pub target_mark: Mark,
    /// Smallest p-value over the tests run on this link; `None` if never tested.
    pub min_p_value: Option<f64>,
    /// Signed statistic of largest magnitude over the tests run on this link.
    pub max_abs_statistic: f64,
}

impl PagEdge {
    /// `-->`, `o->`, `o-o`, `<->`, and so on, read from source to target.
    pub fn symbol(&self) -> String {
        let left = match self.source_mark {
            Mark::Tail => "-",
            Mark::Arrow => "<",
            Mark::Circle => "o",
        };
        let right = match self.target_mark {
            Mark::Tail => "-",
            Mark::Arrow => ">",
            Mark::Circle => "o",
        };
        format!("{left}-{right}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPAG {
    pub variable_names: Vec<String>,
    pub tau_max: usize,
    /// Sorted by `(lag, source, target)`.
    pub edges: Vec<PagEdge>,
}

impl TimeSeriesPAG {
    pub fn n_vars(&self) -> usize {
        self.variable_names.len()
    }

    /// The link between two window nodes, if any.
    pub fn edge_between(&self, a: Node, b: Node) -> Option<&PagEdge> {
        let (key, _) = link_key(a, b)?;
        self.edges
            .iter()
            .find(|e| (e.source, e.lag, e.target) == key)
    }

    /// Mark at `b` on the edge `a *–* b`.
    pub fn mark_at(&self, a: Node, b: Node) -> Option<Mark> {
        let (_, a_is_source) = link_key(a, b)?;
        let e = self.edge_between(a, b)?;
        Some(if a_is_source { e.target_mark } else { e.source_mark })
    }

    /// Every `(window node, window node, mark at first, mark at second)` the
    /// links induce inside the window, for invariant checks.
    pub fn window_edges(&self) -> Vec<(Node, Node, Mark, Mark)> {
        let mut out = Vec::new();
        for e in &self.edges {
            for shift in 0..=self.tau_max - e.lag {
                out.push((
                    Node::new(e.source, shift + e.lag),
                    Node::new(e.target, shift),
                    e.source_mark,
                    e.target_mark,
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LpcmciConfig {
    pub tau_max: usize,
    pub alpha: f64,
    /// Extra skeleton passes re-testing surviving links with the reduced adjacencies.
    pub prelim_iters: usize,
    /// Largest conditioning set drawn from adjacencies; unbounded when `None`.
    pub max_cond_size: Option<usize>,
    /// Subsets tried per endpoint and cardinality; unbounded when `None`.
    pub max_combinations: Option<usize>,
}

impl Default for LpcmciConfig {
    fn default() -> Self {
        Self {
            tau_max: 2,
            alpha: 0.05,
            prelim_iters: 1,
            max_cond_size: None,
            max_combinations: None,
        }
    }
}

type Key = (usize, usize, usize);

#[derive(Debug, Clone, Copy)]
struct LinkState {
    source_mark: Mark,
    target_mark: Mark,
    min_p: f64,
    max_stat: f64,
    required: bool,
}

/// Window graph shared by the skeleton and orientation phases.
#[derive(Debug, Clone)]
pub(crate) struct Window {
    n: usize,
    tau_max: usize,
    links: BTreeMap<Key, LinkState>,
    /// Separating sets, relative to the target at lag 0.
    sepsets: BTreeMap<Key, Vec<Node>>,
}

/// Base link of a window pair, and whether `a` is its source end.
fn link_key(a: Node, b: Node) -> Option<(Key, bool)> {
    use std::cmp::Ordering::*;
    match a.lag.cmp(&b.lag) {
        Greater => Some(((a.var, a.lag - b.lag, b.var), true)),
        Less => Some(((b.var, b.lag - a.lag, a.var), false)),
        Equal if a.var < b.var => Some(((a.var, 0, b.var), true)),
        Equal if a.var > b.var => Some(((b.var, 0, a.var), false)),
        Equal => None,
    }
}

impl Window {
    fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..=self.tau_max).flat_map(move |lag| (0..self.n).map(move |var| Node::new(var, lag)))
    }

    fn in_window(&self, v: Node) -> bool {
        v.lag <= self.tau_max && v.var < self.n
    }

    pub(crate) fn adjacent(&self, a: Node, b: Node) -> bool {
        link_key(a, b).is_some_and(|(k, _)| self.links.contains_key(&k))
    }

    /// Mark at `b` on `a *–* b`.
    pub(crate) fn mark(&self, a: Node, b: Node) -> Option<Mark> {
        let (k, a_src) = link_key(a, b)?;
        let s = self.links.get(&k)?;
        Some(if a_src { s.target_mark } else { s.source_mark })
    }

    /// Replaces a circle at `b` on `a *–* b`; other marks are left alone.
    pub(crate) fn orient(&mut self, a: Node, b: Node, mark: Mark) -> bool {
        let Some((k, a_src)) = link_key(a, b) else {
            return false;
        };
        let Some(s) = self.links.get_mut(&k) else {
            return false;
        };
        let slot = if a_src { &mut s.target_mark } else { &mut s.source_mark };
        if *slot == Mark::Circle && mark != Mark::Circle {
            *slot = mark;
            true
        } else {
            false
        }
    }

    pub(crate) fn neighbors(&self, a: Node) -> Vec<Node> {
        let mut out = Vec::new();
        for &(src, lag, tgt) in self.links.keys() {
            // `a` as target at its own lag, source at lag + `lag`.
            if tgt == a.var {
                let s = Node::new(src, a.lag + lag);
                if self.in_window(s) && s != a {
                    out.push(s);
                }
            }
            if src == a.var && a.lag >= lag {
                let t = Node::new(tgt, a.lag - lag);
                if t != a {
                    out.push(t);
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Whether `z` lies in the separating set recorded for the pair.
    pub(crate) fn in_sepset(&self, x: Node, y: Node, z: Node) -> bool {
        let Some((k, _)) = link_key(x, y) else {
            return false;
        };
        let shift = x.lag.min(y.lag);
        if z.lag < shift {
            return false;
        }
        let z0 = Node::new(z.var, z.lag - shift);
        self.sepsets.get(&k).is_some_and(|s| s.contains(&z0))
    }

    fn all_nodes(&self) -> Vec<Node> {
        self.nodes().collect()
    }
}

/// Runs the search with an arbitrary tester.
///
/// `names` labels the tester's variables in order.
pub fn discover<C: CiTester>(
    names: &[String],
    tester: &C,
    knowledge: &Knowledge,
    config: &LpcmciConfig,
) -> Result<TimeSeriesPAG, LpcmciError> {
    if config.tau_max == 0 {
        return Err(LpcmciError::ZeroTauMax);
    }
    let n = tester.n_vars();
    if names.len() != n {
        return Err(LpcmciError::NameMismatch {
            tester: n,
            names: names.len(),
        });
    }
    let resolved = knowledge.resolve(names)?;
    for &(c, e, lag) in &resolved.required {
        if lag == 0 && resolved.is_required(e, c, 0) {
            return Err(LpcmciError::InconsistentKnowledge(format!(
                "{} and {} are required to cause each other at lag 0",
                names[c], names[e]
            )));
        }
    }

    let mut window = Window {
        n,
        tau_max: config.tau_max,
        links: BTreeMap::new(),
        sepsets: BTreeMap::new(),
    };
    for lag in 0..=config.tau_max {
        for src in 0..n {
            for tgt in 0..n {
                if lag == 0 && src >= tgt {
                    continue;
                }
                window.links.insert(
                    (src, lag, tgt),
                    LinkState {
                        source_mark: Mark::Circle,
                        target_mark: if lag > 0 { Mark::Arrow } else { Mark::Circle },
                        min_p: f64::INFINITY,
                        max_stat: 0.0,
                        required: false,
                    },
                );
            }
        }
    }
    // Required edges are never tested away and start fully oriented; a
    // forbidden `c → e` says `c` is not an ancestor of `e`.
    for &(c, e, lag) in &resolved.required {
        if let Some((k, c_src)) = link_key(Node::new(c, lag), Node::new(e, 0)) {
            if let Some(s) = window.links.get_mut(&k) {
                s.required = true;
                let (cm, em) = if c_src {
                    (&mut s.source_mark, &mut s.target_mark)
                } else {
                    (&mut s.target_mark, &mut s.source_mark)
                };
                *cm = Mark::Tail;
                *em = Mark::Arrow;
            }
        }
    }
    for &(c, e, lag) in &resolved.forbidden {
        if lag <= config.tau_max {
            window.orient(Node::new(e, 0), Node::new(c, lag), Mark::Arrow);
        }
    }
    let initial: BTreeMap<Key, (Mark, Mark)> = window
        .links
        .iter()
        .map(|(k, s)| (*k, (s.source_mark, s.target_mark)))
        .collect();

    for _ in 0..=config.prelim_iters {
        skeleton_pass(&mut window, tester, config)?;
    }
    for (k, s) in window.links.iter_mut() {
        (s.source_mark, s.target_mark) = initial[k];
    }
    orient::orient(&mut window);

    let edges = window
        .links
        .iter()
        .sorted_by_key(|(&(src, lag, tgt), _)| (lag, src, tgt))
        .map(|(&(source, lag, target), s)| PagEdge {
            source,
            target,
            lag,
            source_mark: s.source_mark,
            target_mark: s.target_mark,
            min_p_value: s.min_p.is_finite().then_some(s.min_p),
            max_abs_statistic: s.max_stat,
        })
        .collect();
    Ok(TimeSeriesPAG {
        variable_names: names.to_vec(),
        tau_max: config.tau_max,
        edges,
    })
}

/// Runs the search on data with the partial-correlation tester.
pub fn discover_dataset<T: Scalar>(
    ds: &TimeSeriesDataset<T>,
    knowledge: &Knowledge,
    config: &LpcmciConfig,
) -> Result<TimeSeriesPAG, LpcmciError> {
    let needed = 10 * ds.n_vars() * (config.tau_max + 1);
    if ds.len() <= needed {
        return Err(LpcmciError::TooShort {
            needed,
            got: ds.len(),
        });
    }
    let tester = PartialCorrelationTester::new(ds.values().clone(), config.tau_max)?;
    discover(ds.names(), &tester, knowledge, config)
}

struct LinkOutcome {
    key: Key,
    stats: Vec<CiResult>,
    sepset: Option<Vec<Node>>,
}

// One PC-stable sweep over increasing conditioning-set sizes. Removals found
// at a level are applied only once the whole level has been tested.
fn skeleton_pass<C: CiTester>(
    window: &mut Window,
    tester: &C,
    config: &LpcmciConfig,
) -> Result<(), LpcmciError> {
    let mut level = 0;
    loop {
        if config.max_cond_size.is_some_and(|m| level > m) {
            break;
        }
        let keys: Vec<Key> = window
            .links
            .iter()
            .filter(|(_, s)| !s.required)
            .map(|(k, _)| *k)
            .collect();
        let snapshot = &*window;
        let mut any_candidates = false;
        let outcomes: Vec<Result<(LinkOutcome, bool), LpcmciError>> = keys
            .par_iter()
            .map(|&key| test_link(snapshot, tester, config, key, level))
            .collect();
        let mut removals = Vec::new();
        for res in outcomes {
            let (outcome, had_candidates) = res?;
            any_candidates |= had_candidates;
            removals.push(outcome);
        }
        for outcome in removals {
            let Some(state) = window.links.get_mut(&outcome.key) else {
                continue;
            };
            for r in &outcome.stats {
                if r.p_value < state.min_p {
                    state.min_p = r.p_value;
                }
                if r.statistic.abs() > state.max_stat.abs() {
                    state.max_stat = r.statistic;
                }
            }
            if let Some(sep) = outcome.sepset {
                window.links.remove(&outcome.key);
                window.sepsets.insert(outcome.key, sep);
            }
        }
        if !any_candidates {
            break;
        }
        level += 1;
    }
    Ok(())
}

fn test_link<C: CiTester>(
    window: &Window,
    tester: &C,
    config: &LpcmciConfig,
    key: Key,
    level: usize,
) -> Result<(LinkOutcome, bool), LpcmciError> {
    let (src, lag, tgt) = key;
    let x = Node::new(src, lag);
    let y = Node::new(tgt, 0);
    let pool_y: Vec<Node> = window.neighbors(y).into_iter().filter(|&v| v != x).collect();
    let pool_x: Vec<Node> = window.neighbors(x).into_iter().filter(|&v| v != y).collect();
    let mut aug: BTreeSet<Node> = pool_y.iter().copied().filter(|v| v.lag > y.lag).collect();
    aug.extend(pool_x.iter().copied().filter(|v| v.lag > x.lag));

    let mut stats = Vec::new();
    let mut had_candidates = false;
    let mut tried: BTreeSet<Vec<Node>> = BTreeSet::new();
    for pool in [&pool_y, &pool_x] {
        if pool.len() < level {
            continue;
        }
        had_candidates = true;
        let subsets = pool.iter().copied().combinations(level);
        let limit = config.max_combinations.unwrap_or(usize::MAX);
        for s in subsets.take(limit) {
            // BTreeSet iteration is already sorted.
            let mut cond: BTreeSet<Node> = s.into_iter().collect();
            cond.extend(aug.iter().copied());
            let cond: Vec<Node> = cond.into_iter().collect();
            if !tried.insert(cond.clone()) {
                continue;
            }
            let r = tester.test(x, y, &cond)?;
            stats.push(r);
            if r.p_value > config.alpha {
                return Ok((
                    LinkOutcome {
                        key,
                        stats,
                        sepset: Some(cond),
                    },
                    had_candidates,
                ));
            }
        }
    }
    Ok((
        LinkOutcome {
            key,
            stats,
            sepset: None,
        },
        had_candidates,
    ))
}
