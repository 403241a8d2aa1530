//! Ground-truth generators and the benchmark harness.
//!
//! A [`GroundTruth`] is a structural VAR `x(t) = Σ_τ B_τ x(t−τ) + e(t)` over
//! observed and latent variables. [`generate`] simulates it and drops the
//! latent columns; [`run_benchmark`] scores estimators against the truth.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, TimeSeriesDataset};
use crate::lingam::{Knowledge, KnowledgeError};
use crate::lpcmci::{discover_dataset, LpcmciConfig, LpcmciError, TruthGraph};
use crate::var::spectral_radius;
use crate::varlingam::{fit_var_lingam, make_market_knowledge, VarLingamConfig, VarLingamError};

/// Initial steps simulated and discarded.
pub const BURN_IN: usize = 200;
/// Largest companion spectral radius a truth may have.
pub const MAX_RADIUS: f64 = 0.95;
/// Magnitude range of randomly drawn weights.
pub const WEIGHT_RANGE: (f64, f64) = (0.1, 0.5);

/// The six series of the market study.
pub const MARKET_VARIABLES: [&str; 6] = [
    "USD",
    "Close_Nikkei",
    "Close_SP",
    "Close_US10Y",
    "Close_JGBF",
    "Close_JGB",
];
pub const US_VARIABLES: [&str; 2] = ["Close_SP", "Close_US10Y"];
pub const JP_VARIABLES: [&str; 3] = ["Close_Nikkei", "Close_JGBF", "Close_JGB"];

pub const SUITES: [&str; 4] = ["nongaussian", "null", "market", "canonical"];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("truth is unstable: companion spectral radius {radius:.4} >= {MAX_RADIUS}")]
    Unstable { radius: f64 },
    #[error("contemporaneous graph is cyclic")]
    Cyclic,
    #[error("I - B0 is singular")]
    Singular,
    #[error("invalid truth: {0}")]
    Invalid(String),
    #[error("benchmark needs at least one seed")]
    NoSeeds,
    #[error("benchmark suite is empty")]
    EmptySuite,
    #[error("unknown suite `{name}` (valid: {})", SUITES.join(", "))]
    UnknownSuite { name: String },
    #[error("no stable truth found after {0} draws")]
    NoStableDraw(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error("VAR-LiNGAM on `{truth}`: {source}")]
    VarLingam {
        truth: String,
        #[source]
        source: VarLingamError,
    },
    #[error("LPCMCI on `{truth}`: {source}")]
    Lpcmci {
        truth: String,
        #[source]
        source: LpcmciError,
    },
}

/// Unit-variance noise distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    /// Uniform on `±√3`.
    Uniform,
    /// Laplace with scale `1/√2`.
    Laplace,
    Gaussian,
}

impl NoiseFamily {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseFamily::Uniform => {
                let r = 3f64.sqrt();
                rng.random_range(-r..r)
            }
            NoiseFamily::Laplace => {
                let u: f64 = rng.random_range(-0.5..0.5);
                -u.signum() * (1.0 - 2.0 * u.abs()).ln() / 2f64.sqrt()
            }
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub name: String,
    /// Names of every variable, latent ones included.
    pub variable_names: Vec<String>,
    /// `B0 .. Bp`, indexed `[(effect, cause)]`.
    pub b: Vec<DMatrix<f64>>,
    pub noise: Vec<NoiseFamily>,
    pub latent: BTreeSet<usize>,
    pub seed: u64,
}

impl GroundTruth {
    /// Empty structure over `names` with uniform noise.
    pub fn empty(name: impl Into<String>, names: &[&str], max_lag: usize, seed: u64) -> Self {
        let n = names.len();
        Self {
            name: name.into(),
            variable_names: names.iter().map(|s| s.to_string()).collect(),
            b: vec![DMatrix::zeros(n, n); max_lag + 1],
            noise: vec![NoiseFamily::Uniform; n],
            latent: BTreeSet::new(),
            seed,
        }
    }

    pub fn n_total(&self) -> usize {
        self.variable_names.len()
    }

    pub fn max_lag(&self) -> usize {
        self.b.len() - 1
    }

    pub fn observed(&self) -> Vec<usize> {
        (0..self.n_total()).filter(|v| !self.latent.contains(v)).collect()
    }

    pub fn observed_names(&self) -> Vec<String> {
        self.observed().into_iter().map(|i| self.variable_names[i].clone()).collect()
    }

    pub fn with_edge(mut self, cause: usize, effect: usize, lag: usize, weight: f64) -> Self {
        self.b[lag][(effect, cause)] = weight;
        self
    }

    pub fn with_latent(mut self, var: usize) -> Self {
        self.latent.insert(var);
        self
    }

    pub fn with_noise(mut self, noise: Vec<NoiseFamily>) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Companion spectral radius of the implied reduced-form VAR.
    pub fn spectral_radius(&self) -> Result<f64, SynthError> {
        let a = self.mixing()?;
        let m: Vec<DMatrix<f64>> = self.b[1..].iter().map(|bt| &a * bt).collect();
        Ok(if m.is_empty() { 0.0 } else { spectral_radius(&m) })
    }

    /// At most one Gaussian noise term.
    pub fn is_lingam_identifiable(&self) -> bool {
        self.noise.iter().filter(|&&f| f == NoiseFamily::Gaussian).count() <= 1
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let n = self.n_total();
        if n == 0 || self.b.is_empty() {
            return Err(SynthError::Invalid("no variables or no B0".into()));
        }
        if self.b.iter().any(|m| m.shape() != (n, n)) {
            return Err(SynthError::Invalid("coefficient matrix shape".into()));
        }
        if self.noise.len() != n {
            return Err(SynthError::Invalid(format!("{} noise families for {n} variables", self.noise.len())));
        }
        if self.latent.iter().any(|&v| v >= n) || self.latent.len() == n {
            return Err(SynthError::Invalid("latent index out of range or nothing observed".into()));
        }
        if self.b.iter().flatten().any(|w| !w.is_finite()) {
            return Err(SynthError::Invalid("non-finite weight".into()));
        }
        let radius = self.spectral_radius()?;
        if radius >= MAX_RADIUS {
            return Err(SynthError::Unstable { radius });
        }
        Ok(())
    }

    /// `(I − B0)⁻¹`; requires an acyclic `B0`.
    fn mixing(&self) -> Result<DMatrix<f64>, SynthError> {
        let b0 = &self.b[0];
        if !is_acyclic(b0) {
            return Err(SynthError::Cyclic);
        }
        let n = b0.nrows();
        (DMatrix::identity(n, n) - b0).try_inverse().ok_or(SynthError::Singular)
    }

    /// The structure as a d-separation truth (weights dropped).
    pub fn to_truth_graph(&self) -> TruthGraph {
        let mut g = TruthGraph::new(self.n_total());
        for (lag, m) in self.b.iter().enumerate() {
            for e in 0..m.nrows() {
                for c in 0..m.ncols() {
                    if m[(e, c)] != 0.0 && !(lag == 0 && c == e) {
                        g = g.edge(c, e, lag);
                    }
                }
            }
        }
        for &v in &self.latent {
            g = g.hidden(v);
        }
        g
    }

    /// Coefficients restricted to observed variables.
    pub fn observed_b(&self) -> Vec<DMatrix<f64>> {
        let obs = self.observed();
        self.b
            .iter()
            .map(|m| m.select_rows(&obs).select_columns(&obs))
            .collect()
    }

    /// Every observed edge `(cause, effect, lag)`, in observed indices.
    pub fn observed_edges(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for (lag, m) in self.observed_b().iter().enumerate() {
            for e in 0..m.nrows() {
                for c in 0..m.ncols() {
                    if m[(e, c)] != 0.0 && !(lag == 0 && c == e) {
                        out.insert((c, e, lag));
                    }
                }
            }
        }
        out
    }
}

fn is_acyclic(b0: &DMatrix<f64>) -> bool {
    let n = b0.nrows();
    if (0..n).any(|i| b0[(i, i)] != 0.0) {
        return false;
    }
    let mut indegree: Vec<usize> = (0..n)
        .map(|e| (0..n).filter(|&c| b0[(e, c)] != 0.0).count())
        .collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(c) = ready.pop() {
        seen += 1;
        for e in 0..n {
            if b0[(e, c)] != 0.0 {
                indegree[e] -= 1;
                if indegree[e] == 0 {
                    ready.push(e);
                }
            }
        }
    }
    seen == n
}

/// Simulates `len` observations after [`BURN_IN`] discarded steps.
pub fn generate(truth: &GroundTruth, len: usize) -> Result<TimeSeriesDataset<f64>, SynthError> {
    truth.validate()?;
    let a = truth.mixing()?;
    let n = truth.n_total();
    let p = truth.max_lag();
    let obs = truth.observed();
    let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);
    // history[k] is x(t − 1 − k)
    let mut history: Vec<DVector<f64>> = vec![DVector::zeros(n); p];
    let mut out = DMatrix::zeros(len, obs.len());
    for t in 0..BURN_IN + len {
        let mut rhs = DVector::from_fn(n, |i, _| truth.noise[i].sample(&mut rng));
        for (k, past) in history.iter().enumerate() {
            rhs += &truth.b[k + 1] * past;
        }
        let x = &a * rhs;
        if t >= BURN_IN {
            for (col, &v) in obs.iter().enumerate() {
                out[(t - BURN_IN, col)] = x[v];
            }
        }
        if p > 0 {
            history.rotate_right(1);
            history[0] = x;
        }
    }
    Ok(TimeSeriesDataset::from_matrix(truth.observed_names(), out)?)
}

fn random_weight<R: Rng>(rng: &mut R) -> f64 {
    let w = rng.random_range(WEIGHT_RANGE.0..=WEIGHT_RANGE.1);
    if rng.random_bool(0.5) {
        w
    } else {
        -w
    }
}

/// Random stable truth: `B0` a DAG over a random order (edge probability
/// 0.4), an autoregressive term on every variable at lag 1 and cross-lag
/// edges with probability 0.2, all weights in `±[0.1, 0.5]`. Noise families
/// are drawn from `families`.
pub fn random_truth(
    name: impl Into<String>,
    n: usize,
    max_lag: usize,
    families: &[NoiseFamily],
    seed: u64,
) -> Result<GroundTruth, SynthError> {
    const DRAWS: usize = 1000;
    if n == 0 || families.is_empty() {
        return Err(SynthError::Invalid("need variables and noise families".into()));
    }
    let name = name.into();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    for _ in 0..DRAWS {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut b = vec![DMatrix::zeros(n, n); max_lag + 1];
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.4) {
                    b[0][(order[j], order[i])] = random_weight(&mut rng);
                }
            }
        }
        for (lag, m) in b.iter_mut().enumerate().skip(1) {
            for e in 0..n {
                for c in 0..n {
                    if (lag == 1 && c == e) || (c != e && rng.random_bool(0.2)) {
                        m[(e, c)] = random_weight(&mut rng);
                    }
                }
            }
        }
        let noise = (0..n).map(|_| families[rng.random_range(0..families.len())]).collect();
        let truth = GroundTruth {
            name: name.clone(),
            variable_names: names.clone(),
            b,
            noise,
            latent: BTreeSet::new(),
            seed: rng.random(),
        };
        if truth.spectral_radius()? < MAX_RADIUS {
            return Ok(truth);
        }
    }
    Err(SynthError::NoStableDraw(DRAWS))
}

fn derive_seed(base: u64, k: u64) -> u64 {
    base.wrapping_add(k.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// `count` random six-variable VAR(1) truths with uniform or Laplace noise.
pub fn nongaussian_suite(count: usize, seed: u64) -> Result<Vec<GroundTruth>, SynthError> {
    (0..count)
        .map(|k| {
            random_truth(
                format!("nongaussian-{k}"),
                6,
                1,
                &[NoiseFamily::Uniform, NoiseFamily::Laplace],
                derive_seed(seed, k as u64),
            )
        })
        .collect()
}

/// `count` empty four-variable truths with non-Gaussian noise.
pub fn null_suite(count: usize, seed: u64) -> Vec<GroundTruth> {
    (0..count)
        .map(|k| {
            let s = derive_seed(seed, k as u64);
            let noise = (0..4)
                .map(|i| if (i + k) % 2 == 0 { NoiseFamily::Uniform } else { NoiseFamily::Laplace })
                .collect();
            GroundTruth::empty(format!("null-{k}"), &["x1", "x2", "x3", "x4"], 1, s).with_noise(noise)
        })
        .collect()
}

/// Six market series with US10Y driving JGBF at lags 1 and 2 and no
/// contemporaneous edge from a US series into a Japanese one.
pub fn market_truth(seed: u64) -> GroundTruth {
    let [usd, nikkei, sp, us10y, jgbf, jgb] = [0, 1, 2, 3, 4, 5];
    let mut t = GroundTruth::empty("market", &MARKET_VARIABLES, 2, seed)
        .with_noise(vec![
            NoiseFamily::Laplace,
            NoiseFamily::Uniform,
            NoiseFamily::Laplace,
            NoiseFamily::Uniform,
            NoiseFamily::Laplace,
            NoiseFamily::Uniform,
        ])
        .with_edge(us10y, jgbf, 1, 0.4)
        .with_edge(us10y, jgbf, 2, 0.25)
        .with_edge(sp, nikkei, 1, 0.3)
        .with_edge(sp, us10y, 0, 0.2)
        .with_edge(usd, nikkei, 0, 0.3)
        .with_edge(jgbf, jgb, 0, 0.4);
    for v in 0..6 {
        t = t.with_edge(v, v, 1, 0.2);
    }
    t
}

pub fn market_suite(count: usize, seed: u64) -> Vec<GroundTruth> {
    (0..count)
        .map(|k| {
            let mut t = market_truth(derive_seed(seed, k as u64));
            t.name = format!("market-{k}");
            t
        })
        .collect()
}

/// Contemporaneous edges forbidden from every US series into every Japanese one.
pub fn market_knowledge() -> Knowledge {
    make_market_knowledge(&US_VARIABLES, &JP_VARIABLES).expect("groups are disjoint")
}

/// The eight canonical structures of the PAG conformance suite.
pub fn canonical_suite(seed: u64) -> Vec<GroundTruth> {
    let xyz = ["X", "Y", "Z"];
    let xyl = ["X", "Y", "L"];
    let s = |k: u64| derive_seed(seed, k);
    vec![
        GroundTruth::empty("chain", &xyz, 1, s(0))
            .with_edge(0, 1, 0, 0.5)
            .with_edge(1, 2, 0, 0.5),
        GroundTruth::empty("lagged-fork", &xyz, 1, s(1))
            .with_edge(0, 1, 1, 0.5)
            .with_edge(0, 2, 1, 0.5),
        GroundTruth::empty("collider", &xyz, 1, s(2))
            .with_edge(0, 2, 0, 0.5)
            .with_edge(1, 2, 0, 0.5),
        GroundTruth::empty("hidden-confounder", &xyl, 1, s(3))
            .with_edge(2, 0, 0, 0.5)
            .with_edge(2, 1, 0, 0.5)
            .with_edge(0, 0, 1, 0.4)
            .with_edge(1, 1, 1, 0.4)
            .with_latent(2),
        GroundTruth::empty("hidden-plus-direct", &xyl, 1, s(4))
            .with_edge(2, 0, 0, 0.5)
            .with_edge(2, 1, 0, 0.5)
            .with_edge(0, 1, 0, 0.3)
            .with_edge(0, 0, 1, 0.4)
            .with_edge(1, 1, 1, 0.4)
            .with_latent(2),
        GroundTruth::empty("lagged-chain", &xyz, 2, s(5))
            .with_edge(0, 1, 1, 0.5)
            .with_edge(1, 2, 1, 0.5),
        GroundTruth::empty("lag-then-contemporaneous", &xyz, 1, s(6))
            .with_edge(0, 1, 1, 0.5)
            .with_edge(1, 2, 0, 0.5),
        GroundTruth::empty("two-pairs", &["X", "Y", "Z", "W"], 1, s(7))
            .with_edge(0, 1, 0, 0.5)
            .with_edge(2, 3, 1, 0.5),
    ]
}

/// Suite by name; `count` and `seed` are ignored where the suite is fixed.
pub fn suite(name: &str, count: usize, seed: u64) -> Result<Vec<GroundTruth>, SynthError> {
    match name {
        "nongaussian" => nongaussian_suite(count, seed),
        "null" => Ok(null_suite(count, seed)),
        "market" => Ok(market_suite(count, seed)),
        "canonical" => Ok(canonical_suite(seed)),
        other => Err(SynthError::UnknownSuite { name: other.to_string() }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    VarLingam,
    Lpcmci,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::VarLingam => "varlingam",
            Algorithm::Lpcmci => "lpcmci",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    pub varlingam: VarLingamConfig,
    pub lpcmci: LpcmciConfig,
    pub knowledge: Knowledge,
}

/// Scores of one `(algorithm, truth, seed)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub truth: String,
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    /// False edges over the absent edges of the truth.
    pub false_positive_rate: f64,
    /// Whether the estimated causal order is consistent with the true `B0`;
    /// VAR-LiNGAM only.
    pub order_correct: Option<bool>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub algorithm: Algorithm,
    pub truth: String,
    pub runs: usize,
    pub precision: f64,
    pub recall: f64,
    pub false_positive_rate: f64,
    pub order_accuracy: Option<f64>,
    pub mean_seconds: f64,
}

/// Rows and records ordered by `(algorithm, truth, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub len: usize,
    pub seeds: usize,
    pub rows: Vec<MetricsRow>,
    pub runs: Vec<RunRecord>,
}

struct Counts {
    tp: usize,
    fp: usize,
    fne: usize,
    possible: usize,
}

impl Counts {
    fn compare(estimate: &BTreeSet<(usize, usize, usize)>, truth: &BTreeSet<(usize, usize, usize)>, possible: usize) -> Self {
        Counts {
            tp: estimate.intersection(truth).count(),
            fp: estimate.difference(truth).count(),
            fne: truth.difference(estimate).count(),
            possible,
        }
    }

    fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp, 1.0)
    }

    fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fne, 1.0)
    }

    fn false_positive_rate(&self) -> f64 {
        ratio(self.fp, self.possible - self.tp - self.fne, 0.0)
    }
}

fn ratio(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

/// Whether `order` lists every contemporaneous cause before its effects.
pub fn order_consistent(order: &[usize], b0: &DMatrix<f64>) -> bool {
    let mut pos = vec![usize::MAX; b0.nrows()];
    for (k, &v) in order.iter().enumerate() {
        if v < pos.len() {
            pos[v] = k;
        }
    }
    if pos.contains(&usize::MAX) {
        return false;
    }
    (0..b0.nrows()).all(|e| (0..b0.ncols()).all(|c| c == e || b0[(e, c)] == 0.0 || pos[c] < pos[e]))
}

fn run_one(
    algorithm: Algorithm,
    truth: &GroundTruth,
    seed: u64,
    len: usize,
    options: &BenchOptions,
) -> Result<RunRecord, SynthError> {
    let data = generate(&truth.clone().with_seed(seed), len)?;
    let n = data.n_vars();
    let true_edges = truth.observed_edges();
    let clock = Instant::now();
    let (counts, order_correct) = match algorithm {
        Algorithm::VarLingam => {
            let model = fit_var_lingam(&data, &options.knowledge, &options.varlingam).map_err(|source| {
                SynthError::VarLingam {
                    truth: truth.name.clone(),
                    source,
                }
            })?;
            let lags = model.b.len().max(truth.b.len());
            let mut est = BTreeSet::new();
            for (lag, m) in model.b.iter().enumerate() {
                for e in 0..n {
                    for c in 0..n {
                        if m[(e, c)] != 0.0 && !(lag == 0 && c == e) {
                            est.insert((c, e, lag));
                        }
                    }
                }
            }
            let possible = n * (n - 1) + n * n * (lags - 1);
            let ok = order_consistent(&model.causal_order, &truth.observed_b()[0]);
            (Counts::compare(&est, &true_edges, possible), Some(ok))
        }
        Algorithm::Lpcmci => {
            let pag = discover_dataset(&data, &options.knowledge, &options.lpcmci).map_err(|source| {
                SynthError::Lpcmci {
                    truth: truth.name.clone(),
                    source,
                }
            })?;
            let tau_max = options.lpcmci.tau_max;
            let canon = |(c, e, lag): (usize, usize, usize)| if lag == 0 { (c.min(e), c.max(e), 0) } else { (c, e, lag) };
            let est = pag.edges.iter().map(|e| canon((e.source, e.target, e.lag))).collect();
            let truth_adj = true_edges
                .iter()
                .filter(|e| e.2 <= tau_max)
                .map(|&e| canon(e))
                .collect();
            let possible = n * (n - 1) / 2 + n * n * tau_max;
            (Counts::compare(&est, &truth_adj, possible), None)
        }
    };
    Ok(RunRecord {
        algorithm,
        truth: truth.name.clone(),
        seed,
        precision: counts.precision(),
        recall: counts.recall(),
        false_positive_rate: counts.false_positive_rate(),
        order_correct,
        seconds: clock.elapsed().as_secs_f64(),
    })
}

/// Runs every algorithm on every truth for `seeds` noise draws each. Seed
/// `k` of a truth simulates with `truth.seed + k·φ` (φ the 64-bit golden
/// ratio); runs execute in parallel and are reduced in a fixed order.
pub fn run_benchmark(
    suite: &[GroundTruth],
    algorithms: &[Algorithm],
    len: usize,
    seeds: usize,
    options: &BenchOptions,
) -> Result<MetricsTable, SynthError> {
    if seeds == 0 {
        return Err(SynthError::NoSeeds);
    }
    if suite.is_empty() || algorithms.is_empty() {
        return Err(SynthError::EmptySuite);
    }
    for t in suite {
        t.validate()?;
    }
    let mut algs = algorithms.to_vec();
    algs.sort();
    algs.dedup();
    let jobs: Vec<(Algorithm, usize, u64)> = algs
        .iter()
        .flat_map(|&a| {
            (0..suite.len()).flat_map(move |t| (0..seeds as u64).map(move |k| (a, t, k)))
        })
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(a, t, k)| run_one(a, &suite[t], derive_seed(suite[t].seed, k), len, options))
        .collect::<Result<Vec<_>, _>>()?;

    let rows = runs
        .chunks(seeds)
        .map(|chunk| {
            let k = chunk.len() as f64;
            let mean = |f: &dyn Fn(&RunRecord) -> f64| chunk.iter().map(f).sum::<f64>() / k;
            MetricsRow {
                algorithm: chunk[0].algorithm,
                truth: chunk[0].truth.clone(),
                runs: chunk.len(),
                precision: mean(&|r| r.precision),
                recall: mean(&|r| r.recall),
                false_positive_rate: mean(&|r| r.false_positive_rate),
                order_accuracy: chunk[0]
                    .order_correct
                    .map(|_| mean(&|r| r.order_correct.map_or(0.0, f64::from))),
                mean_seconds: mean(&|r| r.seconds),
            }
        })
        .collect();
    Ok(MetricsTable {
        len,
        seeds,
        rows,
        runs,
    })
}
