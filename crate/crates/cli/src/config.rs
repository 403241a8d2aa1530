//! Run configuration: a single TOML document.
//!
//! ```toml
//! files = ["sample_markets.csv"]      # relative to the config file
//! start = "2021-07-01"
//! end = "2022-12-31"
//! difference = true                   # first-difference all series if any has a unit root
//! standardize = true
//! criterion = "hqic"                  # hqic | bic | aic
//! max_order = 10
//! algorithms = ["varlingam", "lpcmci"]
//! knowledge = "sample_knowledge.toml" # optional
//! tau_max = 2
//! alpha = 0.05
//! seed = 7
//! output_dir = "out"                  # TSCAUSAL_OUTPUT_DIR overrides
//! workers = 0                         # 0 = all cores
//!
//! [variables]                         # variable name = CSV column
//! USD = "USD"
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use tscausal::dataset::parse_date;
use tscausal::var::Criterion;

pub const OUTPUT_DIR_ENV: &str = "TSCAUSAL_OUTPUT_DIR";
pub const ALGORITHMS: [&str; 2] = ["varlingam", "lpcmci"];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    files: Vec<String>,
    variables: BTreeMap<String, String>,
    start: String,
    end: String,
    #[serde(default = "yes")]
    difference: bool,
    #[serde(default = "yes")]
    standardize: bool,
    #[serde(default = "default_criterion")]
    criterion: String,
    #[serde(default = "default_max_order")]
    max_order: usize,
    algorithms: Vec<String>,
    knowledge: Option<String>,
    #[serde(default = "default_tau_max")]
    tau_max: usize,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_output")]
    output_dir: String,
    #[serde(default)]
    workers: usize,
}

fn yes() -> bool {
    true
}
fn default_criterion() -> String {
    "hqic".into()
}
fn default_max_order() -> usize {
    10
}
fn default_tau_max() -> usize {
    2
}
fn default_alpha() -> f64 {
    0.05
}
fn default_output() -> String {
    "out".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmName {
    VarLingam,
    Lpcmci,
}

/// Validated configuration with paths resolved against the config directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    /// Data files as written in the config.
    pub files: Vec<String>,
    #[serde(skip)]
    pub file_paths: Vec<PathBuf>,
    pub variables: BTreeMap<String, String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub difference: bool,
    pub standardize: bool,
    pub criterion: Criterion,
    pub max_order: usize,
    pub algorithms: Vec<AlgorithmName>,
    pub knowledge: Option<String>,
    #[serde(skip)]
    pub knowledge_path: Option<PathBuf>,
    pub tau_max: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub workers: usize,
}

impl RunConfig {
    pub fn runs(&self, algorithm: AlgorithmName) -> bool {
        self.algorithms.contains(&algorithm)
    }
}

/// One problem found in a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn diag(field: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        field: field.into(),
        message: message.into(),
    }
}

/// Reads and checks a config file; every problem found is reported.
pub fn load(path: &Path) -> Result<RunConfig, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![diag("config", format!("cannot read {}: {e}", path.display()))])?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base)
}

/// Diagnostics for a config file without running anything; empty when valid.
pub fn validate(path: &Path) -> Vec<Diagnostic> {
    load(path).err().unwrap_or_default()
}

pub fn parse(text: &str, base: &Path) -> Result<RunConfig, Vec<Diagnostic>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| vec![diag("config", e.message().to_string())])?;
    let mut out = Vec::new();

    if raw.files.is_empty() {
        out.push(diag("files", "at least one data file is needed"));
    }
    let file_paths: Vec<PathBuf> = raw.files.iter().map(|f| base.join(f)).collect();
    for (name, p) in raw.files.iter().zip(&file_paths) {
        if !p.is_file() {
            out.push(diag("files", format!("data file `{name}` not found at {}", p.display())));
        }
    }
    if raw.variables.len() < 2 {
        out.push(diag("variables", "at least two variables are needed"));
    }

    let start = parse_date(&raw.start);
    let end = parse_date(&raw.end);
    if start.is_none() {
        out.push(diag("start", format!("`{}` is not a YYYY-MM-DD date", raw.start)));
    }
    if end.is_none() {
        out.push(diag("end", format!("`{}` is not a YYYY-MM-DD date", raw.end)));
    }
    if let (Some(s), Some(e)) = (start, end) {
        if s >= e {
            out.push(diag("start", format!("start {s} must be before end {e}")));
        }
    }

    let criterion = match raw.criterion.parse::<Criterion>() {
        Ok(c) => Some(c),
        Err(e) => {
            out.push(diag("criterion", e));
            None
        }
    };
    if raw.max_order == 0 {
        out.push(diag("max_order", "must be at least 1"));
    }

    let mut algorithms = Vec::new();
    for a in &raw.algorithms {
        match a.as_str() {
            "varlingam" => algorithms.push(AlgorithmName::VarLingam),
            "lpcmci" => algorithms.push(AlgorithmName::Lpcmci),
            other => out.push(diag(
                "algorithms",
                format!("unknown algorithm `{other}` (valid: {})", ALGORITHMS.join(", ")),
            )),
        }
    }
    algorithms.sort();
    algorithms.dedup();
    if raw.algorithms.is_empty() {
        out.push(diag("algorithms", format!("select at least one of {}", ALGORITHMS.join(", "))));
    }

    let knowledge_path = raw.knowledge.as_ref().map(|k| base.join(k));
    if let (Some(name), Some(p)) = (&raw.knowledge, &knowledge_path) {
        if !p.is_file() {
            out.push(diag("knowledge", format!("knowledge file `{name}` not found at {}", p.display())));
        }
    }
    if raw.tau_max == 0 {
        out.push(diag("tau_max", "must be at least 1"));
    }
    if !(raw.alpha > 0.0 && raw.alpha < 1.0) {
        out.push(diag("alpha", format!("{} is not in (0, 1)", raw.alpha)));
    }

    if !out.is_empty() {
        return Err(out);
    }
    let output_dir = match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => base.join(&raw.output_dir),
    };
    Ok(RunConfig {
        files: raw.files,
        file_paths,
        variables: raw.variables,
        start: start.expect("checked"),
        end: end.expect("checked"),
        difference: raw.difference,
        standardize: raw.standardize,
        criterion: criterion.expect("checked"),
        max_order: raw.max_order,
        algorithms,
        knowledge: raw.knowledge,
        knowledge_path,
        tau_max: raw.tau_max,
        alpha: raw.alpha,
        seed: raw.seed,
        output_dir,
        workers: raw.workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
    }

    fn sample() -> String {
        std::fs::read_to_string(base().join("sample_config.toml")).unwrap()
    }

    #[test]
    fn bundled_config_is_valid() {
        let cfg = parse(&sample(), &base()).unwrap();
        assert_eq!(cfg.variables.len(), 6);
        assert_eq!(cfg.algorithms, vec![AlgorithmName::VarLingam, AlgorithmName::Lpcmci]);
    }

    #[test]
    fn reversed_dates_give_one_diagnostic() {
        let text = sample().replace("start = \"2021-07-01\"", "start = \"2023-07-01\"");
        let d = parse(&text, &base()).unwrap_err();
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].field, "start");
    }

    #[test]
    fn unknown_algorithm_lists_valid_names() {
        let text = sample().replace("\"lpcmci\"]", "\"pcmci\"]");
        let d = parse(&text, &base()).unwrap_err();
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].message.contains("varlingam, lpcmci"));
    }

    #[test]
    fn missing_knowledge_file_is_named() {
        let text = sample().replace("sample_knowledge.toml", "nowhere.toml");
        let d = parse(&text, &base()).unwrap_err();
        assert!(d[0].message.contains("nowhere.toml"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse(&format!("bogus = 1\n{}", sample()), &base()).is_err());
    }
}
