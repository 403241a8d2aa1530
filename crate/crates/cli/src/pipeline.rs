//! The end-to-end run: ingest, stationarity screen, VAR, causal discovery,
//! exports. Each stage records its results in a [`Report`] so a failure
//! still leaves the completed sections on disk.

use std::fs;
use std::path::Path;

use log::info;
use serde::Serialize;
use thiserror::Error;

use tscausal::dataset::{
    align, difference, ingest_csv, linearity_diagnostics, standardize, AlignPolicy, ScatterSummary,
    SkippedRow, TransformLog,
};
use tscausal::graphs::{export, varlingam_to_lpcmci_form, Collapse, Graph, LaggedDag, SummaryGraph};
use tscausal::lingam::{Knowledge, LingamConfig};
use tscausal::lpcmci::{discover_dataset, LpcmciConfig, TimeSeriesPAG};
use tscausal::stattests::{adf_test, jarque_bera, AdfSpec, JarqueBera};
use tscausal::var::{self, OrderSelection};
use tscausal::varlingam::{fit_var_lingam, LagMatrix, VarLingamConfig, VarLingamDocument, VarLingamWarning};
use tscausal::Dataset;

use crate::config::{AlgorithmName, RunConfig};
use crate::report;

#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {cause}")]
pub struct StageError {
    pub stage: &'static str,
    pub cause: String,
}

fn stage<E: std::fmt::Display>(name: &'static str) -> impl FnOnce(E) -> StageError {
    move |e| StageError {
        stage: name,
        cause: e.to_string(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub variables: Vec<String>,
    pub first_date: String,
    pub last_date: String,
    pub observations: usize,
    pub skipped_rows: Vec<SkippedRow>,
}

/// ADF p-values for one variable under each deterministic specification.
#[derive(Debug, Clone, Serialize)]
pub struct AdfRow {
    pub variable: String,
    pub p_values: Vec<(AdfSpec, f64)>,
    pub statistics: Vec<(AdfSpec, f64)>,
    pub nonstationary: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarSummary {
    pub order: usize,
    pub nobs: usize,
    pub intercept: Vec<f64>,
    pub intercept_standard_errors: Vec<f64>,
    pub coefficients: Vec<LagMatrix>,
    pub standard_errors: Vec<LagMatrix>,
    pub spectral_radius: f64,
    pub jarque_bera: JarqueBera,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarLingamSection {
    pub model: VarLingamDocument,
    pub warnings: Vec<VarLingamWarning>,
    pub summary: SummaryGraph,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpcmciSection {
    pub pag: TimeSeriesPAG,
    pub summary: SummaryGraph,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub stage: String,
    pub cause: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub knowledge: Knowledge,
    pub data: Option<DataSummary>,
    pub adf_alpha: f64,
    pub adf_levels: Vec<AdfRow>,
    pub differenced: bool,
    pub adf_differenced: Vec<AdfRow>,
    pub transforms: TransformLog<f64>,
    pub order_selection: Option<OrderSelection>,
    pub var: Option<VarSummary>,
    pub linearity: Vec<ScatterSummary<f64>>,
    pub varlingam: Option<VarLingamSection>,
    pub lpcmci: Option<LpcmciSection>,
    pub artifacts: Vec<String>,
    pub failure: Option<Failure>,
}

impl Report {
    fn new(config: &RunConfig) -> Self {
        Self {
            tool: "tscausal".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            knowledge: Knowledge::default(),
            data: None,
            adf_alpha: config.alpha,
            adf_levels: Vec::new(),
            differenced: false,
            adf_differenced: Vec::new(),
            transforms: TransformLog::default(),
            order_selection: None,
            var: None,
            linearity: Vec::new(),
            varlingam: None,
            lpcmci: None,
            artifacts: Vec::new(),
            failure: None,
        }
    }
}

fn adf_table(ds: &Dataset, alpha: f64) -> Result<Vec<AdfRow>, StageError> {
    ds.names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col = ds.column(j);
            let mut p_values = Vec::new();
            let mut statistics = Vec::new();
            for spec in AdfSpec::ALL {
                let r = adf_test(&col, spec, None).map_err(stage("adf"))?;
                p_values.push((spec, r.p_value));
                statistics.push((spec, r.test_statistic));
            }
            Ok(AdfRow {
                variable: name.clone(),
                nonstationary: p_values.iter().all(|(_, p)| *p > alpha),
                p_values,
                statistics,
            })
        })
        .collect()
}

fn lag_matrices<'a>(mats: impl IntoIterator<Item = &'a nalgebra::DMatrix<f64>>, first_lag: usize) -> Vec<LagMatrix> {
    mats.into_iter()
        .enumerate()
        .map(|(k, m)| LagMatrix {
            lag: first_lag + k,
            values: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        })
        .collect()
}

struct Writer<'a> {
    dir: &'a Path,
}

impl Writer<'_> {
    fn write(&self, report: &mut Report, name: &str, body: &str) -> Result<(), StageError> {
        fs::write(self.dir.join(name), body).map_err(stage("export"))?;
        report.artifacts.push(name.to_string());
        Ok(())
    }

    fn graph(&self, report: &mut Report, stem: &str, graph: &Graph) -> Result<(), StageError> {
        self.write(report, &format!("{stem}.dot"), &export(graph, "dot").map_err(stage("export"))?)?;
        self.write(report, &format!("{stem}.graph.json"), &export(graph, "json").map_err(stage("export"))?)
    }
}

fn stages(config: &RunConfig, report: &mut Report, out: &Writer) -> Result<(), StageError> {
    if let Some(path) = &config.knowledge_path {
        let text = fs::read_to_string(path)
            .map_err(|e| stage("knowledge")(format!("cannot read {}: {e}", path.display())))?;
        let k: Knowledge = toml::from_str(&text)
            .map_err(|e| stage("knowledge")(format!("{}: {}", path.display(), e.message())))?;
        k.validate().map_err(stage("knowledge"))?;
        report.knowledge = k;
    }

    info!("ingest");
    let ingested = ingest_csv::<f64, _>(&config.file_paths, &config.variables).map_err(stage("ingest"))?;
    let skipped = ingested
        .skipped
        .iter()
        .cloned()
        .map(|mut s| {
            // Only the file name, so reports do not depend on the checkout location.
            s.path = s.path.file_name().map(Into::into).unwrap_or_default();
            s
        })
        .collect();
    let ds = align(&ingested.series, AlignPolicy::Inner)
        .and_then(|d| d.between(config.start, config.end))
        .map_err(stage("align"))?;
    report.data = Some(DataSummary {
        variables: ds.names().to_vec(),
        first_date: ds.dates().first().map(|d| d.to_string()).unwrap_or_default(),
        last_date: ds.dates().last().map(|d| d.to_string()).unwrap_or_default(),
        observations: ds.len(),
        skipped_rows: skipped,
    });
    report.knowledge.resolve(ds.names()).map_err(stage("knowledge"))?;

    info!("stationarity screen");
    report.adf_levels = adf_table(&ds, config.alpha)?;
    let mut ds = ds;
    if config.difference && report.adf_levels.iter().any(|r| r.nonstationary) {
        let (d, log) = difference(&ds, 1).map_err(stage("difference"))?;
        report.transforms = std::mem::take(&mut report.transforms).then(log);
        report.differenced = true;
        report.adf_differenced = adf_table(&d, config.alpha)?;
        ds = d;
    }
    if config.standardize {
        let (s, log) = standardize(&ds).map_err(stage("standardize"))?;
        report.transforms = std::mem::take(&mut report.transforms).then(log);
        ds = s;
    }

    info!("VAR");
    let selection = var::select_order(&ds, config.max_order).map_err(stage("order selection"))?;
    let order = selection.order(config.criterion);
    report.order_selection = Some(selection);
    let model = var::fit(&ds, order).map_err(stage("var"))?;
    let jb = jarque_bera(&model.residuals).map_err(stage("var"))?;
    report.var = Some(VarSummary {
        order,
        nobs: model.nobs(),
        intercept: model.intercept.iter().copied().collect(),
        intercept_standard_errors: model.intercept_standard_errors.iter().copied().collect(),
        coefficients: lag_matrices(&model.coefficients, 1),
        standard_errors: lag_matrices(&model.standard_errors, 1),
        spectral_radius: model.spectral_radius(),
        jarque_bera: jb,
    });
    report.linearity = linearity_diagnostics(&ds, order).map_err(stage("linearity"))?;

    if config.runs(AlgorithmName::VarLingam) {
        info!("VAR-LiNGAM");
        let mut lingam = LingamConfig::default();
        lingam.ica.seed = config.seed;
        let vl_config = VarLingamConfig {
            order: Some(order),
            lingam,
            adf_alpha: config.alpha,
            ..Default::default()
        };
        let mut fitted = fit_var_lingam(&ds, &report.knowledge, &vl_config).map_err(stage("varlingam"))?;
        // The pipeline standardized the data already.
        fitted.standardized = config.standardize;
        let dag = LaggedDag::from_var_lingam(&fitted).map_err(stage("varlingam"))?;
        let summary = if fitted.standardized {
            varlingam_to_lpcmci_form(&fitted).map_err(stage("varlingam"))?
        } else {
            dag.collapse()
        };
        out.graph(report, "varlingam_lagged", &Graph::Lagged(dag))?;
        out.graph(report, "varlingam_summary", &Graph::Summary(summary.clone()))?;
        report.varlingam = Some(VarLingamSection {
            model: fitted.to_document(),
            warnings: fitted.warnings,
            summary,
        });
    }

    if config.runs(AlgorithmName::Lpcmci) {
        info!("LPCMCI");
        let lp_config = LpcmciConfig {
            tau_max: config.tau_max,
            alpha: config.alpha,
            ..Default::default()
        };
        let pag = discover_dataset(&ds, &report.knowledge, &lp_config).map_err(stage("lpcmci"))?;
        let summary = pag.collapse();
        out.graph(report, "lpcmci_pag", &Graph::Pag(pag.clone()))?;
        out.graph(report, "lpcmci_summary", &Graph::Summary(summary.clone()))?;
        report.lpcmci = Some(LpcmciSection { pag, summary });
    }
    Ok(())
}

/// Runs every stage and writes `report.json` and `report.md`, also when a
/// stage fails.
pub fn run(config: &RunConfig) -> Result<Report, StageError> {
    fs::create_dir_all(&config.output_dir).map_err(|e| {
        stage("output")(format!("cannot create {}: {e}", config.output_dir.display()))
    })?;
    let out = Writer {
        dir: &config.output_dir,
    };
    let mut report = Report::new(config);
    let result = stages(config, &mut report, &out);
    if let Err(e) = &result {
        report.failure = Some(Failure {
            stage: e.stage.to_string(),
            cause: e.cause.clone(),
        });
    }
    report.artifacts.push("report.json".into());
    report.artifacts.push("report.md".into());
    let json = serde_json::to_string_pretty(&report).map_err(stage("report"))?;
    fs::write(config.output_dir.join("report.json"), json).map_err(stage("report"))?;
    fs::write(config.output_dir.join("report.md"), report::markdown(&report)).map_err(stage("report"))?;
    result.map(|_| report)
}
