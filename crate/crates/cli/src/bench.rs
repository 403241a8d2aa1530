//! `bench` subcommand: synthetic benchmark suites rendered as a table.

use std::fmt::Write as _;

use tscausal::synthbench::{self, market_knowledge, run_benchmark, Algorithm, BenchOptions, MetricsTable, SynthError};

pub struct BenchRequest {
    pub suite: String,
    pub seeds: usize,
    pub len: usize,
    pub truths: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
}

pub fn bench(req: &BenchRequest) -> Result<MetricsTable, SynthError> {
    let suite = synthbench::suite(&req.suite, req.truths, req.base_seed)?;
    let mut options = BenchOptions::default();
    if req.suite == "market" {
        options.knowledge = market_knowledge();
    }
    run_benchmark(&suite, &req.algorithms, req.len, req.seeds, &options)
}

pub fn markdown(table: &MetricsTable) -> String {
    let mut out = format!(
        "T = {}, {} seed(s) per truth\n\n| algorithm | truth | runs | precision | recall | FPR | order acc. | mean s |\n|---|---|---|---|---|---|---|---|\n",
        table.len, table.seeds
    );
    for r in &table.rows {
        let order = r.order_accuracy.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.3} | {:.3} | {:.4} | {} | {:.3} |",
            r.algorithm.as_str(),
            r.truth,
            r.runs,
            r.precision,
            r.recall,
            r.false_positive_rate,
            order,
            r.mean_seconds
        );
    }
    out
}
