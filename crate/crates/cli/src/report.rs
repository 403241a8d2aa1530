//! Markdown rendering of a run [`Report`].

use std::fmt::Write as _;

use tscausal::dataset::TransformStep;
use tscausal::stattests::AdfSpec;
use tscausal::varlingam::LagMatrix;

use crate::pipeline::{AdfRow, Report};

fn p(v: f64) -> String {
    format!("{v:.4}")
}

fn adf_section(out: &mut String, title: &str, rows: &[AdfRow]) {
    let _ = writeln!(out, "## {title}\n");
    out.push_str("| Variable |");
    for spec in AdfSpec::ALL {
        let _ = write!(out, " {spec} |");
    }
    out.push_str(" Unit root |\n|---|");
    out.push_str(&"---|".repeat(AdfSpec::ALL.len() + 1));
    out.push('\n');
    for r in rows {
        let _ = write!(out, "| {} |", r.variable);
        for (_, v) in &r.p_values {
            let _ = write!(out, " {} |", p(*v));
        }
        let _ = writeln!(out, " {} |", if r.nonstationary { "yes" } else { "no" });
    }
    out.push('\n');
}

fn matrix_table(out: &mut String, names: &[String], m: &LagMatrix, se: Option<&LagMatrix>) {
    out.push_str("| effect \\ cause |");
    for n in names {
        let _ = write!(out, " {n} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(names.len()));
    out.push('\n');
    for (i, row) in m.values.iter().enumerate() {
        let _ = write!(out, "| {} |", names[i]);
        for (j, v) in row.iter().enumerate() {
            match se {
                Some(se) => {
                    let _ = write!(out, " {:.4} ({:.4}) |", v, se.values[i][j]);
                }
                None => {
                    let _ = write!(out, " {v:.4} |");
                }
            }
        }
        out.push('\n');
    }
    out.push('\n');
}

pub fn markdown(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tscausal run report\n");
    let _ = writeln!(out, "Version {}. Seed {}.\n", r.version, r.config.seed);

    if let Some(f) = &r.failure {
        let _ = writeln!(out, "## Failure\n\nStage `{}` failed: {}\n", f.stage, f.cause);
    }

    if let Some(d) = &r.data {
        let _ = writeln!(out, "## Data\n");
        let _ = writeln!(
            out,
            "{} observations of {} variables, {} to {}.\n",
            d.observations,
            d.variables.len(),
            d.first_date,
            d.last_date
        );
        if !d.skipped_rows.is_empty() {
            let _ = writeln!(out, "Skipped rows with unparseable values:\n");
            for s in &d.skipped_rows {
                let _ = writeln!(out, "- {} row {} `{}`: `{}`", s.path.display(), s.row, s.variable, s.raw);
            }
            out.push('\n');
        }
    }

    if !r.adf_levels.is_empty() {
        adf_section(&mut out, "ADF test p-values (levels)", &r.adf_levels);
        let _ = writeln!(
            out,
            "A variable has a unit root when all four p-values exceed {}.\n",
            r.adf_alpha
        );
    }
    if r.differenced {
        adf_section(&mut out, "ADF test p-values (differenced)", &r.adf_differenced);
    }

    if r.data.is_some() {
        let _ = writeln!(out, "## Transformations\n");
        if r.transforms.steps.is_empty() {
            out.push_str("None; coefficients are on the level scale.\n\n");
        }
        for step in &r.transforms.steps {
            match step {
                TransformStep::Difference { order, .. } => {
                    let _ = writeln!(out, "- difference of order {order}");
                }
                TransformStep::Standardize { mean, scale } => {
                    out.push_str("- standardize (mean, sd):");
                    for (k, name) in r.transforms.variables.iter().enumerate() {
                        let _ = write!(out, " {name} ({:.6}, {:.6})", mean[k], scale[k]);
                        out.push(if k + 1 < mean.len() { ';' } else { '\n' });
                    }
                }
            }
        }
        if !r.transforms.steps.is_empty() {
            out.push('\n');
        }
    }

    if let Some(sel) = &r.order_selection {
        let _ = writeln!(out, "## Lag order selection\n");
        out.push_str("| order | AIC | BIC | HQIC |\n|---|---|---|---|\n");
        for row in &sel.rows {
            let _ = writeln!(out, "| {} | {:.4} | {:.4} | {:.4} |", row.order, row.aic, row.bic, row.hqic);
        }
        let _ = writeln!(
            out,
            "\nSelected: AIC {}, BIC {}, HQIC {}; using {} ({}).\n",
            sel.aic_order, sel.bic_order, sel.hqic_order, sel.order(r.config.criterion), r.config.criterion
        );
    }

    let names = r.data.as_ref().map(|d| d.variables.clone()).unwrap_or_default();
    if let Some(v) = &r.var {
        let _ = writeln!(out, "## VAR estimation\n");
        let _ = writeln!(
            out,
            "VAR({}) on {} observations; companion spectral radius {:.4}. Standard errors in parentheses.\n",
            v.order, v.nobs, v.spectral_radius
        );
        out.push_str("| | intercept |\n|---|---|\n");
        for (k, name) in names.iter().enumerate() {
            let _ = writeln!(out, "| {name} | {:.4} ({:.4}) |", v.intercept[k], v.intercept_standard_errors[k]);
        }
        out.push('\n');
        for (m, se) in v.coefficients.iter().zip(&v.standard_errors) {
            let _ = writeln!(out, "Lag {}:\n", m.lag);
            matrix_table(&mut out, &names, m, Some(se));
        }
        let jb = &v.jarque_bera;
        out.push_str("Jarque-Bera test of residual normality:\n\n| Equation | skewness | kurtosis | JB | p-value |\n|---|---|---|---|---|\n");
        for (k, c) in jb.columns.iter().enumerate() {
            let _ = writeln!(
                out,
                "| {} | {:.4} | {:.4} | {:.4} | {} |",
                names[k], c.skewness, c.kurtosis, c.jb_statistic, p(c.p_value)
            );
        }
        let _ = writeln!(
            out,
            "| joint | | | {:.4} | {} |\n",
            jb.aggregate_statistic,
            p(jb.aggregate_p_value)
        );
    }

    if !r.linearity.is_empty() {
        let _ = writeln!(out, "## Linearity diagnostics\n");
        out.push_str("Pearson correlation of cause(t - lag) with effect(t).\n\n| cause | effect | lag | correlation |\n|---|---|---|---|\n");
        for s in &r.linearity {
            let c = s.correlation.map_or("n/a".to_string(), |c| format!("{c:.4}"));
            let _ = writeln!(out, "| {} | {} | {} | {} |", s.cause, s.effect, s.lag, c);
        }
        out.push('\n');
    }

    if let Some(vl) = &r.varlingam {
        let _ = writeln!(out, "## Adjacency matrices\n");
        let _ = writeln!(
            out,
            "VAR-LiNGAM, causal order: {}. Entry (effect, cause) is the effect of cause(t - lag) on effect(t).\n",
            vl.model.causal_order.join(" < ")
        );
        for m in &vl.model.adjacency {
            let _ = writeln!(out, "B{}:\n", m.lag);
            matrix_table(&mut out, &vl.model.variable_names, m, None);
        }
        if !vl.warnings.is_empty() {
            out.push_str("Warnings:\n\n");
            for w in &vl.warnings {
                let _ = writeln!(out, "- {}", serde_json::to_string(w).unwrap_or_default());
            }
            out.push('\n');
        }
        summary_section(&mut out, "VAR-LiNGAM summary graph", &vl.summary);
    }

    if let Some(lp) = &r.lpcmci {
        let _ = writeln!(out, "## LPCMCI partial ancestral graph\n");
        let _ = writeln!(out, "tau_max {}, alpha {}.\n", lp.pag.tau_max, r.config.alpha);
        out.push_str("| source | target | marks | max abs statistic | min p-value |\n|---|---|---|---|---|\n");
        for e in &lp.pag.edges {
            let _ = writeln!(
                out,
                "| {}(t-{}) | {}(t) | {} | {:.4} | {} |",
                lp.pag.variable_names[e.source],
                e.lag,
                lp.pag.variable_names[e.target],
                e.symbol(),
                e.max_abs_statistic,
                e.min_p_value.map_or("n/a".into(), p)
            );
        }
        out.push('\n');
        summary_section(&mut out, "LPCMCI summary graph", &lp.summary);
    }

    if !r.artifacts.is_empty() {
        let _ = writeln!(out, "## Artifacts\n");
        for a in &r.artifacts {
            let _ = writeln!(out, "- {a}");
        }
    }
    out
}

fn summary_section(out: &mut String, title: &str, s: &tscausal::graphs::SummaryGraph) {
    let _ = writeln!(out, "### {title}\n");
    if s.edges.is_empty() {
        out.push_str("No edges.\n\n");
        return;
    }
    out.push_str("| cause | effect | strength | lags |\n|---|---|---|---|\n");
    for e in &s.edges {
        let lags = if e.contemporaneous { "contemporaneous".to_string() } else { e.label() };
        let _ = writeln!(
            out,
            "| {} | {} | {:.4} | {} |",
            s.variable_names[e.cause], s.variable_names[e.effect], e.strength, lags
        );
    }
    out.push('\n');
}
