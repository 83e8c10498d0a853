//! Aggregation of finished runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::commands::{Claim, Metric, RunResult, Status};

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub dir: String,
    pub command: String,
    pub claims: Vec<Claim>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub invariance: BTreeMap<String, Metric>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub p_values: BTreeMap<String, Metric>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub uncertainty_products: BTreeMap<String, Metric>,
}

#[derive(Debug, Serialize)]
pub struct Totals {
    pub runs: usize,
    pub claims: usize,
    pub passed: usize,
    pub passed_with_convergence: usize,
    pub failed: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub generated: String,
    pub totals: Totals,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{0}: no result.json")]
    Missing(PathBuf),
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

fn summarize(dir: &Path) -> Result<RunSummary, ReportError> {
    let path = dir.join("result.json");
    let text = std::fs::read_to_string(&path).map_err(|_| ReportError::Missing(dir.to_path_buf()))?;
    let r: RunResult =
        serde_json::from_str(&text).map_err(|e| ReportError::Invalid { path: path.clone(), message: e.to_string() })?;
    let pick = |pred: &dyn Fn(&str) -> bool| -> BTreeMap<String, Metric> {
        r.metrics.iter().filter(|(k, _)| pred(k)).map(|(k, m)| (k.clone(), m.clone())).collect()
    };
    Ok(RunSummary {
        dir: dir.display().to_string(),
        command: r.command.clone(),
        invariance: pick(&|k| k.starts_with("prob_dev") || k == "density_dev" || k == "convergence_order"),
        p_values: pick(&|k| k == "p_value"),
        uncertainty_products: pick(&|k| k.starts_with("product_")),
        claims: r.claims,
    })
}

pub fn build(dirs: &[PathBuf], generated: String) -> Result<Report, ReportError> {
    let runs = dirs.iter().map(|d| summarize(d)).collect::<Result<Vec<_>, _>>()?;
    let all: Vec<&Claim> = runs.iter().flat_map(|r| &r.claims).collect();
    let count = |s: Status| all.iter().filter(|c| c.status == s).count();
    let totals = Totals {
        runs: runs.len(),
        claims: all.len(),
        passed: count(Status::Pass),
        passed_with_convergence: count(Status::PassWithConvergence),
        failed: count(Status::Fail),
    };
    Ok(Report { generated, totals, runs })
}

pub fn summary_text(r: &Report) -> String {
    let mut s = String::new();
    for run in &r.runs {
        let _ = writeln!(s, "{} ({})", run.dir, run.command);
        for c in &run.claims {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::PassWithConvergence => "PASS*",
                Status::Fail => "FAIL",
            };
            let _ = writeln!(s, "  {tag:5} {} = {:e} (tol {:e}, {:?})", c.name, c.value, c.tolerance, c.provenance);
        }
        for (k, m) in run.invariance.iter().chain(&run.p_values).chain(&run.uncertainty_products) {
            let _ = writeln!(s, "        {k} = {:e} (tol {:e}, {:?})", m.value, m.tolerance, m.provenance);
        }
    }
    let t = &r.totals;
    let _ = writeln!(
        s,
        "{} runs, {} claims: {} pass, {} pass with convergence, {} fail",
        t.runs, t.claims, t.passed, t.passed_with_convergence, t.failed
    );
    s
}
