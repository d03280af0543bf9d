//! Result files.
//!
//! * `summary.json`: config echo, per-algorithm RMSE reports, convergence
//!   statistics, failures. Validates against `schema/summary.schema.json`.
//! * `rmse_<algo>.csv`: `epoch,pos_rmse,speed_rmse` of the smoothed estimate.
//! * `trajectory_<run>_<algo>.csv`: truth and smoothed estimate of one run.
//!
//! Floats are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::metrics::{POSITION_COMPONENTS, SPEED_COMPONENTS};
use crate::montecarlo::{AlgorithmResult, MonteCarloResult, OracleSummary, RunFailure};
use crate::scenario::{Algorithm, ScenarioConfig};

pub const FORMAT_VERSION: u32 = 1;

pub const SUMMARY_SCHEMA: &str = include_str!("../schema/summary.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseConvention {
    /// One-based state components.
    pub position_components: Vec<usize>,
    pub speed_components: Vec<usize>,
    pub estimate: String,
    pub average: String,
}

impl Default for RmseConvention {
    fn default() -> Self {
        Self {
            position_components: POSITION_COMPONENTS.iter().map(|c| c + 1).collect(),
            speed_components: SPEED_COMPONENTS.iter().map(|c| c + 1).collect(),
            estimate: "smoothed (filtered reported alongside)".into(),
            average: "per-epoch RMSE across runs, then the mean over epochs".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub format_version: u32,
    pub scenario: ScenarioConfig,
    pub rmse_convention: RmseConvention,
    pub runs_requested: usize,
    pub runs_used: usize,
    pub excluded_runs: Vec<usize>,
    pub failures: Vec<RunFailure>,
    pub measurement_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_run: Option<usize>,
    pub results: BTreeMap<Algorithm, AlgorithmResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
}

impl Summary {
    pub fn from_result(res: &MonteCarloResult) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scenario: res.config.clone(),
            rmse_convention: RmseConvention::default(),
            runs_requested: res.config.runs,
            runs_used: res.config.runs - res.excluded_runs.len(),
            excluded_runs: res.excluded_runs.clone(),
            failures: res.failures.clone(),
            measurement_digest: res.measurement_digest.clone(),
            trajectory_run: res.trajectory.as_ref().map(|t| t.run),
            results: res.results.clone(),
            oracle: res.oracle.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

pub fn rmse_csv(result: &AlgorithmResult) -> String {
    let r = &result.smoothed;
    let mut out = String::from("epoch,pos_rmse,speed_rmse\n");
    for (k, (p, s)) in r
        .per_epoch_position_rmse
        .iter()
        .zip(&r.per_epoch_speed_rmse)
        .enumerate()
    {
        writeln!(out, "{},{p:?},{s:?}", k + 1).unwrap();
    }
    out
}

pub fn trajectory_csv(truth: &[Vec<f64>], estimate: &[Vec<f64>]) -> String {
    let n = truth.first().map_or(0, Vec::len);
    let mut out = String::from("epoch");
    for prefix in ["truth", "est"] {
        for i in 1..=n {
            write!(out, ",{prefix}_x{i}").unwrap();
        }
    }
    out.push('\n');
    for (k, (x, xhat)) in truth.iter().zip(estimate).enumerate() {
        write!(out, "{}", k + 1).unwrap();
        for v in x.iter().chain(xhat) {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| BenchError::io(&path, e))?;
    Ok(path)
}

/// Writes every result file into `dir`, creating it when needed.
pub fn emit_report(res: &MonteCarloResult, dir: &Path) -> Result<Vec<PathBuf>> {
    if res.results.is_empty() {
        return Err(BenchError::Config("nothing to report".into()));
    }
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut written = vec![write(dir.join("summary.json"), &Summary::from_result(res).to_json())?];
    for (algo, result) in &res.results {
        written.push(write(dir.join(format!("rmse_{algo}.csv")), &rmse_csv(result))?);
    }
    if let Some(t) = &res.trajectory {
        for (algo, est) in &t.estimates {
            let name = format!("trajectory_run{}_{algo}.csv", t.run);
            written.push(write(dir.join(name), &trajectory_csv(&t.truth, est))?);
        }
    }
    Ok(written)
}

/// Replaces every `wall_time_s` value so two summaries can be compared
/// byte for byte.
pub fn strip_wall_time(summary_json: &str) -> String {
    summary_json
        .lines()
        .map(|line| match line.find("\"wall_time_s\":") {
            Some(i) => {
                let comma = if line.trim_end().ends_with(',') { "," } else { "" };
                format!("{}\"wall_time_s\": 0{comma}", &line[..i])
            }
            None => line.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}
