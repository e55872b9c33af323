//! Records written by the commands. JSON floats use the shortest
//! round-tripping representation; CSV floats use 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use drbsde::diagnostics::{AprioriReport, ComparisonReport, ConvergenceReport};
use drbsde::NormReport;
use serde::{Deserialize, Serialize};

use crate::config::{BackendKind, SolverChoice};
use crate::CliError;

pub const SERIES_HEADER: &str = "t,mean_y,mean_z,mean_k_plus,mean_k_minus";
pub const CONVERGENCE_HEADER: &str =
    "n,upper_violation,lower_violation,scaled_upper,scaled_lower,distance,y0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardRecord {
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// `summary.json` of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub solver: SolverChoice,
    pub backend: BackendKind,
    pub steps: usize,
    pub seed: u64,
    pub y0: f64,
    pub norms: NormReport<f64>,
    /// Path-averaged `Σ (Y - L) ΔK⁺` and `Σ (U - Y) ΔK⁻`.
    pub residuals: Pair,
    /// Largest `(L - Y)⁺` and `(Y - U)⁺`.
    pub violations: Pair,
    pub terminal_error: f64,
    pub apriori: AprioriReport<f64>,
    pub max_inner_iterations: usize,
    pub picard: Option<PicardRecord>,
}

/// `summary.json` of `converge`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeSummary {
    pub backend: BackendKind,
    pub seed: u64,
    pub report: ConvergenceReport<f64>,
}

/// `comparison.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub solver: SolverChoice,
    pub backend: BackendKind,
    pub seed: u64,
    pub first_y0: f64,
    pub second_y0: f64,
    pub report: ComparisonReport<f64>,
    pub k_ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCounts {
    pub continuation: usize,
    pub exercise: usize,
    pub cancel: usize,
    pub both: usize,
}

/// `price.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub solver: SolverChoice,
    pub backend: BackendKind,
    pub steps: usize,
    pub seed: u64,
    pub oracle_value: f64,
    pub engine_value: f64,
    pub relative_gap: f64,
    pub regions: RegionCounts,
    /// Per level: `c` continue, `e` exercise, `x` cancel, `b` both (lattice only).
    pub region_masks: Option<Vec<String>>,
    pub picard_trace: Option<Vec<f64>>,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_file(dir, name, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Numeric rows of a table written by [`csv_table`].
pub fn parse_csv(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    text.lines()
        .skip(1)
        .map(|line| {
            line.split(',')
                .map(|v| v.parse::<f64>().map_err(|e| CliError::Io(format!("bad csv value {v}: {e}"))))
                .collect()
        })
        .collect()
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn convergence_rows(report: &ConvergenceReport<f64>) -> Vec<Vec<f64>> {
    report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n as f64,
                r.upper_violation,
                r.lower_violation,
                r.scaled_upper,
                r.scaled_lower,
                r.distance,
                r.y0,
            ]
        })
        .collect()
}
