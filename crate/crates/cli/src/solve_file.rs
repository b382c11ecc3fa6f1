use std::path::Path;

use qnum_core::model::{success_probability_warnings, ValidationWarning};
use qnum_core::solver::solve;
use qnum_core::{NetworkSpec, SolveReport, SolverConfig, UtilityKind};

use crate::error::{CliError, Result};

/// A solved network file together with every non-fatal finding.
#[derive(Debug, Clone)]
pub struct FileSolve {
    pub report: SolveReport,
    pub warnings: Vec<ValidationWarning>,
}

/// Reads a network description from `path` and solves it.
pub fn solve_config_file(path: &Path, utility: UtilityKind, config: &SolverConfig) -> Result<FileSolve> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (spec, mut warnings) = NetworkSpec::from_json(&text)?;
    let report = solve(&spec, utility, config)?;
    warnings.extend(success_probability_warnings(&spec, &report.solution));
    Ok(FileSolve { report, warnings })
}

/// Pretty-printed JSON for a report.
pub fn report_json(report: &SolveReport) -> String {
    serde_json::to_string_pretty(report).expect("reports contain only finite data and string keys")
}
