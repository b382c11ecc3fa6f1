use std::io::Write;
use std::path::{Path, PathBuf};

use qnum_core::model::{build_topology, link_classes, LinkClass};
use qnum_core::solver::solve;
use qnum_core::{Execution, SolveReport, SolverConfig, TopologyKind, UtilityKind};

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub topology: TopologyKind,
    pub parameter_values: Vec<f64>,
    pub utilities: Vec<UtilityKind>,
    pub solver_config: SolverConfig,
    pub output_path: PathBuf,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.parameter_values.is_empty() {
            return Err(CliError::Invalid("the sweep has no parameter values".into()));
        }
        if self.utilities.is_empty() {
            return Err(CliError::Invalid("the sweep has no utilities".into()));
        }
        for &p in &self.parameter_values {
            build_topology(self.topology, p)?;
        }
        self.solver_config.validate()?;
        Ok(())
    }
}

/// One solved instance. Symmetric links and routes are collapsed: each link
/// class contributes one fidelity, and all routes share one rate and one
/// end-to-end fidelity (the mean over the class or over the routes).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub topology: TopologyKind,
    pub parameter: f64,
    pub utility: UtilityKind,
    pub aggregate_utility: f64,
    /// `(class name, mean link fidelity)` in class order.
    pub link_fidelity: Vec<(String, f64)>,
    pub rate_hz: f64,
    pub e2e_fidelity: f64,
    pub max_residual: f64,
    pub converged: bool,
    pub report: SolveReport,
}

impl SweepRow {
    fn from_report(
        topology: TopologyKind,
        parameter: f64,
        utility: UtilityKind,
        classes: &[LinkClass],
        report: SolveReport,
    ) -> Self {
        let mean = |values: Vec<f64>| values.iter().sum::<f64>() / values.len() as f64;
        let link_fidelity = classes
            .iter()
            .map(|class| {
                let fidelities = class
                    .links
                    .iter()
                    .map(|l| (3.0 * report.solution.werner[l] + 1.0) / 4.0)
                    .collect();
                (class.name.clone(), mean(fidelities))
            })
            .collect();
        Self {
            topology,
            parameter,
            utility,
            aggregate_utility: report.aggregate_utility(),
            link_fidelity,
            rate_hz: mean(report.solution.rates.values().copied().collect()),
            e2e_fidelity: mean(report.e2e_fidelity.values().copied().collect()),
            max_residual: report.max_residual,
            converged: report.converged,
            report,
        }
    }

    pub fn class_fidelity(&self, class: &str) -> Option<f64> {
        self.link_fidelity.iter().find(|(name, _)| name == class).map(|(_, f)| *f)
    }
}

/// Solves every `(utility, parameter)` pair. Rows come back ordered by
/// utility (DE, SKF, NGTV) and then by ascending parameter, independent of
/// `execution`.
pub fn run_sweep(spec: &SweepSpec, execution: Execution) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut utilities = spec.utilities.clone();
    utilities.sort();
    utilities.dedup();
    let mut parameters = spec.parameter_values.clone();
    parameters.sort_by(f64::total_cmp);

    let jobs: Vec<(UtilityKind, f64)> = utilities
        .iter()
        .flat_map(|&u| parameters.iter().map(move |&p| (u, p)))
        .collect();
    let results = execution.map(&jobs, |&(utility, parameter)| -> Result<SweepRow> {
        let network = build_topology(spec.topology, parameter)?;
        let classes = link_classes(spec.topology, parameter)?;
        let report = solve(&network, utility, &spec.solver_config)?;
        Ok(SweepRow::from_report(spec.topology, parameter, utility, &classes, report))
    });
    results.into_iter().collect()
}

fn number(value: f64) -> String {
    format!("{value:.11e}")
}

/// Renders rows as CSV: a header, then one line per row, numbers with 12
/// significant digits.
pub fn to_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let classes: Vec<&str> = rows
        .first()
        .map(|r| r.link_fidelity.iter().map(|(name, _)| name.as_str()).collect())
        .unwrap_or_default();
    let mut header = vec!["topology".to_string(), "parameter".into(), "utility".into(), "aggregate_utility".into()];
    header.extend(classes.iter().map(|c| format!("fidelity_{c}")));
    header.extend(["rate_hz", "e2e_fidelity", "max_residual", "converged"].map(String::from));
    writer.write_record(&header).map_err(csv_error)?;

    for row in rows {
        let mut record = vec![
            row.topology.name().to_string(),
            number(row.parameter),
            row.utility.name().to_string(),
            number(row.aggregate_utility),
        ];
        record.extend(row.link_fidelity.iter().map(|(_, f)| number(*f)));
        record.extend([
            number(row.rate_hz),
            number(row.e2e_fidelity),
            number(row.max_residual),
            row.converged.to_string(),
        ]);
        writer.write_record(&record).map_err(csv_error)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Invalid(format!("csv: {e}")))
}

fn csv_error(err: csv::Error) -> CliError {
    CliError::Invalid(format!("csv: {err}"))
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers see either the old file or the complete new one.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    file.write_all(bytes).map_err(|e| CliError::io(file.path(), e))?;
    file.as_file().sync_all().map_err(|e| CliError::io(file.path(), e))?;
    file.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Runs the sweep and persists it as CSV at `spec.output_path`.
pub fn run_sweep_to_file(spec: &SweepSpec, execution: Execution) -> Result<Vec<SweepRow>> {
    let rows = run_sweep(spec, execution)?;
    write_atomically(&spec.output_path, &to_csv(&rows)?)?;
    Ok(rows)
}
