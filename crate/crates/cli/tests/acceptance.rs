//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use qnum_cli::checks::{concavity_samples, gradient_suite, hessian_samples};
use qnum_cli::{run_sweep, run_sweep_to_file, to_csv, SweepRow, SweepSpec};
use qnum_core::model::{build_topology, link_classes};
use qnum_core::solver::{grid_search_oracle, solve};
use qnum_core::utility::second_partial_w;
use qnum_core::{Execution, SolverConfig, TopologyKind, UtilityKind};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn sweep_spec(topology: TopologyKind, values: Vec<f64>, utilities: &[UtilityKind]) -> SweepSpec {
    SweepSpec {
        topology,
        parameter_values: values,
        utilities: utilities.to_vec(),
        solver_config: SolverConfig::default(),
        output_path: PathBuf::new(),
    }
}

fn sweep(topology: TopologyKind, values: Vec<f64>) -> Vec<SweepRow> {
    run_sweep(&sweep_spec(topology, values, &UtilityKind::ALL), Execution::default()).expect("sweep runs")
}

fn rows_for(rows: &[SweepRow], utility: UtilityKind) -> Vec<&SweepRow> {
    rows.iter().filter(|r| r.utility == utility).collect()
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn anchors() -> Outcome {
    let start = Instant::now();
    let de = second_partial_w(UtilityKind::De, 0.97).unwrap();
    let skf = second_partial_w(UtilityKind::Skf, 0.97).unwrap();
    let elapsed = start.elapsed();
    let passed = (de + 3.19).abs() <= 0.01 && (skf + 2.34).abs() <= 0.01 && within(elapsed, Duration::from_secs(1));
    Outcome::new(
        passed,
        format!("DE {de:.5} (want -3.19 +/- 0.01), SKF {skf:.5} (want -2.34 +/- 0.01), {elapsed:.2?} (< 1 s)"),
    )
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let results: Vec<_> = TopologyKind::ALL
        .iter()
        .map(|&kind| gradient_suite(kind, 100, Execution::default()))
        .collect();
    let elapsed = start.elapsed();
    let worst = results.iter().map(|r| r.measured).fold(0.0, f64::max);
    let passed = results.iter().all(|r| r.passed) && within(elapsed, Duration::from_secs(10));
    Outcome::new(
        passed,
        format!("worst relative error {worst:.2e} over 4 x 100 points (<= 1e-6), {elapsed:.2?} (< 10 s)"),
    )
}

fn concavity() -> Outcome {
    let start = Instant::now();
    let midpoints = concavity_samples(1000);
    let hessians = hessian_samples(100);
    let elapsed = start.elapsed();
    let passed = midpoints.passed && hessians.passed && within(elapsed, Duration::from_secs(30));
    Outcome::new(
        passed,
        format!(
            "{}/1000 midpoint samples hold (slack 1e-9), min Hessian eigenvalue {:.3e} (>= -1e-6), {elapsed:.2?} (< 30 s)",
            midpoints.measured, hessians.measured
        ),
    )
}

const ORACLE_INSTANCES: [(TopologyKind, f64); 6] = [
    (TopologyKind::ThreeLink, 2.0),
    (TopologyKind::ThreeLink, 50.0),
    (TopologyKind::ThreeLink, 120.0),
    (TopologyKind::ClientsServer, 1.0),
    (TopologyKind::ClientsServer, 4.0),
    (TopologyKind::ClientsServer, 8.0),
];

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let config = SolverConfig::default();
    let mut worst_gap = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut all_converged = true;
    for (kind, parameter) in ORACLE_INSTANCES {
        let spec = build_topology(kind, parameter).unwrap();
        let classes = link_classes(kind, parameter).unwrap();
        let report = solve(&spec, UtilityKind::Ngtv, &config).unwrap();
        let oracle = grid_search_oracle(&spec, UtilityKind::Ngtv, &classes, 2000, Execution::default()).unwrap();
        worst_gap = worst_gap.max((report.objective - oracle.objective).abs() / oracle.objective.abs());
        worst_residual = worst_residual.max(report.max_residual);
        all_converged &= report.converged;
    }
    let elapsed = start.elapsed();
    let passed =
        all_converged && worst_gap <= 1e-3 && worst_residual <= 1e-6 && within(elapsed, Duration::from_secs(120));
    Outcome::new(
        passed,
        format!(
            "worst relative gap {worst_gap:.2e} (<= 1e-3), worst normalized residual {worst_residual:.2e} (<= 1e-6), \
             all converged {all_converged}, {elapsed:.2?} (< 2 min)"
        ),
    )
}

fn domain_enforcement(rows: &[SweepRow]) -> Outcome {
    let floor = |u: UtilityKind| match u {
        UtilityKind::De => 0.81,
        UtilityKind::Skf => 0.84 - 0.005,
        UtilityKind::Ngtv => 0.5,
    };
    let mut checked = 0;
    let mut violations = Vec::new();
    for row in rows.iter().filter(|r| r.converged) {
        for (route, &f) in &row.report.e2e_fidelity {
            checked += 1;
            let ok = match row.utility {
                UtilityKind::Ngtv => f > floor(row.utility),
                other => f >= floor(other),
            };
            if !ok {
                violations.push(format!("{}({}) {} {route}: {f:.6}", row.topology, row.parameter, row.utility));
            }
        }
    }
    let mut lowest = String::new();
    for u in UtilityKind::ALL {
        let min = rows
            .iter()
            .filter(|r| r.converged && r.utility == u)
            .flat_map(|r| r.report.e2e_fidelity.values().copied())
            .fold(f64::INFINITY, f64::min);
        lowest.push_str(&format!(" {u} {min:.4}"));
    }
    Outcome::new(
        violations.is_empty() && checked > 0,
        format!(
            "{checked} route fidelities checked, lowest:{lowest} (DE >= 0.81, SKF >= 0.835, NGTV > 0.5){}",
            if violations.is_empty() { String::new() } else { format!("; violations: {violations:?}") }
        ),
    )
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn three_link_shape(rows: &[SweepRow]) -> Outcome {
    let mut failures = Vec::new();
    for row in rows.iter().filter(|r| r.converged) {
        let (access, shared) = (row.class_fidelity("access").unwrap(), row.class_fidelity("shared").unwrap());
        if shared > access {
            failures.push(format!("(a) {} L3={}: link 3 {shared:.6} > links 1/2 {access:.6}", row.utility, row.parameter));
        }
    }
    for u in UtilityKind::ALL {
        let utilities: Vec<f64> = rows_for(rows, u).iter().map(|r| r.aggregate_utility).collect();
        if !strictly_decreasing(&utilities) {
            failures.push(format!("(b) {u} aggregate utility not strictly decreasing"));
        }
    }
    let ngtv = rows_for(rows, UtilityKind::Ngtv);
    for other in [UtilityKind::De, UtilityKind::Skf] {
        for (n, o) in ngtv.iter().zip(rows_for(rows, other)) {
            if !(n.rate_hz > o.rate_hz && n.e2e_fidelity < o.e2e_fidelity) {
                failures.push(format!("(c) L3={}: NGTV vs {other} rate/fidelity ordering", n.parameter));
            }
        }
    }
    let converged = rows.iter().filter(|r| r.converged).count();
    Outcome::new(
        failures.is_empty(),
        format!(
            "{} rows over L3 = 2..180 km ({converged} converged); {}",
            rows.len(),
            if failures.is_empty() { "(a), (b), (c) hold".to_string() } else { failures.join("; ") }
        ),
    )
}

/// Crossover and utility-threshold checks shared by the clients-server and
/// dumbbell sweeps.
fn crossover_shape(rows: &[SweepRow], label: &str) -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for u in UtilityKind::ALL {
        let series = rows_for(rows, u);
        let (first, last) = (series[0], series[series.len() - 1]);
        let fidelity = |r: &SweepRow| (r.class_fidelity("backbone").unwrap(), r.class_fidelity("metro").unwrap());
        let (bb_first, metro_first) = fidelity(first);
        let (bb_last, metro_last) = fidelity(last);
        notes.push(format!(
            "{u}: Bb/M at {label}={} {bb_first:.4}/{metro_first:.4}, at {label}={} {bb_last:.4}/{metro_last:.4}",
            first.parameter, last.parameter
        ));
        if !(bb_first > metro_first) {
            failures.push(format!("{u} backbone below metro at {label}={}", first.parameter));
        }
        if !(bb_last < metro_last) {
            failures.push(format!("{u} backbone above metro at {label}={}", last.parameter));
        }

        let utilities: Vec<f64> = series.iter().map(|r| r.aggregate_utility).collect();
        let peak = (0..utilities.len())
            .max_by(|&a, &b| utilities[a].total_cmp(&utilities[b]))
            .unwrap();
        let rises = utilities[..=peak].windows(2).all(|w| w[1] > w[0]);
        let falls = strictly_decreasing(&utilities[peak..]);
        notes.push(format!("{u}: utility peaks at {label}={}", series[peak].parameter));
        if !(peak > 0 && peak + 1 < utilities.len() && rises && falls) {
            failures.push(format!("{u} aggregate utility does not rise then fall"));
        }
    }
    Outcome::new(
        failures.is_empty() && rows.iter().all(|r| r.converged),
        format!(
            "{}; {}",
            notes.join("; "),
            if failures.is_empty() { "holds".to_string() } else { format!("failed: {}", failures.join("; ")) }
        ),
    )
}

fn determinism_and_box(all_rows: &[&[SweepRow]]) -> Outcome {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut identical = true;
    for topology in [TopologyKind::ThreeLink, TopologyKind::ClientsServer] {
        let values: Vec<f64> = ORACLE_INSTANCES
            .iter()
            .filter(|(k, _)| *k == topology)
            .map(|(_, p)| *p)
            .collect();
        let mut outputs = Vec::new();
        for (i, execution) in [Execution::default(), Execution::Sequential, Execution::default()]
            .into_iter()
            .enumerate()
        {
            let mut spec = sweep_spec(topology, values.clone(), &UtilityKind::ALL);
            spec.output_path = dir.path().join(format!("{topology}-{i}.csv"));
            let rows = run_sweep_to_file(&spec, execution).expect("sweep runs");
            let bytes = std::fs::read(&spec.output_path).expect("csv written");
            identical &= bytes == to_csv(&rows).unwrap();
            outputs.push(bytes);
        }
        identical &= outputs.windows(2).all(|w| w[0] == w[1]);
    }

    let eps = SolverConfig::default().interior_eps;
    let mut solutions = 0;
    let mut outside = 0;
    for row in all_rows.iter().flat_map(|rows| rows.iter()) {
        solutions += 1;
        let x = &row.report.solution;
        let inside = x.werner.values().all(|&w| w >= eps && w <= 1.0 - eps) && x.rates.values().all(|&r| r >= eps);
        if !inside {
            outside += 1;
        }
    }
    Outcome::new(
        identical && outside == 0,
        format!(
            "repeated CSVs byte-identical: {identical}; {solutions} solutions inside [eps, 1-eps] x [eps, inf): {}",
            solutions - outside
        ),
    )
}

fn main() {
    let integers = |range: std::ops::RangeInclusive<u32>, step: usize| -> Vec<f64> {
        range.step_by(step).map(f64::from).collect()
    };
    let three_link = sweep(TopologyKind::ThreeLink, integers(2..=180, 1));
    let clients_server = sweep(TopologyKind::ClientsServer, integers(1..=12, 1));
    let dumbbell = sweep(TopologyKind::Dumbbell, integers(2..=24, 2));
    let line = sweep(TopologyKind::Line, integers(5..=300, 5));
    let mut swept: Vec<SweepRow> = Vec::new();
    for rows in [&three_link, &clients_server, &dumbbell, &line] {
        swept.extend(rows.iter().cloned());
    }

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("second-partial anchors", Box::new(anchors)),
        ("gradient oracle", Box::new(gradient_oracle)),
        ("negativity concavity", Box::new(concavity)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("domain enforcement", Box::new(|| domain_enforcement(&swept))),
        ("three-link sweep shape", Box::new(|| three_link_shape(&three_link))),
        ("clients-server crossover", Box::new(|| crossover_shape(&clients_server, "n"))),
        ("dumbbell crossover", Box::new(|| crossover_shape(&dumbbell, "users"))),
        (
            "determinism and box feasibility",
            Box::new(|| determinism_and_box(&[&three_link, &clients_server, &dumbbell, &line])),
        ),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} | {}",
            i + 1,
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
