use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qnum_cli::{parse_params, report_json, run_checks, run_sweep_to_file, solve_config_file, CliError, SweepSpec};
use qnum_core::{Error, Execution, SolverConfig, TopologyKind, UtilityKind};

/// Network utility maximization for entanglement distribution networks.
#[derive(Debug, Parser)]
#[command(name = "qnum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a built-in topology over a range of parameters and write CSV.
    Sweep {
        #[arg(long, value_enum)]
        topology: Topology,
        #[arg(long, value_enum)]
        utility: UtilityChoice,
        /// `start:stop:step` or a comma-separated list. The parameter is the
        /// link-3 length (three-link), the user count (clients-server,
        /// dumbbell) or the middle-link length (line). Typical ranges:
        /// 2:180:1, 1:12:1, 2:24:2 (even counts only) and 5:300:5.
        #[arg(long, allow_hyphen_values = true)]
        params: String,
        #[arg(long)]
        out: PathBuf,
        /// Solve instances one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Solve a network described in a JSON file and print the report.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        utility: Utility,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Run the numerical verification suites.
    Check,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Topology {
    ThreeLink,
    ClientsServer,
    Line,
    Dumbbell,
}

impl From<Topology> for TopologyKind {
    fn from(t: Topology) -> Self {
        match t {
            Topology::ThreeLink => Self::ThreeLink,
            Topology::ClientsServer => Self::ClientsServer,
            Topology::Line => Self::Line,
            Topology::Dumbbell => Self::Dumbbell,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Utility {
    De,
    Skf,
    Ngtv,
}

impl From<Utility> for UtilityKind {
    fn from(u: Utility) -> Self {
        match u {
            Utility::De => Self::De,
            Utility::Skf => Self::Skf,
            Utility::Ngtv => Self::Ngtv,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UtilityChoice {
    De,
    Skf,
    Ngtv,
    All,
}

impl UtilityChoice {
    fn kinds(self) -> Vec<UtilityKind> {
        match self {
            Self::De => vec![UtilityKind::De],
            Self::Skf => vec![UtilityKind::Skf],
            Self::Ngtv => vec![UtilityKind::Ngtv],
            Self::All => UtilityKind::ALL.to_vec(),
        }
    }
}

/// Overrides for the solver defaults.
#[derive(Debug, Args)]
struct SolverFlags {
    #[arg(long)]
    initial_penalty: Option<f64>,
    #[arg(long)]
    penalty_growth: Option<f64>,
    #[arg(long)]
    max_outer_iters: Option<usize>,
    #[arg(long)]
    max_inner_iters: Option<usize>,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    armijo_c: Option<f64>,
    #[arg(long)]
    backtrack_factor: Option<f64>,
    #[arg(long)]
    initial_step: Option<f64>,
    #[arg(long)]
    interior_eps: Option<f64>,
}

impl SolverFlags {
    fn config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            initial_penalty: self.initial_penalty.unwrap_or(d.initial_penalty),
            penalty_growth: self.penalty_growth.unwrap_or(d.penalty_growth),
            max_outer_iters: self.max_outer_iters.unwrap_or(d.max_outer_iters),
            max_inner_iters: self.max_inner_iters.unwrap_or(d.max_inner_iters),
            residual_tol: self.residual_tol.unwrap_or(d.residual_tol),
            grad_tol: self.grad_tol.unwrap_or(d.grad_tol),
            armijo_c: self.armijo_c.unwrap_or(d.armijo_c),
            backtrack_factor: self.backtrack_factor.unwrap_or(d.backtrack_factor),
            initial_step: self.initial_step.unwrap_or(d.initial_step),
            interior_eps: self.interior_eps.unwrap_or(d.interior_eps),
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Sweep {
            topology,
            utility,
            params,
            out,
            sequential,
            solver,
        } => {
            let spec = SweepSpec {
                topology: topology.into(),
                parameter_values: parse_params(&params)?,
                utilities: utility.kinds(),
                solver_config: solver.config(),
                output_path: out,
            };
            let execution = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let rows = run_sweep_to_file(&spec, execution)?;
            let unconverged = rows.iter().filter(|r| !r.converged).count();
            eprintln!(
                "wrote {} rows to {} ({unconverged} not converged)",
                rows.len(),
                spec.output_path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            config,
            utility,
            solver,
        } => {
            let solved = solve_config_file(&config, utility.into(), &solver.config())?;
            for warning in &solved.warnings {
                eprintln!("warning: {warning}");
            }
            println!("{}", report_json(&solved.report));
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let results = run_checks(Execution::default());
            for result in &results {
                println!("{result}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} checks passed", results.len() - failed, results.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            match &err {
                CliError::Core(Error::InfeasibleStart(_)) => eprintln!("infeasible start: {err}"),
                _ => eprintln!("error: {err}"),
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
