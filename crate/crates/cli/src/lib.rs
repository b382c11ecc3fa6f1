//! Library side of the `qnum` command: parameter sweeps persisted as CSV,
//! single solves of JSON network files, and the verification checks.

pub mod checks;
pub mod error;
pub mod params;
pub mod solve_file;
pub mod sweep;

pub use checks::{run_checks, CheckResult};
pub use error::{CliError, Result};
pub use params::parse_params;
pub use solve_file::{report_json, solve_config_file, FileSolve};
pub use sweep::{run_sweep, run_sweep_to_file, to_csv, SweepRow, SweepSpec};
