//! Network utility maximization for quantum networks whose elementary links
//! generate entanglement with the single-photon scheme.
//!
//! Each link trades rate for fidelity through its Werner parameter `w`: it
//! produces pairs at `d (1 - w)` Hz, and swapping multiplies Werner
//! parameters along a route. The crate provides the link physics
//! ([`model`]), three entanglement-based route utilities ([`utility`]) and an
//! augmented Lagrangian solver with a grid-search oracle ([`solver`]).

pub mod error;
pub mod model;
pub mod par;
pub mod solver;
pub mod utility;

pub use error::{Error, Result};
pub use model::{Link, NetworkSpec, Route, SolutionVector, TopologyKind};
pub use par::Execution;
pub use solver::{SolveReport, SolverConfig};
pub use utility::UtilityKind;
