//! Solving the utility maximization program
//!
//! ```text
//! min  -sum_r U_r(R_r, w)
//! s.t. sum_{r ∋ l} R_r = d_l (1 - w_l)      for every link l
//!      eps <= w_l <= 1 - eps,  R_r >= eps
//!      sum_{l in r} ln w_l >= ln w*_r       for routes with a fidelity threshold
//! ```
//!
//! with an augmented Lagrangian outer loop and projected gradient descent
//! inner loop ([`solve`]), plus a brute-force grid search over symmetry
//! classes ([`grid_search_oracle`]) used to certify solutions.

mod augmented;
mod finite_diff;
mod oracle;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fidelity_to_werner, werner_to_fidelity, Network, NetworkSpec, Point, SolutionVector};
use crate::utility::{route_utility, DomainMargin, UtilityKind};

pub use finite_diff::finite_diff_gradient;
pub use oracle::grid_search_oracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub initial_penalty: f64,
    /// Factor applied to the penalty when the residual fails to shrink 4x.
    pub penalty_growth: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    /// Bound on `max_l |residual_l| / d_l` at convergence.
    pub residual_tol: f64,
    /// Bound on the infinity norm of the projected gradient at convergence.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub initial_step: f64,
    /// Clearance kept from the boundary of the box constraints.
    pub interior_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_outer_iters: 30,
            max_inner_iters: 5000,
            residual_tol: 1e-8,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            initial_step: 1.0,
            interior_eps: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.initial_penalty > 0.0, "initial_penalty must be positive"),
            (self.penalty_growth > 1.0, "penalty_growth must exceed 1"),
            (self.max_outer_iters > 0, "max_outer_iters must be positive"),
            (self.max_inner_iters > 0, "max_inner_iters must be positive"),
            (self.residual_tol > 0.0, "residual_tol must be positive"),
            (self.grad_tol > 0.0, "grad_tol must be positive"),
            (self.armijo_c > 0.0 && self.armijo_c < 1.0, "armijo_c must lie in (0, 1)"),
            (
                self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0,
                "backtrack_factor must lie in (0, 1)",
            ),
            (self.initial_step > 0.0, "initial_step must be positive"),
            (
                self.interior_eps > 0.0 && self.interior_eps < 0.25,
                "interior_eps must lie in (0, 1/4)",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config(msg.to_string())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: SolutionVector,
    /// `-sum_r U_r` at `solution`.
    pub objective: f64,
    pub per_route_utility: BTreeMap<String, f64>,
    pub e2e_fidelity: BTreeMap<String, f64>,
    /// `max_l |residual_l| / d_l`.
    pub max_residual: f64,
    /// Infinity norm of the projected gradient of the Lagrangian.
    pub projected_gradient: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub converged: bool,
    /// Multiplier of each link's rate-balance equality in the solver's
    /// internal scaling; useful for warm starts.
    pub multipliers: BTreeMap<String, f64>,
    /// Multiplier of each route's fidelity threshold (routes without one are absent).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub threshold_multipliers: BTreeMap<String, f64>,
}

impl SolveReport {
    /// Aggregate utility `sum_r U_r`, the negated objective.
    pub fn aggregate_utility(&self) -> f64 {
        -self.objective
    }
}

/// Optional starting state for [`solve_from`].
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub solution: SolutionVector,
    pub multipliers: BTreeMap<String, f64>,
    pub threshold_multipliers: BTreeMap<String, f64>,
}

impl From<&SolveReport> for WarmStart {
    fn from(report: &SolveReport) -> Self {
        Self {
            solution: report.solution.clone(),
            multipliers: report.multipliers.clone(),
            threshold_multipliers: report.threshold_multipliers.clone(),
        }
    }
}

/// Signed rate-balance residual `sum_{r ∋ l} R_r - d_l (1 - w_l)` per link.
pub fn constraint_residuals(spec: &NetworkSpec, x: &SolutionVector) -> Result<BTreeMap<String, f64>> {
    let net = Network::compile(spec)?;
    let point = net.point_from(x)?;
    Ok(net.link_map(net.residuals(&point)))
}

/// Clamps Werner parameters into `[eps, 1 - eps]` and rates into `[eps, inf)`.
pub fn project_box(x: &SolutionVector, spec: &NetworkSpec, eps: f64) -> Result<SolutionVector> {
    let net = Network::compile(spec)?;
    let mut point = net.point_from(x)?;
    clamp_point(&mut point, eps);
    Ok(net.solution_from(&point))
}

pub(crate) fn clamp_point(point: &mut Point, eps: f64) {
    for w in &mut point.werner {
        *w = w.clamp(eps, 1.0 - eps);
    }
    for r in &mut point.rates {
        *r = r.max(eps);
    }
}

/// Target end-to-end Werner parameter for the starting point.
fn start_target(kind: UtilityKind) -> f64 {
    let fidelity = match kind {
        UtilityKind::De | UtilityKind::Skf => 0.9,
        UtilityKind::Ngtv => 0.75,
    };
    fidelity_to_werner(fidelity).expect("constant fidelity is valid")
}

pub(crate) fn initial_point(net: &Network, kind: UtilityKind, eps: f64) -> Result<Point> {
    let hops = net.max_hops();
    let target = (0..net.num_routes())
        .filter_map(|r| net.werner_threshold(r))
        .fold(start_target(kind), f64::max);
    let w = target.powf(1.0 / hops as f64);
    if !(w < 1.0 - eps) {
        return Err(Error::InfeasibleStart(format!(
            "reaching end-to-end werner parameter {target} needs per-link werner {w}, \
             which leaves no generation rate"
        )));
    }
    let werner = vec![w; net.num_links()];
    let shares: Vec<f64> = (0..net.num_links())
        .map(|l| net.coefficients()[l] * (1.0 - w) / net.link_routes(l).len().max(1) as f64)
        .collect();
    let rates: Vec<f64> = (0..net.num_routes())
        .map(|r| {
            net.route_links(r)
                .iter()
                .map(|&l| shares[l])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    for r in 0..net.num_routes() {
        let margin = DomainMargin::evaluate(kind, rates[r], net.e2e_werner(r, &werner));
        if !margin.feasible || rates[r] < eps {
            return Err(Error::InfeasibleStart(format!(
                "route `{}` has margin {} and rate {} at the starting point",
                net.route_ids()[r],
                margin.margin,
                rates[r]
            )));
        }
    }
    Ok(Point { rates, werner })
}

/// Deterministic strictly-feasible starting point.
///
/// Every link gets `w = t^(1/h)` with `h` the longest route's hop count and
/// `t` the target end-to-end Werner parameter (fidelity 0.9 for DE/SKF, 0.75
/// for NGTV, raised to any requested threshold). Each route then takes the
/// smallest equal share of its links' generation rates.
pub fn initialize(spec: &NetworkSpec, kind: UtilityKind) -> Result<SolutionVector> {
    let net = Network::compile(spec)?;
    let point = initial_point(&net, kind, SolverConfig::default().interior_eps)?;
    Ok(net.solution_from(&point))
}

/// Solves from [`initialize`]'s starting point.
pub fn solve(spec: &NetworkSpec, kind: UtilityKind, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let net = Network::compile(spec)?;
    let mut start = initial_point(&net, kind, config.interior_eps)?;
    tighten(&net, &mut start, config.interior_eps);
    let outcome = augmented::Solver::new(&net, kind, config).run(start, None);
    build_report(&net, kind, outcome)
}

/// Raises every link's Werner parameter until its generation rate equals its
/// load, which only improves the objective and keeps thresholds satisfied.
fn tighten(net: &Network, point: &mut Point, eps: f64) {
    for l in 0..net.num_links() {
        let load: f64 = net.link_routes(l).iter().map(|&r| point.rates[r]).sum();
        let w = 1.0 - load / net.coefficients()[l];
        point.werner[l] = point.werner[l].max(w).min(1.0 - eps);
    }
}

/// Solves from a caller-provided point, optionally with multipliers from a
/// previous run. The point is projected into the box first and must lie in
/// the utility domain.
pub fn solve_from(
    spec: &NetworkSpec,
    kind: UtilityKind,
    config: &SolverConfig,
    warm: &WarmStart,
) -> Result<SolveReport> {
    config.validate()?;
    let net = Network::compile(spec)?;
    let mut start = net.point_from(&warm.solution)?;
    clamp_point(&mut start, config.interior_eps);
    crate::utility::negated_utility(&net, kind, &start)
        .map_err(|e| Error::InfeasibleStart(e.to_string()))?;
    let lookup = |map: &BTreeMap<String, f64>, ids: &[String]| -> Vec<f64> {
        ids.iter().map(|id| map.get(id).copied().unwrap_or(0.0)).collect()
    };
    let multipliers = augmented::Multipliers {
        links: lookup(&warm.multipliers, net.link_ids()),
        thresholds: lookup(&warm.threshold_multipliers, net.route_ids()),
    };
    let outcome = augmented::Solver::new(&net, kind, config).run(start, Some(multipliers));
    build_report(&net, kind, outcome)
}

pub(crate) fn report_for_point(
    net: &Network,
    kind: UtilityKind,
    point: &Point,
    converged: bool,
) -> Result<SolveReport> {
    build_report(
        net,
        kind,
        augmented::Outcome {
            point: point.clone(),
            multipliers: augmented::Multipliers::zeros(net),
            projected_gradient: 0.0,
            outer_iters: 0,
            inner_iters: 0,
            converged,
        },
    )
}

fn build_report(net: &Network, kind: UtilityKind, outcome: augmented::Outcome) -> Result<SolveReport> {
    let point = &outcome.point;
    let utilities = (0..net.num_routes())
        .map(|r| route_utility(kind, point.rates[r], net.e2e_werner(r, &point.werner)))
        .collect::<Result<Vec<_>>>()?;
    let fidelities = (0..net.num_routes())
        .map(|r| werner_to_fidelity(net.e2e_werner(r, &point.werner)))
        .collect::<Result<Vec<_>>>()?;
    let threshold_multipliers = (0..net.num_routes())
        .filter(|&r| net.werner_threshold(r).is_some())
        .map(|r| (net.route_ids()[r].clone(), outcome.multipliers.thresholds[r]))
        .collect();
    Ok(SolveReport {
        solution: net.solution_from(point),
        objective: crate::utility::negated_utility(net, kind, point)?,
        per_route_utility: net.route_map(utilities),
        e2e_fidelity: net.route_map(fidelities),
        max_residual: net.max_normalized_residual(point),
        projected_gradient: outcome.projected_gradient,
        outer_iters: outcome.outer_iters,
        inner_iters: outcome.inner_iters,
        converged: outcome.converged,
        multipliers: net.link_map(outcome.multipliers.links.iter().copied()),
        threshold_multipliers,
    })
}
