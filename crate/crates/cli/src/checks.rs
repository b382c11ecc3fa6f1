//! Verification suites: the closed-form second partials, negativity
//! concavity (sampled midpoints and numerical Hessians) and the analytic
//! gradient against central differences.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use qnum_core::model::{build_topology, Network, Point};
use qnum_core::solver::finite_diff_gradient;
use qnum_core::utility::{
    aggregate_objective, negated_utility, negated_utility_gradient, objective_gradient,
    second_partial_w,
};
use qnum_core::{Execution, Link, NetworkSpec, Route, SolutionVector, TopologyKind, UtilityKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    /// Human-readable acceptance bound on `measured`.
    pub tolerance: String,
    pub passed: bool,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.6e}, required {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

fn anchor(kind: UtilityKind, expected: f64) -> CheckResult {
    let value = second_partial_w(kind, 0.97).unwrap_or(f64::NAN);
    CheckResult {
        name: format!("{kind} second partial at w = 0.97"),
        measured: value,
        tolerance: format!("{expected} +/- 0.01"),
        passed: (value - expected).abs() <= 0.01,
    }
}

/// Single route over three links, the instance used for concavity sampling.
pub fn three_hop_route() -> NetworkSpec {
    let links = (1..=3)
        .map(|i| Link::new(format!("l{i}"), 10.0 * i as f64, 1e-3, 0.5).expect("valid link"))
        .collect();
    NetworkSpec::new(links, vec![Route::new("r", ["l1", "l2", "l3"])])
}

/// Uniform point with rate in `[1e-3, 1e3]` (log-uniform) and
/// `3 w1 w2 w3 - 1 >= min_margin`.
fn negativity_point(rng: &mut impl Rng, min_margin: f64) -> Point {
    let floor = ((1.0 + min_margin) / 3.0).powf(1.0 / 3.0);
    loop {
        let rate = 10f64.powf(rng.random_range(-3.0..3.0));
        let werner: Vec<f64> = (0..3).map(|_| rng.random_range(floor..1.0)).collect();
        if 3.0 * werner.iter().product::<f64>() - 1.0 >= min_margin {
            return Point {
                rates: vec![rate],
                werner,
            };
        }
    }
}

/// Fraction of random midpoint-concavity samples of the negativity utility
/// that hold with slack `1e-9`.
pub fn concavity_samples(samples: usize) -> CheckResult {
    let net = Network::compile(&three_hop_route()).expect("valid network");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let utility = |p: &Point| -negated_utility(&net, UtilityKind::Ngtv, p).expect("inside the domain");
    let mut passed = 0;
    for _ in 0..samples {
        let x = negativity_point(&mut rng, 1e-9);
        let y = negativity_point(&mut rng, 1e-9);
        let mid = Point {
            rates: vec![0.5 * (x.rates[0] + y.rates[0])],
            werner: x.werner.iter().zip(&y.werner).map(|(a, b)| 0.5 * (a + b)).collect(),
        };
        if utility(&mid) >= 0.5 * (utility(&x) + utility(&y)) - 1e-9 {
            passed += 1;
        }
    }
    CheckResult {
        name: format!("NGTV midpoint concavity ({samples} samples)"),
        measured: passed as f64,
        tolerance: format!("= {samples} passing"),
        passed: passed == samples,
    }
}

/// Central-difference Hessian of `-U` assembled from the analytic gradient
/// and symmetrized.
fn numerical_hessian(net: &Network, point: &Point) -> DMatrix<f64> {
    let nr = net.num_routes();
    let n = nr + net.num_links();
    let gradient = |p: &Point| {
        let mut rates = vec![0.0; nr];
        let mut werner = vec![0.0; net.num_links()];
        negated_utility_gradient(net, UtilityKind::Ngtv, p, &mut rates, &mut werner).expect("inside the domain");
        rates.extend(werner);
        rates
    };
    let set = |p: &mut Point, i: usize, value: f64| {
        if i < nr {
            p.rates[i] = value;
        } else {
            p.werner[i - nr] = value;
        }
    };
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let base = if i < nr { point.rates[i] } else { point.werner[i - nr] };
        let step = 1e-6 * base.abs();
        let mut up = point.clone();
        let mut down = point.clone();
        set(&mut up, i, base + step);
        set(&mut down, i, base - step);
        let (gu, gd) = (gradient(&up), gradient(&down));
        for j in 0..n {
            h[(j, i)] = (gu[j] - gd[j]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

/// Smallest eigenvalue over numerically sampled Hessians of `-U^N`.
pub fn hessian_samples(samples: usize) -> CheckResult {
    let net = Network::compile(&three_hop_route()).expect("valid network");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut smallest = f64::INFINITY;
    for _ in 0..samples {
        let point = negativity_point(&mut rng, 0.05);
        let eigen = SymmetricEigen::new(numerical_hessian(&net, &point));
        smallest = smallest.min(eigen.eigenvalues.min());
    }
    CheckResult {
        name: format!("NGTV Hessian minimum eigenvalue ({samples} points)"),
        measured: smallest,
        tolerance: ">= -1e-6".into(),
        passed: smallest >= -1e-6,
    }
}

/// Parameter values the gradient suite draws from for each topology.
fn gradient_parameters(kind: TopologyKind) -> &'static [f64] {
    match kind {
        TopologyKind::ThreeLink => &[2.0, 20.0, 50.0, 100.0, 150.0, 180.0],
        TopologyKind::Line => &[5.0, 50.0, 100.0, 200.0, 300.0],
        TopologyKind::ClientsServer => &[1.0, 2.0, 4.0, 8.0, 12.0],
        TopologyKind::Dumbbell => &[2.0, 4.0, 8.0, 16.0, 24.0],
    }
}

/// Random interior point: rates in `[0.5, 10]`, per-link Werner parameters
/// high enough that every route has fidelity above 0.86, which is inside all
/// three utility domains.
fn gradient_point(spec: &NetworkSpec, rng: &mut impl Rng) -> SolutionVector {
    let hops = spec.routes.iter().map(|r| r.links.len()).max().unwrap_or(1);
    let floor = 0.81f64.powf(1.0 / hops as f64);
    let mut x = SolutionVector::default();
    for route in &spec.routes {
        x.rates.insert(route.id.clone(), rng.random_range(0.5..10.0));
    }
    for link in &spec.links {
        x.werner.insert(link.id.clone(), rng.random_range(floor..0.99));
    }
    x
}

/// Worst relative error of `objective_gradient` against central differences
/// with `h = 1e-6`, over `points` random points per topology and all three
/// utilities.
pub fn gradient_suite(kind: TopologyKind, points: usize, execution: Execution) -> CheckResult {
    let seeds: Vec<u64> = (0..points as u64).collect();
    let errors = execution.map(&seeds, |&i| {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED.wrapping_add(i).wrapping_mul(kind as u64 + 3));
        let parameters = gradient_parameters(kind);
        let spec = build_topology(kind, parameters[rng.random_range(0..parameters.len())]).expect("valid topology");
        let x = gradient_point(&spec, &mut rng);
        UtilityKind::ALL
            .iter()
            .map(|&utility| {
                let analytic = objective_gradient(&spec, utility, &x);
                let numeric = finite_diff_gradient(|p| aggregate_objective(&spec, utility, p), &x, 1e-6);
                match (analytic, numeric) {
                    (Ok(a), Ok(n)) => relative_error(&a, &n),
                    _ => f64::INFINITY,
                }
            })
            .fold(0.0, f64::max)
    });
    let worst = errors.into_iter().fold(0.0, f64::max);
    CheckResult {
        name: format!("gradient vs central differences on {kind} ({points} points)"),
        measured: worst,
        tolerance: "<= 1e-6 relative".into(),
        passed: worst <= 1e-6,
    }
}

/// Largest per-coordinate relative error.
fn relative_error(analytic: &SolutionVector, numeric: &SolutionVector) -> f64 {
    analytic
        .rates
        .values()
        .zip(numeric.rates.values())
        .chain(analytic.werner.values().zip(numeric.werner.values()))
        .map(|(a, n)| (a - n).abs() / a.abs())
        .fold(0.0, f64::max)
}

/// Every verification check with its default sample sizes.
pub fn run_checks(execution: Execution) -> Vec<CheckResult> {
    let mut results = vec![
        anchor(UtilityKind::De, -3.19),
        anchor(UtilityKind::Skf, -2.34),
        concavity_samples(1000),
        hessian_samples(100),
    ];
    results.extend(TopologyKind::ALL.map(|kind| gradient_suite(kind, 100, execution)));
    results
}
