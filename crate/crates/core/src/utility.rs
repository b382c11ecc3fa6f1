//! Entanglement-measure utilities and their derivatives.
//!
//! Every route utility has the separable form `ln R + ln m(w_e2e)`, where the
//! margin `m` is the hashing yield (DE), the BB84 secret key fraction (SKF) or
//! `3 w_e2e - 1`, i.e. four times the negativity (NGTV). The logarithm only
//! accepts positive margins, which is what confines each utility to its
//! high-fidelity region.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{werner_to_fidelity, Network, NetworkSpec, Point, SolutionVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UtilityKind {
    /// Distillable entanglement, via the hashing lower bound.
    #[serde(rename = "DE")]
    De,
    /// BB84 secret key fraction.
    #[serde(rename = "SKF")]
    Skf,
    /// Negativity.
    #[serde(rename = "NGTV")]
    Ngtv,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 3] = [UtilityKind::De, UtilityKind::Skf, UtilityKind::Ngtv];

    pub fn name(self) -> &'static str {
        match self {
            Self::De => "DE",
            Self::Skf => "SKF",
            Self::Ngtv => "NGTV",
        }
    }

    /// Signed margin `m(w)` inside the logarithm, for `w` in `[0, 1]`.
    pub fn margin(self, w_e2e: f64) -> f64 {
        match self {
            Self::De => hashing_yield_unchecked((3.0 * w_e2e + 1.0) / 4.0),
            Self::Skf => 1.0 - 2.0 * entropy_unchecked((1.0 - w_e2e) / 2.0),
            Self::Ngtv => 3.0 * w_e2e - 1.0,
        }
    }

    /// `dm/dw`, finite for `w < 1`.
    pub fn margin_derivative(self, w_e2e: f64) -> f64 {
        match self {
            Self::De => 0.75 * ((3.0 * w_e2e + 1.0) / (1.0 - w_e2e)).log2(),
            Self::Skf => ((1.0 + w_e2e) / (1.0 - w_e2e)).log2(),
            Self::Ngtv => 3.0,
        }
    }
}

impl fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UtilityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DE" => Ok(Self::De),
            "SKF" => Ok(Self::Skf),
            "NGTV" => Ok(Self::Ngtv),
            other => Err(Error::Validation(format!("unknown utility `{other}`"))),
        }
    }
}

/// Diagnostic for the domain of a route utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainMargin {
    pub feasible: bool,
    /// `D_H(F_e2e)`, `1 - 2h((1 - w_e2e)/2)` or `3 w_e2e - 1`.
    pub margin: f64,
    pub rate_positive: bool,
}

impl DomainMargin {
    pub fn evaluate(kind: UtilityKind, rate: f64, w_e2e: f64) -> Self {
        let margin = kind.margin(w_e2e);
        let rate_positive = rate > 0.0;
        Self {
            feasible: margin > 0.0 && rate_positive,
            margin,
            rate_positive,
        }
    }
}

fn entropy_unchecked(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

fn hashing_yield_unchecked(fidelity: f64) -> f64 {
    let rest = 1.0 - fidelity;
    let noise = if rest > 0.0 { rest * (rest / 3.0).log2() } else { 0.0 };
    1.0 + fidelity * fidelity.log2() + noise
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            quantity: "probability",
            value: p,
            domain: "[0, 1]",
        });
    }
    Ok(entropy_unchecked(p))
}

/// Yield of the hashing protocol on a Werner state of the given fidelity.
pub fn hashing_yield(fidelity: f64) -> Result<f64> {
    if !(fidelity > 0.0 && fidelity <= 1.0) {
        return Err(Error::Domain {
            quantity: "fidelity",
            value: fidelity,
            domain: "(0, 1]",
        });
    }
    Ok(hashing_yield_unchecked(fidelity))
}

/// BB84 secret key fraction `1 - 2h((1 - w)/2)`, left signed.
pub fn skf_bb84(w: f64) -> Result<f64> {
    werner_to_fidelity(w)?;
    Ok(UtilityKind::Skf.margin(w))
}

pub fn negativity_werner(fidelity: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&fidelity) {
        return Err(Error::Domain {
            quantity: "fidelity",
            value: fidelity,
            domain: "[1/2, 1]",
        });
    }
    Ok(fidelity - 0.5)
}

fn check_e2e_werner(w_e2e: f64) -> Result<()> {
    if w_e2e > 0.0 && w_e2e <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity: "end-to-end werner parameter",
            value: w_e2e,
            domain: "(0, 1]",
        })
    }
}

/// Natural-log utility of one route at rate `rate` and end-to-end Werner
/// parameter `w_e2e`.
pub fn route_utility(kind: UtilityKind, rate: f64, w_e2e: f64) -> Result<f64> {
    check_e2e_werner(w_e2e)?;
    let margin = DomainMargin::evaluate(kind, rate, w_e2e);
    if !margin.feasible {
        return Err(Error::RouteDomain { route: None, margin });
    }
    Ok(rate.ln() + margin.margin.ln())
}

/// `-sum_r U_r` on a compiled network.
pub fn negated_utility(net: &Network, kind: UtilityKind, point: &Point) -> Result<f64> {
    let mut total = 0.0;
    for r in 0..net.num_routes() {
        let w = net.e2e_werner(r, &point.werner);
        total -= route_utility(kind, point.rates[r], w).map_err(|e| name_route(e, net, r))?;
    }
    Ok(total)
}

/// Gradient of `-sum_r U_r`, written into `(rate_grad, werner_grad)`.
pub fn negated_utility_gradient(
    net: &Network,
    kind: UtilityKind,
    point: &Point,
    rate_grad: &mut [f64],
    werner_grad: &mut [f64],
) -> Result<()> {
    werner_grad.iter_mut().for_each(|g| *g = 0.0);
    for r in 0..net.num_routes() {
        let links = net.route_links(r);
        let w = net.e2e_werner(r, &point.werner);
        let rate = point.rates[r];
        if !(w < 1.0 && links.iter().all(|&l| point.werner[l] > 0.0)) {
            return Err(name_route(
                Error::Domain {
                    quantity: "end-to-end werner parameter",
                    value: w,
                    domain: "(0, 1) for differentiation",
                },
                net,
                r,
            ));
        }
        let margin = DomainMargin::evaluate(kind, rate, w);
        if !margin.feasible {
            return Err(Error::RouteDomain {
                route: Some(net.route_ids()[r].clone()),
                margin,
            });
        }
        rate_grad[r] = -1.0 / rate;
        let outer = -kind.margin_derivative(w) / margin.margin;
        for (i, &l) in links.iter().enumerate() {
            let others: f64 = links
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &k)| point.werner[k])
                .product();
            werner_grad[l] += outer * others;
        }
    }
    Ok(())
}

fn name_route(err: Error, net: &Network, r: usize) -> Error {
    match err {
        Error::RouteDomain { margin, .. } => Error::RouteDomain {
            route: Some(net.route_ids()[r].clone()),
            margin,
        },
        Error::Domain { .. } => Error::Consistency(format!("route `{}`: {err}", net.route_ids()[r])),
        other => other,
    }
}

/// `-sum_r U_r(R_r, w)` for a solution of `spec`.
pub fn aggregate_objective(spec: &NetworkSpec, kind: UtilityKind, x: &SolutionVector) -> Result<f64> {
    let net = Network::compile(spec)?;
    negated_utility(&net, kind, &net.point_from(x)?)
}

/// Analytic gradient of [`aggregate_objective`], shaped like the solution.
pub fn objective_gradient(
    spec: &NetworkSpec,
    kind: UtilityKind,
    x: &SolutionVector,
) -> Result<SolutionVector> {
    let net = Network::compile(spec)?;
    let point = net.point_from(x)?;
    let mut rates = vec![0.0; net.num_routes()];
    let mut werner = vec![0.0; net.num_links()];
    negated_utility_gradient(&net, kind, &point, &mut rates, &mut werner)?;
    Ok(net.solution_from(&Point { rates, werner }))
}

/// Second derivative in `w` of the negated single-link DE or SKF utility.
///
/// These are the closed forms whose negative values at high fidelity show
/// the two utilities are not concave. NGTV is rejected.
pub fn second_partial_w(kind: UtilityKind, w: f64) -> Result<f64> {
    let out_of_domain = || Error::Domain {
        quantity: "werner parameter",
        value: w,
        domain: "interior of the single-link utility domain",
    };
    if !(w > 0.0 && w < 1.0) {
        return Err(out_of_domain());
    }
    let margin = kind.margin(w);
    if margin <= 0.0 {
        return Err(out_of_domain());
    }
    match kind {
        UtilityKind::De => {
            let slope = 3.0 / (4.0 * margin) * ((3.0 * w + 1.0) / (1.0 - w)).log2();
            Ok(slope * slope - 3.0 / (margin * LN_2 * (3.0 * w + 1.0) * (1.0 - w)))
        }
        UtilityKind::Skf => {
            let slope = ((1.0 + w) / (1.0 - w)).log2() / margin;
            Ok(slope * slope - 2.0 / (margin * LN_2 * (1.0 + w) * (1.0 - w)))
        }
        UtilityKind::Ngtv => Err(Error::Domain {
            quantity: "utility kind",
            value: f64::NAN,
            domain: "{DE, SKF}",
        }),
    }
}
