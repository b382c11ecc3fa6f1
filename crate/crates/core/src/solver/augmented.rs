//! Augmented Lagrangian outer loop with a projected gradient inner loop.
//!
//! The optimizer works on a scaled vector `z = [rho, u]`:
//!
//! * `R_r = s_r rho_r`, where `s_r` is the smallest equal share of `d_l`
//!   among the route's links;
//! * `d_l (1 - w_l) = S_l u_l`, where `S_l` is the sum of `s_r` over the
//!   routes crossing link `l`.
//!
//! Each rate-balance equality then reads `sum (s_r / S_l) rho_r - u_l = 0`
//! with O(1) coefficients, even for links whose optimal `1 - w_l` is tiny.

use super::SolverConfig;
use crate::model::{Network, Point};
use crate::utility::UtilityKind;

#[derive(Debug, Clone)]
pub(crate) struct Multipliers {
    pub links: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(net: &Network) -> Self {
        Self {
            links: vec![0.0; net.num_links()],
            thresholds: vec![0.0; net.num_routes()],
        }
    }
}

pub(crate) struct Outcome {
    pub point: Point,
    pub multipliers: Multipliers,
    pub projected_gradient: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub converged: bool,
}

struct Inner {
    iters: usize,
    projected_gradient: f64,
}

pub(crate) struct Solver<'a> {
    net: &'a Network,
    kind: UtilityKind,
    config: &'a SolverConfig,
    /// `s_r` per route.
    rate_scale: Vec<f64>,
    /// `k_l = S_l / d_l` per link, so that `w_l = 1 - k_l u_l`.
    werner_scale: Vec<f64>,
    /// `ln` of each route's Werner threshold.
    log_thresholds: Vec<Option<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(net: &'a Network, kind: UtilityKind, config: &'a SolverConfig) -> Self {
        let d = net.coefficients();
        let rate_scale: Vec<f64> = (0..net.num_routes())
            .map(|r| {
                net.route_links(r)
                    .iter()
                    .map(|&l| d[l] / net.link_routes(l).len() as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let werner_scale: Vec<f64> = (0..net.num_links())
            .map(|l| {
                let load: f64 = net.link_routes(l).iter().map(|&r| rate_scale[r]).sum();
                // unused links keep w itself as the variable
                if load > 0.0 {
                    load / d[l]
                } else {
                    1.0
                }
            })
            .collect();
        let eps = config.interior_eps;
        let mut lower: Vec<f64> = rate_scale.iter().map(|s| eps / s).collect();
        let mut upper = vec![f64::INFINITY; net.num_routes()];
        lower.extend(werner_scale.iter().map(|k| eps / k));
        upper.extend(werner_scale.iter().map(|k| (1.0 - eps) / k));
        Self {
            net,
            kind,
            config,
            rate_scale,
            werner_scale,
            log_thresholds: (0..net.num_routes())
                .map(|r| net.werner_threshold(r).map(f64::ln))
                .collect(),
            lower,
            upper,
        }
    }

    fn routes(&self) -> usize {
        self.net.num_routes()
    }

    fn to_z(&self, point: &Point) -> Vec<f64> {
        let rho = point.rates.iter().zip(&self.rate_scale).map(|(r, s)| r / s);
        let u = point.werner.iter().zip(&self.werner_scale).map(|(w, k)| (1.0 - w) / k);
        rho.chain(u).collect()
    }

    fn to_point(&self, z: &[f64]) -> Point {
        Point {
            rates: z[..self.routes()]
                .iter()
                .zip(&self.rate_scale)
                .map(|(p, s)| p * s)
                .collect(),
            werner: self.werner(z),
        }
    }

    fn werner(&self, z: &[f64]) -> Vec<f64> {
        z[self.routes()..]
            .iter()
            .zip(&self.werner_scale)
            .map(|(u, k)| 1.0 - k * u)
            .collect()
    }

    fn project(&self, z: &mut [f64]) {
        for ((v, lo), hi) in z.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// `-sum_r U_r`; `None` outside the utility domain.
    fn objective(&self, z: &[f64]) -> Option<f64> {
        let w = self.werner(z);
        let mut total = 0.0;
        for r in 0..self.routes() {
            let margin = self.kind.margin(self.net.e2e_werner(r, &w));
            if !(margin > 0.0 && z[r] > 0.0) {
                return None;
            }
            total -= (self.rate_scale[r] * z[r]).ln() + margin.ln();
        }
        Some(total)
    }

    fn objective_gradient(&self, z: &[f64], w: &[f64], grad: &mut [f64]) {
        let nr = self.routes();
        grad.iter_mut().for_each(|g| *g = 0.0);
        for r in 0..nr {
            grad[r] = -1.0 / z[r];
            let links = self.net.route_links(r);
            let w_e2e = self.net.e2e_werner(r, w);
            let outer = -self.kind.margin_derivative(w_e2e) / self.kind.margin(w_e2e);
            for (i, &l) in links.iter().enumerate() {
                let others: f64 = links
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &k)| w[k])
                    .product();
                grad[nr + l] -= self.werner_scale[l] * outer * others;
            }
        }
    }

    /// Coefficient of `rho_r` in link `l`'s scaled equality.
    fn coupling(&self, l: usize, r: usize) -> f64 {
        self.rate_scale[r] / (self.werner_scale[l] * self.net.coefficients()[l])
    }

    /// Scaled equality residuals `sum (s_r / S_l) rho_r - u_l`.
    fn equalities(&self, z: &[f64]) -> Vec<f64> {
        let nr = self.routes();
        (0..self.net.num_links())
            .map(|l| {
                let load: f64 = self
                    .net
                    .link_routes(l)
                    .iter()
                    .map(|&r| self.coupling(l, r) * z[r])
                    .sum();
                load - z[nr + l]
            })
            .collect()
    }

    /// Threshold constraints `ln w*_r - sum ln w_l <= 0`; zero when absent.
    fn inequalities(&self, w: &[f64]) -> Vec<f64> {
        self.log_thresholds
            .iter()
            .enumerate()
            .map(|(r, t)| match t {
                Some(t) => t - self.net.route_links(r).iter().map(|&l| w[l].ln()).sum::<f64>(),
                None => 0.0,
            })
            .collect()
    }

    fn augmented(&self, z: &[f64], mult: &Multipliers, mu: f64) -> Option<f64> {
        let mut value = self.objective(z)?;
        for (c, lambda) in self.equalities(z).iter().zip(&mult.links) {
            value += lambda * c + 0.5 * mu * c * c;
        }
        for (r, g) in self.inequalities(&self.werner(z)).iter().enumerate() {
            if self.log_thresholds[r].is_some() {
                let nu = mult.thresholds[r];
                let shifted = (nu + mu * g).max(0.0);
                value += (shifted * shifted - nu * nu) / (2.0 * mu);
            }
        }
        Some(value)
    }

    fn augmented_gradient(&self, z: &[f64], mult: &Multipliers, mu: f64, grad: &mut [f64]) {
        let nr = self.routes();
        let w = self.werner(z);
        self.objective_gradient(z, &w, grad);
        for (l, c) in self.equalities(z).iter().enumerate() {
            let weight = mult.links[l] + mu * c;
            for &r in self.net.link_routes(l) {
                grad[r] += weight * self.coupling(l, r);
            }
            grad[nr + l] -= weight;
        }
        for (r, g) in self.inequalities(&w).iter().enumerate() {
            if self.log_thresholds[r].is_some() {
                let weight = (mult.thresholds[r] + mu * g).max(0.0);
                for &l in self.net.route_links(r) {
                    grad[nr + l] += weight * self.werner_scale[l] / w[l];
                }
            }
        }
    }

    /// `L(next) - L(current)` assembled from per-term differences, so that it
    /// stays accurate when the change is far below the rounding error of `L`.
    /// `None` when `next` leaves the utility domain.
    fn augmented_change(
        &self,
        current: &[f64],
        next: &[f64],
        mult: &Multipliers,
        mu: f64,
    ) -> Option<f64> {
        let nr = self.routes();
        let w = self.werner(current);
        let dw: Vec<f64> = (0..self.net.num_links())
            .map(|l| -self.werner_scale[l] * (next[nr + l] - current[nr + l]))
            .collect();
        let mut change = 0.0;

        for r in 0..nr {
            if !(next[r] > 0.0) {
                return None;
            }
            change -= ((next[r] - current[r]) / current[r]).ln_1p();

            let links = self.net.route_links(r);
            let p = self.net.e2e_werner(r, &w);
            let dp = product_change(links, &w, &dw);
            let m = self.kind.margin(p);
            let dm = margin_change(self.kind, p, dp);
            if !(m + dm > 0.0 && self.kind.margin(p + dp) > 0.0) {
                return None;
            }
            change -= (dm / m).ln_1p();
        }

        for l in 0..self.net.num_links() {
            let (c, dc) = self.net.link_routes(l).iter().fold(
                (-current[nr + l], current[nr + l] - next[nr + l]),
                |(c, dc), &r| {
                    let a = self.coupling(l, r);
                    (c + a * current[r], dc + a * (next[r] - current[r]))
                },
            );
            change += dc * (mult.links[l] + 0.5 * mu * (2.0 * c + dc));
        }

        for (r, t) in self.log_thresholds.iter().enumerate() {
            let Some(t) = t else { continue };
            let links = self.net.route_links(r);
            let g = t - links.iter().map(|&l| w[l].ln()).sum::<f64>();
            let dg = -links.iter().map(|&l| (dw[l] / w[l]).ln_1p()).sum::<f64>();
            let nu = mult.thresholds[r];
            let a = (nu + mu * g).max(0.0);
            let a_next = (nu + mu * (g + dg)).max(0.0);
            let da = if a > 0.0 && a_next > 0.0 { mu * dg } else { a_next - a };
            change += da * (2.0 * a + da) / (2.0 * mu);
        }
        Some(change)
    }

    fn projected_gradient_norm(&self, z: &[f64], grad: &[f64]) -> f64 {
        z.iter()
            .zip(grad)
            .zip(self.lower.iter().zip(&self.upper))
            .map(|((v, g), (lo, hi))| (v - (v - g).clamp(*lo, *hi)).abs())
            .fold(0.0, f64::max)
    }

    /// Projected gradient descent with Armijo backtracking. Trial steps use
    /// the Barzilai-Borwein length of the previous accepted step.
    fn minimize(&self, z: &mut Vec<f64>, mult: &Multipliers, mu: f64) -> Inner {
        self.minimize_observed(z, mult, mu, |_| {})
    }

    /// [`Self::minimize`], calling `on_step` with every accepted iterate.
    fn minimize_observed(
        &self,
        z: &mut Vec<f64>,
        mult: &Multipliers,
        mu: f64,
        mut on_step: impl FnMut(&[f64]),
    ) -> Inner {
        let cfg = self.config;
        let n = z.len();
        debug_assert!(self.augmented(z, mult, mu).is_some(), "inner loop starts inside the domain");
        let mut grad = vec![0.0; n];
        self.augmented_gradient(z, mult, mu, &mut grad);
        let mut step = cfg.initial_step;
        let mut trial = vec![0.0; n];
        let mut trial_grad = vec![0.0; n];
        let mut iters = 0;

        loop {
            let pg = self.projected_gradient_norm(z, &grad);
            if pg <= cfg.grad_tol || iters >= cfg.max_inner_iters {
                return Inner {
                    iters,
                    projected_gradient: pg,
                };
            }
            iters += 1;

            let mut t = step;
            let accepted = loop {
                for i in 0..n {
                    trial[i] = z[i] - t * grad[i];
                }
                self.project(&mut trial);
                let decrease: f64 = (0..n).map(|i| grad[i] * (trial[i] - z[i])).sum();
                if let Some(change) = self.augmented_change(z, &trial, mult, mu) {
                    if change <= cfg.armijo_c * decrease {
                        break true;
                    }
                }
                t *= cfg.backtrack_factor;
                if t < 1e-30 || decrease == 0.0 {
                    break false;
                }
            };
            if !accepted {
                // no representable decrease along the projected path
                return Inner {
                    iters,
                    projected_gradient: pg,
                };
            }

            self.augmented_gradient(&trial, mult, mu, &mut trial_grad);
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..n {
                let s = trial[i] - z[i];
                ss += s * s;
                sy += s * (trial_grad[i] - grad[i]);
            }
            step = if sy > 0.0 {
                (ss / sy).clamp(1e-12, 1e12)
            } else {
                cfg.initial_step
            };
            std::mem::swap(z, &mut trial);
            std::mem::swap(&mut grad, &mut trial_grad);
            on_step(z);
        }
    }

    fn threshold_violation(&self, w: &[f64]) -> f64 {
        self.inequalities(w)
            .iter()
            .zip(&self.log_thresholds)
            .filter(|(_, t)| t.is_some())
            .fold(0.0f64, |m, (g, _)| m.max(*g))
    }

    /// Violation of the scaled constraints; drives penalty growth.
    fn scaled_infeasibility(&self, z: &[f64]) -> f64 {
        let eq = self.equalities(z).iter().fold(0.0f64, |m, c| m.max(c.abs()));
        eq.max(self.threshold_violation(&self.werner(z)))
    }

    /// Convergence measure: `max_l |residual_l| / d_l` and threshold violation.
    fn reported_infeasibility(&self, z: &[f64]) -> f64 {
        let point = self.to_point(z);
        self.net
            .max_normalized_residual(&point)
            .max(self.threshold_violation(&point.werner))
    }

    pub fn run(&self, start: Point, warm: Option<Multipliers>) -> Outcome {
        let cfg = self.config;
        let mut z = self.to_z(&start);
        self.project(&mut z);
        let mut mult = warm.unwrap_or_else(|| Multipliers::zeros(self.net));
        let mut mu = cfg.initial_penalty;
        let mut previous = self.scaled_infeasibility(&z);
        let mut inner_total = 0;
        let mut best: Option<(f64, Vec<f64>, Multipliers, f64)> = None;

        for outer in 1..=cfg.max_outer_iters {
            let inner = self.minimize(&mut z, &mult, mu);
            inner_total += inner.iters;
            let scaled = self.scaled_infeasibility(&z);
            let reported = self.reported_infeasibility(&z);

            let w = self.werner(&z);
            for (lambda, c) in mult.links.iter_mut().zip(self.equalities(&z)) {
                *lambda += mu * c;
            }
            for (r, g) in self.inequalities(&w).into_iter().enumerate() {
                if self.log_thresholds[r].is_some() {
                    mult.thresholds[r] = (mult.thresholds[r] + mu * g).max(0.0);
                }
            }

            if reported <= cfg.residual_tol && inner.projected_gradient <= cfg.grad_tol {
                return Outcome {
                    point: self.to_point(&z),
                    multipliers: mult,
                    projected_gradient: inner.projected_gradient,
                    outer_iters: outer,
                    inner_iters: inner_total,
                    converged: true,
                };
            }
            if best.as_ref().is_none_or(|b| reported <= b.0) {
                best = Some((reported, z.clone(), mult.clone(), inner.projected_gradient));
            }
            if reported > cfg.residual_tol && scaled > 0.25 * previous {
                mu *= cfg.penalty_growth;
            }
            previous = scaled;
        }

        let (_, z, multipliers, projected_gradient) = best.expect("at least one outer iteration");
        Outcome {
            point: self.to_point(&z),
            multipliers,
            projected_gradient,
            outer_iters: cfg.max_outer_iters,
            inner_iters: inner_total,
            converged: false,
        }
    }
}

/// `prod(w + dw) - prod(w)` over `links`, telescoped one factor at a time.
fn product_change(links: &[usize], w: &[f64], dw: &[f64]) -> f64 {
    let mut change = 0.0;
    for (i, &l) in links.iter().enumerate() {
        let before: f64 = links[..i].iter().map(|&k| w[k] + dw[k]).product();
        let after: f64 = links[i + 1..].iter().map(|&k| w[k]).product();
        change += dw[l] * before * after;
    }
    change
}

/// `a' ln a' - a ln a` for `a' = a + da`.
fn xlogx_change(a: f64, da: f64) -> f64 {
    let next = a + da;
    let tail = if a > 0.0 { a * (da / a).ln_1p() } else { 0.0 };
    let head = if next > 0.0 { da * next.ln() } else { 0.0 };
    head + tail
}

/// `m(p + dp) - m(p)` for the margin of `kind`.
fn margin_change(kind: UtilityKind, p: f64, dp: f64) -> f64 {
    use std::f64::consts::LN_2;
    match kind {
        UtilityKind::Ngtv => 3.0 * dp,
        UtilityKind::De => {
            let fidelity = (3.0 * p + 1.0) / 4.0;
            let df = 0.75 * dp;
            let rest = 1.0 - fidelity;
            (xlogx_change(fidelity, df) + xlogx_change(rest, -df) + 3f64.ln() * df) / LN_2
        }
        UtilityKind::Skf => {
            let q = (1.0 - p) / 2.0;
            let dq = -0.5 * dp;
            2.0 * (xlogx_change(q, dq) + xlogx_change(1.0 - q, -dq)) / LN_2
        }
    }
}
