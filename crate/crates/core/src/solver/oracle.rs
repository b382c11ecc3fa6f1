use std::collections::HashMap;

use super::{report_for_point, SolveReport};
use crate::error::{Error, Result};
use crate::model::{LinkClass, Network, NetworkSpec, Point};
use crate::par::Execution;
use crate::utility::UtilityKind;

/// Hard cap on `resolution ^ classes`.
const MAX_GRID_POINTS: f64 = 1e9;

struct Layout {
    /// Class index of every link.
    class_of: Vec<usize>,
    /// Routes crossing one link of each class.
    load: Vec<f64>,
    /// `d` shared by the class.
    coefficient: Vec<f64>,
}

fn check_symmetry(spec: &NetworkSpec, net: &Network, classes: &[LinkClass]) -> Result<Layout> {
    let index: HashMap<&str, usize> = net
        .link_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut class_of = vec![usize::MAX; net.num_links()];
    for (k, class) in classes.iter().enumerate() {
        if class.links.is_empty() {
            return Err(Error::Asymmetric(format!("class `{}` is empty", class.name)));
        }
        for id in &class.links {
            let &l = index
                .get(id.as_str())
                .ok_or_else(|| Error::Asymmetric(format!("class `{}` names unknown link `{id}`", class.name)))?;
            if class_of[l] != usize::MAX {
                return Err(Error::Asymmetric(format!("link `{id}` is in more than one class")));
            }
            class_of[l] = k;
        }
    }
    if let Some(l) = class_of.iter().position(|&k| k == usize::MAX) {
        return Err(Error::Asymmetric(format!(
            "link `{}` belongs to no class",
            net.link_ids()[l]
        )));
    }

    let mut load = vec![0.0; classes.len()];
    let mut coefficient = vec![0.0; classes.len()];
    for (k, class) in classes.iter().enumerate() {
        let first = &spec.links[index[class.links[0].as_str()]];
        let first_load = net.link_routes(index[class.links[0].as_str()]).len();
        for id in &class.links {
            let link = &spec.links[index[id.as_str()]];
            let same_physics = link.length_km == first.length_km
                && link.repetition_time_s == first.repetition_time_s
                && link.inefficiency_c == first.inefficiency_c;
            if !same_physics {
                return Err(Error::Asymmetric(format!(
                    "links `{}` and `{id}` in class `{}` differ physically",
                    first.id, class.name
                )));
            }
            if net.link_routes(index[id.as_str()]).len() != first_load {
                return Err(Error::Asymmetric(format!(
                    "links in class `{}` carry different numbers of routes",
                    class.name
                )));
            }
        }
        load[k] = first_load as f64;
        coefficient[k] = net.coefficients()[index[class.links[0].as_str()]];
    }

    let signature = |r: usize| {
        let mut s: Vec<usize> = net.route_links(r).iter().map(|&l| class_of[l]).collect();
        s.sort_unstable();
        s
    };
    let reference = signature(0);
    if (1..net.num_routes()).any(|r| signature(r) != reference) {
        return Err(Error::Asymmetric(
            "routes cross different combinations of link classes".into(),
        ));
    }
    if net.has_thresholds() {
        return Err(Error::Asymmetric(
            "fidelity thresholds are not supported by the grid search".into(),
        ));
    }
    Ok(Layout {
        class_of,
        load,
        coefficient,
    })
}

/// Brute-force search over one Werner parameter per symmetry class.
///
/// Each class value is swept over `k / resolution` for `k = 1..=resolution`
/// (the last point clamped to `1 - eps`). Every route then receives the
/// smallest equal share of its links' generation rates, and each link's
/// Werner parameter is raised until its generation rate matches its load
/// exactly, so every evaluated point satisfies the rate-balance equalities.
/// Grids are nested under doubling of `resolution`.
pub fn grid_search_oracle(
    spec: &NetworkSpec,
    kind: UtilityKind,
    classes: &[LinkClass],
    resolution: usize,
    execution: Execution,
) -> Result<SolveReport> {
    let eps = super::SolverConfig::default().interior_eps;
    if resolution == 0 {
        return Err(Error::Config("grid resolution must be positive".into()));
    }
    let net = Network::compile(spec)?;
    let layout = check_symmetry(spec, &net, classes)?;
    let dims = classes.len();
    if (resolution as f64).powi(dims as i32) > MAX_GRID_POINTS {
        return Err(Error::Config(format!(
            "{resolution}^{dims} grid points exceed the search budget"
        )));
    }
    let grid: Vec<f64> = (1..=resolution)
        .map(|k| (k as f64 / resolution as f64).min(1.0 - eps))
        .collect();

    // Per-class Werner parameter -> best objective; split along the first axis.
    let rest = resolution.pow(dims as u32 - 1);
    let rows = execution.map_range(resolution, |first| {
        let mut best: Option<(f64, usize)> = None;
        let mut values = vec![0.0; dims];
        let mut point = Point {
            rates: vec![0.0; net.num_routes()],
            werner: vec![0.0; net.num_links()],
        };
        for tail in 0..rest {
            let flat = first * rest + tail;
            decode(flat, resolution, &grid, &mut values);
            if let Some(obj) = evaluate(&net, kind, &layout, &values, &mut point) {
                if best.map_or(true, |(b, _)| obj < b) {
                    best = Some((obj, flat));
                }
            }
        }
        best
    });

    let (_, flat) = rows
        .into_iter()
        .flatten()
        .fold(None::<(f64, usize)>, |acc, cand| match acc {
            Some(a) if a.0 <= cand.0 => Some(a),
            _ => Some(cand),
        })
        .ok_or_else(|| Error::InfeasibleStart("no grid point lies inside the utility domain".into()))?;

    let mut values = vec![0.0; dims];
    decode(flat, resolution, &grid, &mut values);
    let mut point = Point {
        rates: vec![0.0; net.num_routes()],
        werner: vec![0.0; net.num_links()],
    };
    evaluate(&net, kind, &layout, &values, &mut point).expect("best point was feasible");
    report_for_point(&net, kind, &point, true)
}

fn decode(mut flat: usize, resolution: usize, grid: &[f64], values: &mut [f64]) {
    for v in values.iter_mut().rev() {
        *v = grid[flat % resolution];
        flat /= resolution;
    }
}

fn evaluate(
    net: &Network,
    kind: UtilityKind,
    layout: &Layout,
    values: &[f64],
    point: &mut Point,
) -> Option<f64> {
    // all routes are symmetric, so they share one rate
    let rate = net
        .route_links(0)
        .iter()
        .map(|&l| {
            let k = layout.class_of[l];
            layout.coefficient[k] * (1.0 - values[k]) / layout.load[k]
        })
        .fold(f64::INFINITY, f64::min);
    if !(rate > 0.0) {
        return None;
    }
    point.rates.iter_mut().for_each(|r| *r = rate);
    for l in 0..net.num_links() {
        let k = layout.class_of[l];
        point.werner[l] = 1.0 - layout.load[k] * rate / layout.coefficient[k];
    }
    crate::utility::negated_utility(net, kind, point).ok()
}
