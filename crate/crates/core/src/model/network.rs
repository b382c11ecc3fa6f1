use std::collections::{BTreeMap, HashMap};

use super::{fidelity_to_werner, rate_coefficient, NetworkSpec, SolutionVector};
use crate::error::{Error, Result};

/// Index-based view of a validated [`NetworkSpec`], used on hot paths.
///
/// Links and routes keep the order in which the spec lists them.
#[derive(Debug, Clone)]
pub struct Network {
    link_ids: Vec<String>,
    route_ids: Vec<String>,
    coefficients: Vec<f64>,
    routes: Vec<Vec<usize>>,
    link_routes: Vec<Vec<usize>>,
    werner_thresholds: Vec<Option<f64>>,
}

/// Dense decision vector aligned with a [`Network`]'s index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub rates: Vec<f64>,
    pub werner: Vec<f64>,
}

impl Network {
    pub fn compile(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let index: HashMap<&str, usize> = spec
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.as_str(), i))
            .collect();
        let routes: Vec<Vec<usize>> = spec
            .routes
            .iter()
            .map(|r| r.links.iter().map(|id| index[id.as_str()]).collect())
            .collect();
        let mut link_routes = vec![Vec::new(); spec.links.len()];
        for (r, links) in routes.iter().enumerate() {
            for &l in links {
                link_routes[l].push(r);
            }
        }
        let werner_thresholds = spec
            .routes
            .iter()
            .map(|r| {
                spec.fidelity_thresholds
                    .as_ref()
                    .and_then(|t| t.get(&r.id))
                    .map(|&f| fidelity_to_werner(f))
                    .transpose()
            })
            .collect::<Result<_>>()?;

        Ok(Self {
            link_ids: spec.links.iter().map(|l| l.id.clone()).collect(),
            route_ids: spec.routes.iter().map(|r| r.id.clone()).collect(),
            coefficients: spec.links.iter().map(rate_coefficient).collect(),
            routes,
            link_routes,
            werner_thresholds,
        })
    }

    pub fn num_links(&self) -> usize {
        self.link_ids.len()
    }

    pub fn num_routes(&self) -> usize {
        self.route_ids.len()
    }

    pub fn link_ids(&self) -> &[String] {
        &self.link_ids
    }

    pub fn route_ids(&self) -> &[String] {
        &self.route_ids
    }

    /// Rate coefficient `d_l` of every link.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Link indices of route `r`, in path order.
    pub fn route_links(&self, r: usize) -> &[usize] {
        &self.routes[r]
    }

    /// Indices of the routes crossing link `l`.
    pub fn link_routes(&self, l: usize) -> &[usize] {
        &self.link_routes[l]
    }

    /// End-to-end Werner threshold of route `r`, if one was requested.
    pub fn werner_threshold(&self, r: usize) -> Option<f64> {
        self.werner_thresholds[r]
    }

    pub fn has_thresholds(&self) -> bool {
        self.werner_thresholds.iter().any(Option::is_some)
    }

    pub fn max_hops(&self) -> usize {
        self.routes.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn e2e_werner(&self, r: usize, werner: &[f64]) -> f64 {
        self.routes[r].iter().map(|&l| werner[l]).product()
    }

    /// `sum_{r in l} R_r - d_l (1 - w_l)` for every link.
    pub fn residuals(&self, point: &Point) -> Vec<f64> {
        (0..self.num_links())
            .map(|l| {
                let load: f64 = self.link_routes[l].iter().map(|&r| point.rates[r]).sum();
                load - self.coefficients[l] * (1.0 - point.werner[l])
            })
            .collect()
    }

    /// Largest residual magnitude after dividing each by its link's `d_l`.
    pub fn max_normalized_residual(&self, point: &Point) -> f64 {
        self.residuals(point)
            .iter()
            .zip(&self.coefficients)
            .map(|(res, d)| (res / d).abs())
            .fold(0.0, f64::max)
    }

    pub fn point_from(&self, solution: &SolutionVector) -> Result<Point> {
        fn gather(ids: &[String], map: &BTreeMap<String, f64>, what: &str) -> Result<Vec<f64>> {
            if map.len() != ids.len() {
                let extra: Vec<_> = map
                    .keys()
                    .filter(|k| !ids.contains(k))
                    .map(String::as_str)
                    .collect();
                return Err(Error::Consistency(format!(
                    "expected {} {what} entries, found {} (unknown ids: {extra:?})",
                    ids.len(),
                    map.len()
                )));
            }
            ids.iter()
                .map(|id| {
                    map.get(id)
                        .copied()
                        .ok_or_else(|| Error::Consistency(format!("missing {what} entry for `{id}`")))
                })
                .collect()
        }
        Ok(Point {
            rates: gather(&self.route_ids, &solution.rates, "rate")?,
            werner: gather(&self.link_ids, &solution.werner, "werner")?,
        })
    }

    pub fn solution_from(&self, point: &Point) -> SolutionVector {
        SolutionVector {
            rates: self.route_ids.iter().cloned().zip(point.rates.iter().copied()).collect(),
            werner: self.link_ids.iter().cloned().zip(point.werner.iter().copied()).collect(),
        }
    }

    pub fn route_map<T>(&self, values: impl IntoIterator<Item = T>) -> BTreeMap<String, T> {
        self.route_ids.iter().cloned().zip(values).collect()
    }

    pub fn link_map<T>(&self, values: impl IntoIterator<Item = T>) -> BTreeMap<String, T> {
        self.link_ids.iter().cloned().zip(values).collect()
    }
}
