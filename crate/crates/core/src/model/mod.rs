//! Physical layer of the single-photon entanglement generation scheme and the
//! network description the optimizer works on.

mod network;
mod topology;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use network::{Network, Point};
pub use topology::{build_topology, link_classes, LinkClass, TopologyKind};

/// Fiber attenuation coefficient in dB/km.
pub const ATTENUATION_DB_PER_KM: f64 = 0.2;

/// Physical description of one elementary link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub length_km: f64,
    /// Time between generation attempts, in seconds.
    #[serde(rename = "T_s")]
    pub repetition_time_s: f64,
    /// Multiplicative inefficiency applied to the success probability.
    #[serde(rename = "c")]
    pub inefficiency_c: f64,
}

impl Link {
    pub fn new(
        id: impl Into<String>,
        length_km: f64,
        repetition_time_s: f64,
        inefficiency_c: f64,
    ) -> Result<Self> {
        let link = Self {
            id: id.into(),
            length_km,
            repetition_time_s,
            inefficiency_c,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0 && self.length_km.is_finite()) {
            return Err(Error::Validation(format!(
                "link `{}`: length_km = {} must be a finite nonnegative number",
                self.id, self.length_km
            )));
        }
        if !(self.repetition_time_s > 0.0 && self.repetition_time_s.is_finite()) {
            return Err(Error::Validation(format!(
                "link `{}`: T_s = {} must be positive",
                self.id, self.repetition_time_s
            )));
        }
        if !(self.inefficiency_c > 0.0 && self.inefficiency_c <= 1.0) {
            return Err(Error::Validation(format!(
                "link `{}`: c = {} must lie in (0, 1]",
                self.id, self.inefficiency_c
            )));
        }
        Ok(())
    }
}

/// A communication session: the ordered links of the path joining two users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub id: String,
    pub links: Vec<String>,
}

impl Route {
    pub fn new<I, S>(id: impl Into<String>, links: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            links: links.into_iter().map(Into::into).collect(),
        }
    }
}

/// Links, routes and optional per-route end-to-end fidelity thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub links: Vec<Link>,
    pub routes: Vec<Route>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_thresholds: Option<BTreeMap<String, f64>>,
}

/// Non-fatal findings about a network or a solution.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationWarning {
    /// The link is not used by any route.
    UnusedLink(String),
    /// The Werner parameter assigned to this link implies a per-attempt
    /// success probability above one.
    SuccessProbabilityAboveOne { link: String, probability: f64 },
}

impl std::fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::UnusedLink(id) => write!(f, "link `{id}` is not used by any route"),
            Self::SuccessProbabilityAboveOne { link, probability } => write!(
                f,
                "link `{link}`: success probability {probability} exceeds 1 at the given Werner parameter"
            ),
        }
    }
}

impl NetworkSpec {
    pub fn new(links: Vec<Link>, routes: Vec<Route>) -> Self {
        Self {
            links,
            routes,
            fidelity_thresholds: None,
        }
    }

    pub fn with_thresholds(mut self, thresholds: BTreeMap<String, f64>) -> Self {
        self.fidelity_thresholds = Some(thresholds);
        self
    }

    pub fn link(&self, id: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.id == id)
    }

    pub fn route(&self, id: &str) -> Option<&Route> {
        self.routes.iter().find(|r| r.id == id)
    }

    /// Checks every structural invariant. Hard violations are errors; unused
    /// links come back as warnings.
    pub fn validate(&self) -> Result<Vec<ValidationWarning>> {
        let mut link_ids = BTreeSet::new();
        for link in &self.links {
            link.validate()?;
            if !link_ids.insert(link.id.as_str()) {
                return Err(Error::Validation(format!("duplicate link id `{}`", link.id)));
            }
        }
        if self.routes.is_empty() {
            return Err(Error::Validation("network has no routes".into()));
        }

        let mut route_ids = BTreeSet::new();
        let mut used = BTreeSet::new();
        for route in &self.routes {
            if !route_ids.insert(route.id.as_str()) {
                return Err(Error::Validation(format!("duplicate route id `{}`", route.id)));
            }
            if route.links.is_empty() {
                return Err(Error::Validation(format!("route `{}` has no links", route.id)));
            }
            let mut seen = BTreeSet::new();
            for link in &route.links {
                if !link_ids.contains(link.as_str()) {
                    return Err(Error::Validation(format!(
                        "route `{}` references unknown link `{link}`",
                        route.id
                    )));
                }
                if !seen.insert(link.as_str()) {
                    return Err(Error::Validation(format!(
                        "route `{}` uses link `{link}` more than once",
                        route.id
                    )));
                }
                used.insert(link.as_str());
            }
        }

        if let Some(thresholds) = &self.fidelity_thresholds {
            for (route, &fidelity) in thresholds {
                if !route_ids.contains(route.as_str()) {
                    return Err(Error::Validation(format!(
                        "fidelity threshold given for unknown route `{route}`"
                    )));
                }
                if !(0.5..=1.0).contains(&fidelity) {
                    return Err(Error::Validation(format!(
                        "fidelity threshold {fidelity} for route `{route}` must lie in [1/2, 1]"
                    )));
                }
            }
        }

        Ok(self
            .links
            .iter()
            .filter(|l| !used.contains(l.id.as_str()))
            .map(|l| ValidationWarning::UnusedLink(l.id.clone()))
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network specs always serialize")
    }

    /// Parses and validates a JSON network description. Parse failures carry
    /// serde's line/column diagnostics.
    pub fn from_json(text: &str) -> Result<(Self, Vec<ValidationWarning>)> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("malformed network JSON: {e}")))?;
        let warnings = spec.validate()?;
        Ok((spec, warnings))
    }
}

/// Decision variables: one rate per route, one Werner parameter per link.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolutionVector {
    pub rates: BTreeMap<String, f64>,
    pub werner: BTreeMap<String, f64>,
}

fn check_unit_interval(quantity: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity,
            value,
            domain: "[0, 1]",
        })
    }
}

/// Photon survival probability over `length_km` of fiber.
pub fn transmissivity(length_km: f64) -> Result<f64> {
    if !(length_km >= 0.0) {
        return Err(Error::Domain {
            quantity: "length_km",
            value: length_km,
            domain: "[0, inf)",
        });
    }
    Ok(10f64.powf(-0.1 * ATTENUATION_DB_PER_KM * length_km))
}

/// `d = 3 c eta / (2 T)`, in Hz. The link's generation rate is `d (1 - w)`.
pub fn rate_coefficient(link: &Link) -> f64 {
    let eta = transmissivity(link.length_km).unwrap_or(0.0);
    3.0 * link.inefficiency_c * eta / (2.0 * link.repetition_time_s)
}

pub fn link_generation_rate(link: &Link, w: f64) -> Result<f64> {
    check_unit_interval("werner parameter", w)?;
    Ok(rate_coefficient(link) * (1.0 - w))
}

pub fn werner_to_fidelity(w: f64) -> Result<f64> {
    check_unit_interval("werner parameter", w)?;
    Ok((3.0 * w + 1.0) / 4.0)
}

pub fn fidelity_to_werner(fidelity: f64) -> Result<f64> {
    if !(0.25..=1.0).contains(&fidelity) {
        return Err(Error::Domain {
            quantity: "fidelity",
            value: fidelity,
            domain: "[1/4, 1]",
        });
    }
    Ok((4.0 * fidelity - 1.0) / 3.0)
}

/// Bright-state population `alpha = 1 - F(w)`.
pub fn bright_state_population(w: f64) -> Result<f64> {
    check_unit_interval("werner parameter", w)?;
    Ok(0.75 * (1.0 - w))
}

/// Per-attempt success probability `2 c eta alpha`, inefficiency included.
pub fn success_probability(link: &Link, w: f64) -> Result<f64> {
    let alpha = bright_state_population(w)?;
    Ok(2.0 * link.inefficiency_c * transmissivity(link.length_km)? * alpha)
}

/// Werner parameter after swapping along the whole route.
pub fn e2e_werner(route: &Route, solution: &SolutionVector) -> Result<f64> {
    route.links.iter().try_fold(1.0, |acc, id| {
        solution
            .werner
            .get(id)
            .map(|w| acc * w)
            .ok_or_else(|| {
                Error::Consistency(format!(
                    "route `{}` uses link `{id}` which has no Werner parameter",
                    route.id
                ))
            })
    })
}

/// Flags links whose assigned Werner parameter would need a success
/// probability above one.
pub fn success_probability_warnings(
    spec: &NetworkSpec,
    solution: &SolutionVector,
) -> Vec<ValidationWarning> {
    spec.links
        .iter()
        .filter_map(|link| {
            let w = *solution.werner.get(&link.id)?;
            let p = success_probability(link, w).ok()?;
            (p > 1.0).then(|| ValidationWarning::SuccessProbabilityAboveOne {
                link: link.id.clone(),
                probability: p,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn transmissivity_values() {
        assert_eq!(transmissivity(0.0).unwrap(), 1.0);
        assert!(close(transmissivity(100.0).unwrap(), 0.01, 1e-15));
        assert!(close(transmissivity(15.0).unwrap(), 0.50119, 5e-6));
        assert!(transmissivity(-1.0).is_err());
        assert!(transmissivity(f64::NAN).is_err());
    }

    #[test]
    fn rate_coefficient_values() {
        let bb = Link::new("bb", 100.0, 1e-4, 0.1).unwrap();
        assert!(close(rate_coefficient(&bb), 15.0, 1e-10));
        let metro = Link::new("m", 15.0, 1e-3, 0.1).unwrap();
        assert!(close(rate_coefficient(&metro), 75.178, 5e-4));
        let unit = Link::new("u", 0.0, 1.0, 1.0).unwrap();
        assert_eq!(rate_coefficient(&unit), 1.5);
    }

    #[test]
    fn generation_rate_values() {
        let bb = Link::new("bb", 100.0, 1e-4, 0.1).unwrap();
        assert_eq!(link_generation_rate(&bb, 1.0).unwrap(), 0.0);
        assert!(close(link_generation_rate(&bb, 0.8).unwrap(), 3.0, 1e-12));
        let metro = Link::new("m", 15.0, 1e-3, 0.1).unwrap();
        assert!(close(link_generation_rate(&metro, 0.9).unwrap(), 7.5178, 5e-5));
        assert!(link_generation_rate(&bb, 1.01).is_err());
        assert!(link_generation_rate(&bb, -0.01).is_err());
    }

    #[test]
    fn fidelity_conversions() {
        assert_eq!(werner_to_fidelity(1.0).unwrap(), 1.0);
        assert!(close(werner_to_fidelity(1.0 / 3.0).unwrap(), 0.5, 1e-15));
        assert!(close(werner_to_fidelity(0.97).unwrap(), 0.9775, 1e-15));
        assert_eq!(fidelity_to_werner(1.0).unwrap(), 1.0);
        assert!(close(fidelity_to_werner(0.5).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(close(fidelity_to_werner(0.81).unwrap(), 0.74667, 5e-6));
        assert!(werner_to_fidelity(1.5).is_err());
        assert!(fidelity_to_werner(0.2).is_err());
    }

    #[test]
    fn bright_state_population_values() {
        assert_eq!(bright_state_population(1.0).unwrap(), 0.0);
        assert_eq!(bright_state_population(0.0).unwrap(), 0.75);
        assert!(close(bright_state_population(0.9).unwrap(), 0.075, 1e-15));
        assert!(bright_state_population(-0.1).is_err());
    }

    #[test]
    fn e2e_werner_products() {
        let route = Route::new("r", ["a", "b", "c"]);
        let mut s = SolutionVector::default();
        for id in ["a", "b", "c"] {
            s.werner.insert(id.into(), 1.0);
        }
        assert_eq!(e2e_werner(&route, &s).unwrap(), 1.0);
        for id in ["a", "b", "c"] {
            s.werner.insert(id.into(), 0.95);
        }
        assert!(close(e2e_werner(&route, &s).unwrap(), 0.857375, 1e-15));

        let short = Route::new("r", ["a", "b"]);
        s.werner.insert("a".into(), 0.9);
        s.werner.insert("b".into(), 0.8);
        assert!(close(e2e_werner(&short, &s).unwrap(), 0.72, 1e-15));

        s.werner.remove("c");
        assert!(matches!(e2e_werner(&route, &s), Err(Error::Consistency(_))));
    }

    #[test]
    fn link_invariants() {
        assert!(Link::new("x", -1.0, 1.0, 0.5).is_err());
        assert!(Link::new("x", 1.0, 0.0, 0.5).is_err());
        assert!(Link::new("x", 1.0, 1.0, 0.0).is_err());
        assert!(Link::new("x", 1.0, 1.0, 1.1).is_err());
        assert!(Link::new("x", 0.0, 1.0, 1.0).is_ok());
    }

    fn two_link_chain() -> NetworkSpec {
        NetworkSpec::new(
            vec![
                Link::new("a", 10.0, 1e-3, 0.5).unwrap(),
                Link::new("b", 20.0, 1e-3, 0.5).unwrap(),
            ],
            vec![Route::new("r", ["a", "b"])],
        )
    }

    #[test]
    fn validation_errors_and_warnings() {
        let mut spec = two_link_chain();
        assert!(spec.validate().unwrap().is_empty());

        spec.links.push(Link::new("spare", 1.0, 1e-3, 0.5).unwrap());
        assert_eq!(
            spec.validate().unwrap(),
            vec![ValidationWarning::UnusedLink("spare".into())]
        );

        let mut bad = two_link_chain();
        bad.routes[0].links.push("zzz".into());
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("zzz"), "{err}");

        let mut dup = two_link_chain();
        dup.routes[0].links.push("a".into());
        assert!(dup.validate().is_err());

        let thresholds = BTreeMap::from([("nope".to_string(), 0.9)]);
        assert!(two_link_chain().with_thresholds(thresholds).validate().is_err());
        let thresholds = BTreeMap::from([("r".to_string(), 0.4)]);
        assert!(two_link_chain().with_thresholds(thresholds).validate().is_err());
    }

    #[test]
    fn json_field_names() {
        let spec = two_link_chain().with_thresholds(BTreeMap::from([("r".to_string(), 0.8)]));
        let value: serde_json::Value = serde_json::from_str(&spec.to_json()).unwrap();
        let link = &value["links"][0];
        for key in ["id", "length_km", "T_s", "c"] {
            assert!(link.get(key).is_some(), "missing {key}");
        }
        assert_eq!(value["routes"][0]["links"][1], "b");
        assert_eq!(value["fidelity_thresholds"]["r"], 0.8);

        let bare: serde_json::Value = serde_json::from_str(&two_link_chain().to_json()).unwrap();
        assert!(bare.get("fidelity_thresholds").is_none());
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = NetworkSpec::from_json("{\n  \"links\": [\n  {\"id\": 3}\n]}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn success_probability_warning() {
        let spec = NetworkSpec::new(
            vec![Link::new("a", 0.0, 1.0, 1.0).unwrap()],
            vec![Route::new("r", ["a"])],
        );
        let mut s = SolutionVector::default();
        s.werner.insert("a".into(), 0.0);
        assert_eq!(success_probability_warnings(&spec, &s).len(), 1);
        s.werner.insert("a".into(), 0.9);
        assert!(success_probability_warnings(&spec, &s).is_empty());
    }
}
