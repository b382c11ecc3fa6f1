//! Builders for the four benchmark topologies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Link, NetworkSpec, Route};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    /// Two 2 km access links feeding one shared link of variable length.
    ThreeLink,
    /// `n` 15 km user links behind a 100 km bottleneck to a server.
    ClientsServer,
    /// Three links in series; the middle one has variable length.
    Line,
    /// Two metro areas of `n/2` users joined by a 100 km backbone.
    Dumbbell,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [
        TopologyKind::ThreeLink,
        TopologyKind::ClientsServer,
        TopologyKind::Line,
        TopologyKind::Dumbbell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ThreeLink => "three-link",
            Self::ClientsServer => "clients-server",
            Self::Line => "line",
            Self::Dumbbell => "dumbbell",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").to_ascii_lowercase().as_str() {
            "three-link" => Ok(Self::ThreeLink),
            "clients-server" => Ok(Self::ClientsServer),
            "line" => Ok(Self::Line),
            "dumbbell" => Ok(Self::Dumbbell),
            other => Err(Error::Validation(format!("unknown topology `{other}`"))),
        }
    }
}

/// A set of links that are physically identical and play the same role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkClass {
    pub name: String,
    pub links: Vec<String>,
}

impl LinkClass {
    fn new(name: &str, links: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            links,
        }
    }
}

const METRO_KM: f64 = 15.0;
const BACKBONE_KM: f64 = 100.0;
const SLOW_T: f64 = 1e-3;
const FAST_T: f64 = 1e-4;
const LOSSY_C: f64 = 0.1;

fn positive(parameter: f64, what: &'static str) -> Result<f64> {
    if parameter > 0.0 && parameter.is_finite() {
        Ok(parameter)
    } else {
        Err(Error::Domain {
            quantity: what,
            value: parameter,
            domain: "(0, inf)",
        })
    }
}

fn user_count(parameter: f64, even: bool) -> Result<usize> {
    let valid = parameter >= 1.0
        && parameter.fract() == 0.0
        && parameter <= 1e6
        && (!even || parameter % 2.0 == 0.0);
    if valid {
        Ok(parameter as usize)
    } else {
        Err(Error::Domain {
            quantity: "user count",
            value: parameter,
            domain: if even { "even integers >= 2" } else { "integers >= 1" },
        })
    }
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Builds one of the benchmark networks.
///
/// `parameter` is the length of link 3 (three-link), the user count
/// (clients-server), the middle-link length (line) or the total user count,
/// which must be even (dumbbell).
pub fn build_topology(kind: TopologyKind, parameter: f64) -> Result<NetworkSpec> {
    match kind {
        TopologyKind::ThreeLink => {
            let l3 = positive(parameter, "link 3 length")?;
            Ok(NetworkSpec::new(
                vec![
                    Link::new("l1", 2.0, SLOW_T, 1.0)?,
                    Link::new("l2", 2.0, SLOW_T, 1.0)?,
                    Link::new("l3", l3, SLOW_T, 1.0)?,
                ],
                vec![Route::new("r1", ["l1", "l3"]), Route::new("r2", ["l2", "l3"])],
            ))
        }
        TopologyKind::ClientsServer => {
            let n = user_count(parameter, false)?;
            let mut links = ids("u", n)
                .into_iter()
                .map(|id| Link::new(id, METRO_KM, SLOW_T, LOSSY_C))
                .collect::<Result<Vec<_>>>()?;
            links.push(Link::new("bb", BACKBONE_KM, FAST_T, LOSSY_C)?);
            let routes = (1..=n)
                .map(|i| Route::new(format!("r{i}"), [format!("u{i}"), "bb".to_string()]))
                .collect();
            Ok(NetworkSpec::new(links, routes))
        }
        TopologyKind::Line => {
            let middle = positive(parameter, "middle link length")?;
            Ok(NetworkSpec::new(
                vec![
                    Link::new("l1", METRO_KM, SLOW_T, LOSSY_C)?,
                    Link::new("l2", middle, FAST_T, LOSSY_C)?,
                    Link::new("l3", METRO_KM, SLOW_T, LOSSY_C)?,
                ],
                vec![Route::new("r1", ["l1", "l2", "l3"])],
            ))
        }
        TopologyKind::Dumbbell => {
            let pairs = user_count(parameter, true)? / 2;
            let mut links = Vec::with_capacity(2 * pairs + 1);
            for id in ids("a", pairs).into_iter().chain(ids("b", pairs)) {
                links.push(Link::new(id, METRO_KM, SLOW_T, LOSSY_C)?);
            }
            links.push(Link::new("bb", BACKBONE_KM, FAST_T, LOSSY_C)?);
            // user i on the left talks to user i on the right
            let routes = (1..=pairs)
                .map(|i| {
                    Route::new(
                        format!("r{i}"),
                        [format!("a{i}"), "bb".to_string(), format!("b{i}")],
                    )
                })
                .collect();
            Ok(NetworkSpec::new(links, routes))
        }
    }
}

/// Symmetry classes of a built topology, used for grid search and for
/// collapsing per-link columns in sweep output.
pub fn link_classes(kind: TopologyKind, parameter: f64) -> Result<Vec<LinkClass>> {
    Ok(match kind {
        TopologyKind::ThreeLink => {
            positive(parameter, "link 3 length")?;
            vec![
                LinkClass::new("access", vec!["l1".into(), "l2".into()]),
                LinkClass::new("shared", vec!["l3".into()]),
            ]
        }
        TopologyKind::ClientsServer => {
            let n = user_count(parameter, false)?;
            vec![
                LinkClass::new("metro", ids("u", n)),
                LinkClass::new("backbone", vec!["bb".into()]),
            ]
        }
        TopologyKind::Line => {
            positive(parameter, "middle link length")?;
            vec![
                LinkClass::new("outer", vec!["l1".into(), "l3".into()]),
                LinkClass::new("middle", vec!["l2".into()]),
            ]
        }
        TopologyKind::Dumbbell => {
            let pairs = user_count(parameter, true)? / 2;
            let mut metro = ids("a", pairs);
            metro.extend(ids("b", pairs));
            vec![
                LinkClass::new("metro", metro),
                LinkClass::new("backbone", vec!["bb".into()]),
            ]
        }
    })
}
