use thiserror::Error;

use crate::utility::DomainMargin;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument fell outside the interval an operation is defined on.
    #[error("{quantity} = {value} is outside its domain {domain}")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// A route left the domain of the utility (non-positive margin or rate).
    #[error(
        "{} is outside the utility domain (margin {}, rate positive: {})",
        route.as_ref().map_or("point".to_string(), |r| format!("route `{r}`")),
        margin.margin,
        margin.rate_positive
    )]
    RouteDomain {
        route: Option<String>,
        margin: DomainMargin,
    },

    /// A solution vector and a network disagree on their identifiers.
    #[error("inconsistent solution: {0}")]
    Consistency(String),

    /// The network description itself is malformed.
    #[error("invalid network: {0}")]
    Validation(String),

    #[error("no strictly feasible starting point: {0}")]
    InfeasibleStart(String),

    /// The grid-search oracle was asked to exploit a symmetry the network does not have.
    #[error("symmetry precondition violated: {0}")]
    Asymmetric(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),
}
