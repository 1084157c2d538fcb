use thiserror::Error;

/// Errors raised by the outage library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// A channel or power description violates its invariants.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// `|rho| >= 1`: the correlated channel collapses to a quasi-static one.
    #[error("degenerate correlation: |rho| = {rho} must be < 1")]
    DegenerateCorrelation { rho: f64 },

    /// An iterative or quadrature procedure stopped before reaching its tolerance.
    #[error("{what} did not converge (residual {residual:e})")]
    Convergence { what: &'static str, residual: f64 },

    /// The log-domain grid cannot represent the requested evaluation.
    #[error("grid too small: {0}")]
    GridTooSmall(String),

    /// A table or enumeration would exceed its configured size cap.
    #[error("resource limit: {count} entries requested, cap is {cap}")]
    Resource { count: u128, cap: u128 },

    /// No design satisfies the requested target.
    #[error("infeasible target: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
