use thiserror::Error;

/// Errors produced by the density engine, quadrature, simulator and drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension m={0}: analytic densities exist only for m in {{1,2,3,4,6}}")]
    UnsupportedDimension(usize),

    #[error("asymptotic density in R^3 needs a <= {limit} (got a={a})")]
    AsymptoticValidity { a: f64, limit: f64 },

    #[error(
        "quadrature did not converge: best estimate {estimate}, error estimate {abs_error:e} exceeds tolerance {tol:e}"
    )]
    NonConvergence { estimate: f64, abs_error: f64, tol: f64 },

    #[error("underpowered test: {got} non-singular samples, at least {need} required")]
    Underpowered { got: usize, need: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
