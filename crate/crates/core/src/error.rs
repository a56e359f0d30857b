use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error(
        "curvature at the mode is not negative definite: eigenvalue {eigenvalue:e} of -Hessian"
    )]
    DegenerateCurvature { eigenvalue: f64 },

    #[error(
        "mode search did not converge after {iterations} iterations (gradient norm {grad_norm:e})"
    )]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("non-finite value {value} at point index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("integrand does not provide {0}")]
    MissingDerivative(&'static str),

    #[error("denominator estimate {0:e} is not positive")]
    NonPositiveDenominator(f64),

    #[error("{path}: row {row}: {message}")]
    Load {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
