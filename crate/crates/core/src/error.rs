use thiserror::Error;

/// Errors raised while building instances or running the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid bias profile: {0}")]
    InvalidBias(String),

    #[error("could not parse instance: {0}")]
    Parse(String),

    /// `g(p) = delta - mu` never changes sign on the searched price range.
    #[error("no sign change of delta - mu on price bracket [{lo}, {hi}]")]
    BracketNotFound { lo: f64, hi: f64 },

    /// A count PMF lost more than 1e-12 of its mass to rounding.
    #[error("count distribution mass {total} drifted from 1 by more than 1e-12")]
    NumericalDegradation { total: f64 },

    #[error("two-bias subproblem is infeasible on [0,1]^2")]
    Infeasible,
}

pub type Result<T> = std::result::Result<T, Error>;
