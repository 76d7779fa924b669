use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// bad input (2), an infeasible or undefined computation (3), and internal
/// numeric failure (4). See [`Error::kind`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("restriction time {tau} exceeds the largest admissible value {bound}")]
    Restriction { tau: f64, bound: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracketing {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("{routine} did not converge within {max_iter} iterations")]
    Convergence { routine: &'static str, max_iter: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("effect size is zero or null; sample size is undefined ({0})")]
    UndefinedEffect(String),

    #[error("censoring target {target:.4} is below the administrative-censoring floor {floor:.4}")]
    InfeasibleTarget { target: f64, floor: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

/// Coarse classification of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Infeasible,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_) | Error::Input(_) | Error::Unsupported(_) => ErrorKind::Input,
            Error::Restriction { .. }
            | Error::UndefinedEffect(_)
            | Error::InfeasibleTarget { .. }
            | Error::Degenerate(_) => ErrorKind::Infeasible,
            Error::Bracketing { .. } | Error::Convergence { .. } | Error::NonFinite(_) => {
                ErrorKind::Numeric
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
