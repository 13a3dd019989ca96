use std::io;

/// Errors raised by the measurement models and the numerical engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The refinement budget ran out before the tolerance was met. The best
    /// value and its error estimate are kept so callers can decide whether the
    /// degraded result is usable.
    #[error("quadrature did not converge: value {value:.6e}, error estimate {err_est:.3e}, target {target:.3e}")]
    Quadrature {
        value: f64,
        err_est: f64,
        target: f64,
    },

    #[error("operation requires geometry {expected}, got {found}")]
    Geometry {
        expected: &'static str,
        found: &'static str,
    },

    #[error("fidelity curve failed at weakness {weakness}: {source}")]
    CurvePoint {
        weakness: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True when the failure is numerical (tolerance not reached) rather than
    /// a usage or I/O problem.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Quadrature { .. } => true,
            Error::CurvePoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
