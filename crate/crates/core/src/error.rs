use thiserror::Error;

/// Failures raised by the solvers and oracles.
///
/// The variants split into caller mistakes ([`Error::Usage`], [`Error::Domain`]),
/// deliberate budget caps ([`Error::Resource`]) and numerical failures that
/// carry enough context to pick better parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("tilt {mu} too small: solution overflowed at t={at}; use mu >= {min_mu:.6}")]
    TiltTooSmall { mu: f64, at: f64, min_mu: f64 },

    #[error("no sign change on [{lo}, {hi}] (f(lo)={f_lo:e}, f(hi)={f_hi:e}): {hint}")]
    Bracketing {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        hint: String,
    },

    #[error("Laplace transform diverges at lambda={lambda}: abscissa estimate {abscissa}")]
    Divergence { lambda: f64, abscissa: f64 },

    #[error("pole of J_nu/J_(nu-1) at nu={nu}, z={z}")]
    Pole { nu: f64, z: f64 },

    #[error(
        "time covariance is not positive semidefinite (pivot {pivot} after jitter {jitter:e})"
    )]
    NotPsd { pivot: usize, jitter: f64 },

    #[error("step too large: |h L| = {norm:.3} > 1 at t={at}")]
    StepSize { norm: f64, at: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by malformed requests rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
