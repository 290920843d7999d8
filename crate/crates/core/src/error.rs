use thiserror::Error;

/// Errors raised by kernel evaluation, bounds and the simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t:e} is below the floor {t_min:e}")]
    TimeTooSmall { t: f64, t_min: f64 },

    #[error("point {point} lies outside the domain (half-width {half_width})")]
    OutsideDomain { point: f64, half_width: f64 },

    /// A lower bound was requested outside the range where it is asserted.
    #[error("bound not asserted: t = {t:e} exceeds validity limit {limit:e}")]
    OutOfValidity { t: f64, limit: f64 },

    #[error("{method} series hit the index cap {cap} before its tail bound was met (t = {t:e})")]
    SeriesBudget {
        method: &'static str,
        cap: usize,
        t: f64,
    },

    #[error("quadrature did not converge: estimated error {estimate:e} > target {target:e}")]
    Quadrature { estimate: f64, target: f64 },

    /// Time step fell below the floor while growth was not reaction-driven.
    #[error("stiffness failure at t = {t:e}: dt = {dt:e} below floor")]
    Stiffness { t: f64, dt: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    /// Numerical failures (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SeriesBudget { .. }
                | Error::Quadrature { .. }
                | Error::Stiffness { .. }
                | Error::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
