use thiserror::Error;

/// Errors raised by the model, spectral, response and dynamics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} out of domain: {value} ({requirement})")]
    Domain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("g2 = {g2} is below the feasibility bound {g2_min} (deficit {deficit})")]
    InfeasibleCoupling { g2: f64, g2_min: f64, deficit: f64 },

    #[error("mirror split gives alpha + beta - kappa_int = {actual}, expected {expected}")]
    ConstraintViolation { expected: f64, actual: f64 },

    #[error("cannot classify spectrum: {0}")]
    Classification(String),

    #[error("self-energy pole hit at omega = {omega}")]
    Pole { omega: f64 },

    #[error("drive amplitudes are both zero")]
    ZeroDrive,

    #[error("integration did not settle: relative drift {drift:e}")]
    NotConverged { drift: f64 },

    #[error("integration unstable at t = {time}: norm ratio {growth:e} exceeds the spectral bound {bound:e}")]
    Stability { time: f64, growth: f64, bound: f64 },

    #[error("linear prediction failed: {0}")]
    Prediction(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            requirement: "must be finite and > 0",
        })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            requirement: "must be finite and >= 0",
        })
    }
}
