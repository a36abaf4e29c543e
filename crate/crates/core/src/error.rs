use thiserror::Error;

use crate::linalg::ValidityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not a valid density matrix: {0:?}")]
    InvalidDensity(ValidityReport),

    #[error("time {t} lies outside the schedule span [0, {span}]")]
    OutOfSchedule { t: f64, span: f64 },

    #[error("invalid configuration: {field}: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("integration produced non-finite values at t = {t}")]
    StepUnstable { t: f64 },

    #[error("trace drifted by {drift:e} at t = {t} (limit {limit:e})")]
    TraceDrift { t: f64, drift: f64, limit: f64 },

    #[error("coherence never fell below 1/e of its initial value within t = {horizon}")]
    NotReached { horizon: f64 },

    #[error("fit window [{t_lo}, {t_hi}] holds fewer than two samples")]
    WindowEmpty { t_lo: f64, t_hi: f64 },

    #[error("sample {value:e} at t = {t} is not positive; cannot take its logarithm")]
    NonPositiveSamples { t: f64, value: f64 },

    #[error("no decay: population rate {rate:e} is zero")]
    NotDecaying { rate: f64 },
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::ConfigInvalid { .. } | Error::OutOfSchedule { .. })
    }
}
