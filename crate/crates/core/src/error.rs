use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("singular denominator at omega = {omega} GHz")]
    SingularDenominator { omega: f64 },

    #[error("singular denominator at grid index {index} (omega = {omega} GHz)")]
    SingularAt { index: usize, omega: f64 },

    #[error("integration unstable at t = {time}: amplitude {amplitude:e} exceeds bound")]
    Instability { time: f64, amplitude: f64 },

    #[error("no steady state: slowest decay rate {decay:e} GHz is not positive")]
    NoSteadyState { decay: f64 },

    #[error("steady state not converged: residual oscillation {residual:e} > {threshold:e}")]
    NotConverged { residual: f64, threshold: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{quantity} = {value} outside valid interval [{lo}, {hi}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("rank-deficient calibration: {0}")]
    RankDeficient(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("csv: {0}")]
    Csv(String),
}

/// Coarse grouping of errors, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    NonConvergence,
}

impl Error {
    pub fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation { .. }
            | Error::Grid(_)
            | Error::Config { .. }
            | Error::Csv(_)
            | Error::OutOfRange { .. }
            | Error::InsufficientData(_)
            | Error::RankDeficient(_) => ErrorClass::Config,
            Error::NotConverged { .. } => ErrorClass::NonConvergence,
            Error::SingularDenominator { .. }
            | Error::SingularAt { .. }
            | Error::Instability { .. }
            | Error::NoSteadyState { .. }
            | Error::Precondition(_) => ErrorClass::Numerical,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
