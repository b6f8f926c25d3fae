use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("ordering mismatch: expected {expected}, got {got}")]
    Ordering { expected: String, got: String },

    #[error("matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("unphysical state: smallest symplectic eigenvalue {0} < 1/2")]
    Unphysical(f64),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("step size dt = {dt} exceeds the bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("t_max = {t_max} exceeds 0.8 x recurrence time ({t_rec}); increase the bath mode count")]
    RecurrenceWindow { t_max: f64, t_rec: f64 },

    #[error("total Hamiltonian is not positive: {0}")]
    Unstable(String),

    #[error("symmetric coupling requires resonant oscillators (omega1 = {omega1}, omega2 = {omega2})")]
    Detuned { omega1: f64, omega2: f64 },

    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    #[error("regime not tabulated: {0}")]
    UnsupportedRegime(String),

    #[error("no T0 in the search bracket [0, {upper}]")]
    NoT0 { upper: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 configuration, 3 physics refusal, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config { .. } | Error::StepTooLarge { .. } => 2,
            Error::RecurrenceWindow { .. }
            | Error::Unstable(_)
            | Error::Detuned { .. }
            | Error::NoEquilibrium(_)
            | Error::UnsupportedRegime(_)
            | Error::NoT0 { .. } => 3,
            Error::Dimension { .. }
            | Error::Ordering { .. }
            | Error::NotSymmetric(_)
            | Error::NotPositiveDefinite
            | Error::Unphysical(_)
            | Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
