use num_complex::Complex64 as C64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("damping rate gamma must be positive, got {0}")]
    NonPositiveGamma(f64),

    #[error("Rabi frequency must be non-negative, got {0}")]
    NegativeRabi(f64),

    #[error("squeezing degree r must be non-negative, got {0}")]
    NegativeSqueezing(f64),

    #[error("squeezed carrier frequency omega_s = {omega_s} must equal the drive frequency omega_f = {omega_f}")]
    CarrierMismatch { omega_s: f64, omega_f: f64 },

    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),

    #[error("singular block system: pivot collapsed in harmonic block {block}")]
    SingularSystem { block: usize },

    #[error("resolvent is singular at z = {z}")]
    SingularResolvent { z: C64 },

    #[error("spectrum evaluation failed at omega = {omega}: {source}")]
    AtFrequency {
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("harmonic truncation did not converge below the cap L = {cap}")]
    NoConvergence { cap: usize },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("no interior extremum in the peak window")]
    NoPeak,

    #[error("half-maximum crossing falls outside the peak window")]
    ClippedPeak,

    #[error("time step {dt} exceeds the drive-resolving limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("Bloch vector still drifts by {drift:e} per unit time after t = {time}")]
    NotSettled { drift: f64, time: f64 },

    #[error("correlations have not decayed at tau_max: |y(tau_max)|/|y(0)| = {ratio:e}")]
    TailTooShort { ratio: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn at_frequency(self, omega: f64) -> Self {
        Error::AtFrequency { omega, source: Box::new(self) }
    }
}
