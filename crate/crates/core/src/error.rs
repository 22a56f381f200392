use thiserror::Error;

/// Failures raised by pulse synthesis, integration and network simulation.
///
/// Numeric context is carried as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon shape cannot be emitted: kappa*(1 - Gamma) - |gamma|^2 = {denominator:e} at t = {time:e} s")]
    NonPhysicalShape { time: f64, denominator: f64 },

    #[error("grid too coarse: envelope derivative changes by {relative_change:.3e} (> 1%) under grid halving")]
    GridTooCoarse { relative_change: f64 },

    #[error("exponential control with eta = {eta} is singular at t_s = {singular_time:e} s (requires eta >= 2)")]
    SingularControl { eta: f64, singular_time: f64 },

    #[error("norm ledger drifted by {drift:e} at t = {time:e} s")]
    NormViolation { time: f64, drift: f64 },

    #[error("sample count mismatch: expected {expected}, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("target emission fidelity {target} unreachable: unclamped control reaches {best}")]
    Unreachable { target: f64, best: f64 },

    #[error("no waveguide mode falls inside the retained band")]
    EmptyBand,

    #[error("resonator {resonator}: dressed resonance holds only {weight:.3} of the bare resonator weight")]
    DegenerateDressing { resonator: usize, weight: f64 },

    #[error("control {element} is undefined at t = {time:e} s inside the simulated span")]
    ScheduleGap { element: usize, time: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
