//! Shaping frequency-detuned single photons in waveguide QED.
//!
//! Controls for a driven three-level emitter, the emitter dynamics they
//! induce, spectral diagnostics, and a two-node waveguide network with the
//! state-transfer and Bell-pair protocols built on top of it.

pub mod emitter;
pub mod error;
pub mod grid;
pub mod network;
pub mod protocols;
pub mod pulse;
pub mod scalar;
pub mod spectral;

pub use emitter::{
    default_dt, emission_fidelity, find_gm_for_fidelity, simulate_emitter, theoretical_fe, EmitterSolver,
    EmitterTrajectory,
};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use network::{
    build_network, calibrate_lamb_shift, decoherence_factors, simulate_network, Calibration, NetworkConfig, NetworkModel,
    NetworkSolver, NetworkState, NetworkTrajectory,
};
pub use protocols::{
    bell_ab, bell_ab_schedule, bell_bb, bell_bb_schedule, calibration_scan, overlap, qst, qst_schedule,
    FidelityComponents, ProtocolResult, ProtocolSettings, ScanPoint, Schedule,
};
pub use pulse::{
    clamp_amplitude, exp_control, fractional_sech_control, phase_rate, reverse_engineer_control, sech_control,
    sech_control_resonant, time_reverse_for_absorption, Control, ControlWaveform, PhotonShape, SampledEnvelope,
    ShapeFamily,
};
pub use scalar::{Cx, Real};
pub use spectral::{filter_mismatch_s, inverse, low_pass_filter, spectral_center, spectral_peak, spectrum, Spectrum};

pub type TimeGrid64 = TimeGrid<f64>;
pub type ControlWaveform64 = ControlWaveform<f64>;
pub type PhotonShape64 = PhotonShape<f64>;
pub type EmitterTrajectory64 = EmitterTrajectory<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type NetworkModel64 = NetworkModel<f64>;
pub type NetworkTrajectory64 = NetworkTrajectory<f64>;
pub type ProtocolResult64 = ProtocolResult<f64>;
