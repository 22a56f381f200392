//! State transfer and Bell-pair protocols on the two-node network.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::{
    decoherence_factors, simulate_network, NetworkModel, NetworkSolver, NetworkState, NetworkTrajectory,
};
use crate::pulse::{
    Control, FractionalSechControl, MaxAmplitude, ResonantSechControl, Reversed, SechControl, Shifted, SigmoidGate,
    Zero,
};
use crate::scalar::{Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSettings {
    /// Emission window `kappa tau`.
    pub kappa_tau: f64,
    /// Apply `p_T1` and photon loss; otherwise both factors are 1.
    pub decoherence: bool,
    /// Overrides the model's integrator step, in units of `1/kappa[0]`.
    pub kappa_dt: Option<f64>,
    /// Detuned absorbers use [`NetworkModel::absorber_detuning`] instead of `-delta_i`.
    pub dispersion_compensation: bool,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self { kappa_tau: 60.0, decoherence: true, kappa_dt: None, dispersion_compensation: false }
    }
}

impl ProtocolSettings {
    pub fn lossless(self) -> Self {
        Self { decoherence: false, ..self }
    }

    pub fn compensated(self) -> Self {
        Self { dispersion_compensation: true, ..self }
    }
}

/// What drives one element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDescriptor {
    pub element: usize,
    pub family: String,
    pub delta: f64,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction_n: Option<f64>,
    /// Time-reversed as `conj(g(t_r - t))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reversed_about: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// Sigmoid gate `(center, rate)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<(f64, f64)>,
}

impl ControlDescriptor {
    fn new(element: usize, family: &str, delta: f64, eta: f64) -> Self {
        Self {
            element,
            family: family.into(),
            delta,
            eta,
            fraction_n: None,
            reversed_about: None,
            shift: None,
            gate: None,
        }
    }

    fn zero(element: usize) -> Self {
        Self::new(element, "zero", 0.0, 0.0)
    }
}

/// `total = loss_factor * p_t1 * coherent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityComponents {
    pub coherent: f64,
    pub p_t1: f64,
    pub p_loss: f64,
    pub loss_factor: f64,
    pub total: f64,
}

impl FidelityComponents {
    pub fn new(coherent: f64, p_t1: f64, p_loss: f64, loss_factor: f64) -> Self {
        Self { coherent, p_t1, p_loss, loss_factor, total: loss_factor * p_t1 * coherent }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ProtocolResult<T: Real> {
    pub protocol: String,
    pub eta: f64,
    pub delta1: f64,
    pub delta2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    pub schedule: Vec<ControlDescriptor>,
    pub t_span: (f64, f64),
    pub dt: f64,
    pub steps: usize,
    pub n_modes: usize,
    pub lamb_shift: [f64; 3],
    /// Final qubit amplitudes `(re, im)`.
    pub final_q: [(f64, f64); 3],
    pub final_population: [f64; 3],
    pub fidelity: FidelityComponents,
    pub max_norm_drift: f64,
    pub grid_hash: String,
    #[serde(skip)]
    pub trajectory: Option<NetworkTrajectory<T>>,
}

impl<T: Real> ProtocolResult<T> {
    pub fn total(&self) -> f64 {
        self.fidelity.total
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("protocol results serialize")
    }
}

/// Digest of the time grid and the retained mode spectrum.
pub fn grid_hash<T: Real>(model: &NetworkModel<T>, t_span: (f64, f64), dt: f64, steps: usize) -> String {
    let mut h = Sha256::new();
    for v in [t_span.0, t_span.1, dt] {
        h.update(v.to_le_bytes());
    }
    h.update((steps as u64).to_le_bytes());
    for m in &model.modes {
        h.update(m.m.to_le_bytes());
    }
    for d in model.qubit_detuning.iter().chain(&model.resonator_detuning) {
        h.update(d.as_f64().to_le_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

/// Overlap `x^2 / sinh^2 x` with `x = pi delta_nu eta / kappa` of two sech photons.
pub fn overlap(delta_nu: f64, eta: f64, kappa: f64) -> f64 {
    let x = std::f64::consts::PI * delta_nu * eta / kappa;
    if x.abs() < 1e-4 {
        return 1.0 - x * x / 3.0;
    }
    let r = x / x.sinh();
    r * r
}

/// `(|a| + |b|)^2 / 2`, the Bell fidelity maximized over the relative phase.
pub fn bell_coherent(a: Cx<f64>, b: Cx<f64>) -> f64 {
    let s = a.norm() + b.norm();
    s * s / 2.0
}

/// `max_phi |a + e^{-i phi} b|^2 / 2` by a 360-point scan refined by golden section.
pub fn bell_phase_scan(a: Cx<f64>, b: Cx<f64>) -> (f64, f64) {
    let f = |phi: f64| (a + Cx::from_polar(1.0, -phi) * b).norm_sqr() / 2.0;
    let n = 360;
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let (mut best, mut best_v) = (0.0, f64::NEG_INFINITY);
    for j in 0..n {
        let phi = j as f64 * step;
        let v = f(phi);
        if v > best_v {
            best = phi;
            best_v = v;
        }
    }
    let (mut lo, mut hi) = (best - step, best + step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = hi - r * (hi - lo);
        let d = lo + r * (hi - lo);
        if f(c) > f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let phi = 0.5 * (lo + hi);
    (phi.rem_euclid(2.0 * std::f64::consts::PI), f(phi).max(best_v))
}

struct Run<T: Real> {
    trajectory: NetworkTrajectory<T>,
    t_span: (f64, f64),
    grid_hash: String,
}

fn run<T: Real>(
    model: &NetworkModel<T>,
    controls: [&dyn Control<T>; 3],
    t_span: (f64, f64),
    settings: &ProtocolSettings,
) -> Result<Run<T>> {
    let mut solver = NetworkSolver::for_model(model);
    if let Some(kdt) = settings.kappa_dt {
        solver.dt = T::lit(kdt / model.config.kappa[0]);
    }
    let init = NetworkState::excited_qubit(model.modes.len(), 0);
    let trajectory = simulate_network(model, controls, &init, (T::lit(t_span.0), T::lit(t_span.1)), &solver)?;
    let hash = grid_hash(model, t_span, trajectory.dt.as_f64(), trajectory.len() - 1);
    Ok(Run { trajectory, t_span, grid_hash: hash })
}

fn assemble<T: Real>(
    protocol: &str,
    model: &NetworkModel<T>,
    eta: f64,
    schedule: Vec<ControlDescriptor>,
    run: Run<T>,
    coherent: f64,
    n_traversals: f64,
    loss_factor: impl Fn(f64) -> f64,
    settings: &ProtocolSettings,
) -> ProtocolResult<T> {
    let cfg = &model.config;
    let traj = run.trajectory;
    let (p_t1, p_loss) = if settings.decoherence {
        decoherence_factors(&traj, cfg.t1, cfg.loss_db_per_km, cfg.length, n_traversals)
    } else {
        (1.0, 0.0)
    };
    let q = traj.final_qubits();
    ProtocolResult {
        protocol: protocol.into(),
        eta,
        delta1: cfg.delta1,
        delta2: cfg.delta2,
        delta_c: None,
        target: None,
        schedule,
        t_span: run.t_span,
        dt: traj.dt.as_f64(),
        steps: traj.len() - 1,
        n_modes: model.modes.len(),
        lamb_shift: model.lamb_shift,
        final_q: q.map(|v| (v.re.as_f64(), v.im.as_f64())),
        final_population: q.map(|v| v.norm_sqr().as_f64()),
        fidelity: FidelityComponents::new(coherent, p_t1, p_loss, loss_factor(p_loss)),
        max_norm_drift: traj.max_norm_drift().as_f64(),
        grid_hash: run.grid_hash,
        trajectory: Some(traj),
    }
}

fn to_f64<T: Real>(v: Cx<T>) -> Cx<f64> {
    Cx::new(v.re.as_f64(), v.im.as_f64())
}

/// Controls, their descriptions and the simulated span of one protocol run.
pub struct Schedule<T: Real> {
    pub controls: [Box<dyn Control<T>>; 3],
    pub descriptors: Vec<ControlDescriptor>,
    pub t_span: (f64, f64),
}

impl<T: Real> Schedule<T> {
    fn refs(&self) -> [&dyn Control<T>; 3] {
        [&*self.controls[0], &*self.controls[1], &*self.controls[2]]
    }
}

/// Emitter at `delta_c`; both receivers run resonant time-reversed controls.
pub fn qst_schedule<T: Real>(
    model: &NetworkModel<T>,
    delta_c: f64,
    eta: f64,
    settings: &ProtocolSettings,
) -> Result<Schedule<T>> {
    let k = model.config.kappa;
    let tp = model.propagation_time;
    let tau = settings.kappa_tau / k[0];
    let g0 = SechControl::new(T::lit(k[0]), T::lit(delta_c), T::lit(eta))?;
    let g1 = Reversed { inner: ResonantSechControl::new(T::lit(k[1]), T::lit(eta))?, delay: tp[1] };
    let g2 = Reversed { inner: ResonantSechControl::new(T::lit(k[2]), T::lit(eta))?, delay: tp[2] };
    Ok(Schedule {
        controls: [Box::new(g0), Box::new(g1), Box::new(g2)],
        descriptors: vec![
            ControlDescriptor::new(0, "sech", delta_c, eta),
            ControlDescriptor { reversed_about: Some(tp[1]), ..ControlDescriptor::new(1, "sech", 0.0, eta) },
            ControlDescriptor { reversed_about: Some(tp[2]), ..ControlDescriptor::new(2, "sech", 0.0, eta) },
        ],
        t_span: (-tau / 2.0, tau / 2.0 + tp[1].max(tp[2])),
    })
}

/// Frequency-selective state transfer from node A into qubit `target` of node B.
pub fn qst<T: Real>(
    model: &NetworkModel<T>,
    target: usize,
    delta_c: f64,
    eta: f64,
    settings: &ProtocolSettings,
) -> Result<ProtocolResult<T>> {
    if !(target == 1 || target == 2) {
        return Err(Error::invalid(format!("target must be 1 or 2, got {target}")));
    }
    let sched = qst_schedule(model, delta_c, eta, settings)?;
    let r = run(model, sched.refs(), sched.t_span, settings)?;
    let coherent = r.trajectory.final_qubits()[target].norm_sqr().as_f64();
    let mut res = assemble("qst", model, eta, sched.descriptors, r, coherent, 1.0, |p| 1.0 - p, settings);
    res.delta_c = Some(delta_c);
    res.target = Some(target);
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub delta_c: f64,
    pub fidelity: f64,
    pub coherent: f64,
    /// Final population of the other receiver.
    pub untargeted: f64,
}

/// State transfer into qubit 1 for each emitter detuning, in parallel.
pub fn calibration_scan<T: Real>(
    model: &NetworkModel<T>,
    delta_c: &[f64],
    eta: f64,
    settings: &ProtocolSettings,
) -> Result<Vec<ScanPoint>> {
    delta_c
        .par_iter()
        .map(|&d| {
            let r = qst(model, 1, d, eta, settings)?;
            Ok(ScanPoint {
                delta_c: d,
                fidelity: r.fidelity.total,
                coherent: r.fidelity.coherent,
                untargeted: r.final_population[2],
            })
        })
        .collect()
}

/// Control detuning for receiver `i` catching a photon at `omega0`.
fn absorber_detuning<T: Real>(model: &NetworkModel<T>, i: usize, settings: &ProtocolSettings) -> f64 {
    if settings.dispersion_compensation {
        model.absorber_detuning(i, 0.0)
    } else {
        -[0.0, model.config.delta1, model.config.delta2][i]
    }
}

/// Half emission from node A, caught by qubit 1.
pub fn bell_ab_schedule<T: Real>(model: &NetworkModel<T>, eta: f64, settings: &ProtocolSettings) -> Result<Schedule<T>> {
    let k = model.config.kappa;
    let tp0 = model.propagation_time[0];
    let tau = settings.kappa_tau / k[0];
    let g0 = FractionalSechControl::new(T::lit(k[0]), T::lit(eta), T::lit(2.0))?;
    let d1 = absorber_detuning(model, 1, settings);
    let g1 = Reversed { inner: SechControl::new(T::lit(k[1]), T::lit(d1), T::lit(eta))?, delay: tp0 };
    Ok(Schedule {
        controls: [Box::new(g0), Box::new(g1), Box::new(Zero)],
        descriptors: vec![
            ControlDescriptor { fraction_n: Some(2.0), ..ControlDescriptor::new(0, "fractional", 0.0, eta) },
            ControlDescriptor { reversed_about: Some(tp0), ..ControlDescriptor::new(1, "sech", d1, eta) },
            ControlDescriptor::zero(2),
        ],
        t_span: (-tau / 2.0, tp0 + tau / 2.0),
    })
}

/// Bell pair between node A and qubit 1 of node B.
pub fn bell_ab<T: Real>(model: &NetworkModel<T>, eta: f64, settings: &ProtocolSettings) -> Result<ProtocolResult<T>> {
    let sched = bell_ab_schedule(model, eta, settings)?;
    let r = run(model, sched.refs(), sched.t_span, settings)?;
    let q = r.trajectory.final_qubits();
    let coherent = bell_coherent(to_f64(q[0]), to_f64(q[1]));
    Ok(assemble("bell-ab", model, eta, sched.descriptors, r, coherent, 1.0, |p| 1.0 - p / 2.0, settings))
}

/// Half emission caught by qubit 1, then the remainder caught by qubit 2 after `2 t_p0`.
pub fn bell_bb_schedule<T: Real>(model: &NetworkModel<T>, eta: f64, settings: &ProtocolSettings) -> Result<Schedule<T>> {
    let k = model.config.kappa;
    let tp0 = model.propagation_time[0];
    let tau = settings.kappa_tau / k[0];
    let tau_d = 2.0 * tp0;
    let g0 = MaxAmplitude {
        first: FractionalSechControl::new(T::lit(k[0]), T::lit(eta), T::lit(2.0))?,
        second: Shifted { inner: ResonantSechControl::new(T::lit(k[0]), T::lit(eta))?, shift: tau_d },
    };
    let (d1, d2) = (absorber_detuning(model, 1, settings), absorber_detuning(model, 2, settings));
    let g1 = Reversed { inner: SechControl::new(T::lit(k[1]), T::lit(d1), T::lit(eta))?, delay: tp0 };
    let g2 = SigmoidGate {
        inner: Reversed { inner: SechControl::new(T::lit(k[2]), T::lit(d2), T::lit(eta))?, delay: 3.0 * tp0 },
        center: 1.5 * tp0,
        rate: k[0],
    };
    Ok(Schedule {
        controls: [Box::new(g0), Box::new(g1), Box::new(g2)],
        descriptors: vec![
            ControlDescriptor {
                fraction_n: Some(2.0),
                shift: Some(tau_d),
                ..ControlDescriptor::new(0, "max(fractional, shifted sech)", 0.0, eta)
            },
            ControlDescriptor { reversed_about: Some(tp0), ..ControlDescriptor::new(1, "sech", d1, eta) },
            ControlDescriptor {
                reversed_about: Some(3.0 * tp0),
                gate: Some((1.5 * tp0, k[0])),
                ..ControlDescriptor::new(2, "sech", d2, eta)
            },
        ],
        t_span: (-tau / 2.0, tau_d + tp0 + tau / 2.0),
    })
}

/// Bell pair between the two qubits of node B, by two sequential emissions from node A.
pub fn bell_bb<T: Real>(model: &NetworkModel<T>, eta: f64, settings: &ProtocolSettings) -> Result<ProtocolResult<T>> {
    let sched = bell_bb_schedule(model, eta, settings)?;
    let r = run(model, sched.refs(), sched.t_span, settings)?;
    let q = r.trajectory.final_qubits();
    let coherent = bell_coherent(to_f64(q[1]), to_f64(q[2]));
    Ok(assemble("bell-bb", model, eta, sched.descriptors, r, coherent, 1.0, |p| 1.0 - p, settings))
}
