//! Two-node waveguide network: qubit/resonator pairs at both ends of a
//! rectangular waveguide, in the single-excitation sector.
//!
//! Element 0 is node A (at `x = 0`); elements 1 and 2 sit together at node B
//! (`x = L`). Dynamics run in a frame rotating at `omega0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::trapezoid;
use crate::pulse::Control;
use crate::scalar::{Cx, Real};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// How the waveguide-induced resonator shift is compensated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calibration {
    /// Bare frequencies everywhere.
    Off,
    /// Qubits moved onto the dressed resonator frequencies.
    Qubit,
    /// Bare resonators pre-detuned so the dressed pairs sit at `omega_i`.
    Loaded,
}

/// Physical parameters of the network, in SI units (angular frequencies in rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub omega0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub kappa: [f64; 3],
    pub length: f64,
    pub l0: f64,
    pub band: (f64, f64),
    pub t1: f64,
    pub loss_db_per_km: f64,
    pub positions: [f64; 3],
    pub calibration: Calibration,
    /// Integrator step in units of `1/kappa[0]`.
    pub kappa_dt: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let kappa = TWO_PI * 30e6;
        Self {
            omega0: TWO_PI * 8.5e9,
            delta1: 2.5 * kappa,
            delta2: -2.5 * kappa,
            kappa: [kappa; 3],
            length: 30.0,
            l0: 0.02286,
            band: (TWO_PI * 7.5e9, TWO_PI * 9.5e9),
            t1: 100e-6,
            loss_db_per_km: 1.0,
            positions: [0.0, 30.0, 30.0],
            calibration: Calibration::Loaded,
            kappa_dt: 1e-3,
        }
    }
}

impl NetworkConfig {
    /// Symmetric receivers at `omega0 +- delta`.
    pub fn with_detuning(mut self, delta: f64) -> Self {
        self.delta1 = delta;
        self.delta2 = -delta;
        self
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self.positions = [0.0, length, length];
        self
    }

    pub fn cutoff(&self) -> f64 {
        std::f64::consts::PI * SPEED_OF_LIGHT / self.l0
    }

    /// Element frequencies `omega0`, `omega0 + delta1`, `omega0 + delta2`.
    pub fn frequencies(&self) -> [f64; 3] {
        [self.omega0, self.omega0 + self.delta1, self.omega0 + self.delta2]
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega0", self.omega0),
            ("length", self.length),
            ("l0", self.l0),
            ("t1", self.t1),
            ("kappa_dt", self.kappa_dt),
            ("kappa[0]", self.kappa[0]),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.kappa.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::invalid("resonator decay rates must be non-negative"));
        }
        if !(self.loss_db_per_km >= 0.0) {
            return Err(Error::invalid("photon loss must be non-negative"));
        }
        let (lo, hi) = self.band;
        if !(hi > lo) {
            return Err(Error::invalid(format!("band [{lo}, {hi}] is empty")));
        }
        if lo <= self.cutoff() {
            return Err(Error::invalid(format!(
                "band starts at {lo:e} rad/s, at or below the waveguide cutoff {:e} rad/s",
                self.cutoff()
            )));
        }
        for (i, w) in self.frequencies().iter().enumerate() {
            if *w < lo || *w > hi {
                return Err(Error::invalid(format!("element {i} frequency {w:e} rad/s lies outside the band")));
            }
        }
        Ok(())
    }
}

/// Group velocity `c sqrt(1 - pi^2 c^2 / (l0^2 omega^2))`.
pub fn group_velocity(omega: f64, l0: f64) -> f64 {
    let c = SPEED_OF_LIGHT;
    let r = std::f64::consts::PI * c / (l0 * omega);
    c * (1.0 - r * r).sqrt()
}

/// Dispersion `c sqrt(pi^2/l0^2 + k^2)`.
pub fn mode_frequency(k: f64, l0: f64) -> f64 {
    let p = std::f64::consts::PI / l0;
    SPEED_OF_LIGHT * (p * p + k * k).sqrt()
}

/// Mode indices `m` with `Omega(m pi / L)` inside `band`.
pub fn mode_range(length: f64, l0: f64, band: (f64, f64)) -> std::ops::RangeInclusive<u64> {
    let p = std::f64::consts::PI / l0;
    let k_of = |w: f64| {
        let q = w / SPEED_OF_LIGHT;
        (q * q - p * p).max(0.0).sqrt()
    };
    let m_lo = (k_of(band.0) * length / std::f64::consts::PI).ceil().max(0.0) as u64;
    let m_hi = (k_of(band.1) * length / std::f64::consts::PI).floor() as u64;
    // Guard the rounding at both ends against the dispersion itself.
    let inside = |m: u64| {
        let w = mode_frequency(m as f64 * std::f64::consts::PI / length, l0);
        w >= band.0 && w <= band.1
    };
    let mut lo = m_lo.saturating_sub(1);
    while !inside(lo) && lo <= m_hi + 1 {
        lo += 1;
    }
    let mut hi = m_hi + 1;
    while hi > lo && !inside(hi) {
        hi -= 1;
    }
    if inside(lo) {
        lo..=hi
    } else {
        // Empty range.
        #[allow(clippy::reversed_empty_ranges)]
        {
            1..=0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub m: u64,
    pub k: f64,
    pub omega: f64,
}

/// Network Hamiltonian data in the frame rotating at `omega0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel<T> {
    pub config: NetworkConfig,
    pub modes: Vec<Mode>,
    /// `Omega_k - omega0`.
    pub mode_detuning: Vec<T>,
    /// `J[i][k]`.
    pub coupling: [Vec<T>; 3],
    pub group_velocity: [f64; 3],
    pub propagation_time: [f64; 3],
    pub resonator_detuning: [T; 3],
    pub qubit_detuning: [T; 3],
    pub lamb_shift: [f64; 3],
}

/// Enumerates the retained modes and the couplings to each resonator.
pub fn build_network<T: Real>(config: &NetworkConfig) -> Result<NetworkModel<T>> {
    config.validate()?;
    let range = mode_range(config.length, config.l0, config.band);
    if range.is_empty() {
        return Err(Error::EmptyBand);
    }
    let modes: Vec<Mode> = range
        .map(|m| {
            let k = m as f64 * std::f64::consts::PI / config.length;
            Mode { m, k, omega: mode_frequency(k, config.l0) }
        })
        .collect();
    let freqs = config.frequencies();
    let vg = freqs.map(|w| group_velocity(w, config.l0));
    let tp = vg.map(|v| config.length / v);
    let coupling = [0, 1, 2].map(|i| {
        modes
            .iter()
            .map(|md| {
                let amp = (config.kappa[i] * vg[i] * md.omega / (2.0 * freqs[i] * config.length)).sqrt();
                T::lit((md.k * config.positions[i]).cos() * amp)
            })
            .collect::<Vec<T>>()
    });
    let mode_detuning = modes.iter().map(|md| T::lit(md.omega - config.omega0)).collect();
    let det = [0.0, config.delta1, config.delta2].map(T::lit);
    let model = NetworkModel {
        config: config.clone(),
        modes,
        mode_detuning,
        coupling,
        group_velocity: vg,
        propagation_time: tp,
        resonator_detuning: det,
        qubit_detuning: det,
        lamb_shift: [0.0; 3],
    };
    calibrate_lamb_shift(model)
}

/// Resonator self-energy `sum_k J_k^2 / (z - Delta_k)`.
fn self_energy<T: Real>(model: &NetworkModel<T>, i: usize, z: Cx<f64>) -> Cx<f64> {
    model.coupling[i]
        .iter()
        .zip(&model.mode_detuning)
        .map(|(j, d)| {
            let j = j.as_f64();
            Cx::new(j * j, 0.0) / (z - d.as_f64())
        })
        .sum()
}

/// Spectral density `-Im G(omega + i eps) / pi` of resonator `i`.
fn resonator_density<T: Real>(model: &NetworkModel<T>, i: usize, omega: f64, eps: f64) -> f64 {
    let z = Cx::new(omega, eps);
    let bare = model.resonator_detuning[i].as_f64();
    let g = Cx::new(1.0, 0.0) / (z - bare - self_energy(model, i, z));
    -g.im / std::f64::consts::PI
}

/// Dressed resonator frequency and the weight of its resonance within `+-width`.
fn dressed_resonance<T: Real>(model: &NetworkModel<T>, i: usize, eps: f64, width: f64) -> (f64, f64) {
    let bare = model.resonator_detuning[i].as_f64();
    let f = |w: f64| resonator_density(model, i, w, eps);
    let n = 400;
    let (mut best, mut best_v) = (bare, f64::NEG_INFINITY);
    for j in 0..=n {
        let w = bare - width + 2.0 * width * j as f64 / n as f64;
        let v = f(w);
        if v > best_v {
            best = w;
            best_v = v;
        }
    }
    // Golden-section refinement of the maximum.
    let step = 2.0 * width / n as f64;
    let (mut a, mut b) = (best - step, best + step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let peak = 0.5 * (a + b);
    // Simpson weight of the smoothed resonance within the window.
    let m = 2000;
    let h = 2.0 * width / m as f64;
    let mut acc = f(peak - width) + f(peak + width);
    for j in 1..m {
        let w = peak - width + j as f64 * h;
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(w);
    }
    (peak, acc * h / 3.0)
}

/// Moves each qubit onto the dressed frequency of its resonator.
///
/// The dressed frequency is the peak of the resonator spectral density, with
/// the mode comb smoothed by a Lorentzian of half width `kappa/4`. With
/// [`Calibration::Loaded`] the bare resonators are first detuned so that the
/// dressed frequencies land on the configured `omega_i`.
pub fn calibrate_lamb_shift<T: Real>(mut model: NetworkModel<T>) -> Result<NetworkModel<T>> {
    let nominal = [0.0, model.config.delta1, model.config.delta2];
    model.resonator_detuning = nominal.map(T::lit);
    model.qubit_detuning = model.resonator_detuning;
    model.lamb_shift = [0.0; 3];
    let kappa_ref = model.config.kappa.iter().copied().fold(0.0, f64::max);
    if kappa_ref == 0.0 || model.config.calibration == Calibration::Off {
        return Ok(model);
    }
    let eps = 0.25 * kappa_ref;
    let passes = if model.config.calibration == Calibration::Loaded { 3 } else { 1 };
    for i in 0..3 {
        if model.config.kappa[i] == 0.0 {
            continue;
        }
        for _ in 0..passes {
            let (peak, weight) = dressed_resonance(&model, i, eps, kappa_ref);
            if weight < 0.5 {
                return Err(Error::DegenerateDressing { resonator: i, weight });
            }
            let shift = peak - model.resonator_detuning[i].as_f64();
            model.lamb_shift[i] = shift;
            model.qubit_detuning[i] = T::lit(peak);
            if model.config.calibration == Calibration::Loaded {
                model.resonator_detuning[i] = T::lit(nominal[i] - shift);
            }
        }
        if model.config.calibration == Calibration::Loaded {
            model.qubit_detuning[i] = T::lit(nominal[i]);
        }
    }
    Ok(model)
}

impl<T: Real> NetworkModel<T> {
    /// Control detuning for element `i` absorbing a photon at `photon` (rotating frame).
    ///
    /// Under [`Calibration::Loaded`] this folds in the frequency dependence of
    /// the resonator self-energy between `omega_i` and the photon; otherwise it
    /// is the plain difference to the qubit.
    pub fn absorber_detuning(&self, i: usize, photon: f64) -> f64 {
        let own = self.qubit_detuning[i].as_f64();
        let kappa_ref = self.config.kappa.iter().copied().fold(0.0, f64::max);
        if self.config.calibration != Calibration::Loaded || self.config.kappa[i] == 0.0 {
            return photon - own;
        }
        let eps = 0.25 * kappa_ref;
        let drift = self_energy(self, i, Cx::new(photon, eps)).re - self_energy(self, i, Cx::new(own, eps)).re;
        photon - own - drift
    }
}

/// Amplitudes of qubits, resonators and modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct NetworkState<T: Real> {
    pub q: [Cx<T>; 3],
    pub c: [Cx<T>; 3],
    pub psi: Vec<Cx<T>>,
}

impl<T: Real> NetworkState<T> {
    pub fn vacuum(n_modes: usize) -> Self {
        let z = Cx::new(T::zero(), T::zero());
        Self { q: [z; 3], c: [z; 3], psi: vec![z; n_modes] }
    }

    pub fn excited_qubit(n_modes: usize, i: usize) -> Self {
        let mut s = Self::vacuum(n_modes);
        s.q[i] = Cx::new(T::one(), T::zero());
        s
    }

    pub fn excited_resonator(n_modes: usize, i: usize) -> Self {
        let mut s = Self::vacuum(n_modes);
        s.c[i] = Cx::new(T::one(), T::zero());
        s
    }

    pub fn mode_population(&self) -> T {
        self.psi.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.q.iter().chain(&self.c).map(|v| v.norm_sqr()).sum::<T>() + self.mode_population()
    }

    fn to_vec(&self) -> Vec<Cx<T>> {
        let mut y = Vec::with_capacity(6 + self.psi.len());
        y.extend_from_slice(&self.q);
        y.extend_from_slice(&self.c);
        y.extend_from_slice(&self.psi);
        y
    }

    fn from_vec(y: &[Cx<T>]) -> Self {
        Self { q: [y[0], y[1], y[2]], c: [y[3], y[4], y[5]], psi: y[6..].to_vec() }
    }
}

/// Sampled network evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct NetworkTrajectory<T: Real> {
    pub t0: T,
    pub dt: T,
    pub times: Vec<T>,
    pub q: Vec<[Cx<T>; 3]>,
    pub c: Vec<[Cx<T>; 3]>,
    pub mode_population: Vec<T>,
    pub norm: Vec<T>,
    pub final_state: NetworkState<T>,
}

impl<T: Real> NetworkTrajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn qubit_population(&self, i: usize) -> Vec<T> {
        self.q.iter().map(|q| q[i].norm_sqr()).collect()
    }

    pub fn final_qubits(&self) -> [Cx<T>; 3] {
        self.final_state.q
    }

    pub fn max_norm_drift(&self) -> T {
        let n0 = self.norm[0];
        self.norm.iter().map(|n| (*n - n0).abs()).fold(T::zero(), T::max)
    }

    /// `integral sum_i |q_i|^2 dt`.
    pub fn qubit_occupation_integral(&self) -> T {
        let pop: Vec<T> = self.q.iter().map(|q| q.iter().map(|v| v.norm_sqr()).sum()).collect();
        trapezoid(&pop, self.dt)
    }
}

/// Integration settings for [`simulate_network`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSolver<T> {
    pub dt: T,
    pub norm_tolerance: T,
}

impl<T: Real> NetworkSolver<T> {
    pub fn for_model(model: &NetworkModel<T>) -> Self {
        Self { dt: T::lit(model.config.kappa_dt / model.config.kappa[0]), norm_tolerance: T::lit(1e-6) }
    }
}

struct Rhs<'a, T: Real> {
    model: &'a NetworkModel<T>,
}

impl<T: Real> Rhs<'_, T> {
    /// `dy/dt = -i H(g) y`.
    fn eval(&self, g: &[Cx<T>; 3], y: &[Cx<T>], out: &mut [Cx<T>]) {
        let m = self.model;
        let minus_i = |v: Cx<T>| Cx::new(v.im, -v.re);
        let psi = &y[6..];
        for i in 0..3 {
            let q = y[i];
            let c = y[3 + i];
            out[i] = minus_i(q * m.qubit_detuning[i] + g[i] * c);
            let mut acc = c * m.resonator_detuning[i] + g[i].conj() * q;
            let mut field = Cx::new(T::zero(), T::zero());
            for (j, p) in m.coupling[i].iter().zip(psi) {
                field = field + *p * *j;
            }
            acc = acc + field;
            out[3 + i] = minus_i(acc);
        }
        let (c0, c1, c2) = (y[3], y[4], y[5]);
        let (j0, j1, j2) = (&m.coupling[0], &m.coupling[1], &m.coupling[2]);
        for k in 0..psi.len() {
            let v = psi[k] * m.mode_detuning[k] + c0 * j0[k] + c1 * j1[k] + c2 * j2[k];
            out[6 + k] = minus_i(v);
        }
    }
}

/// Integrates the single-excitation Schrodinger equation over `t_span`.
pub fn simulate_network<T: Real>(
    model: &NetworkModel<T>,
    controls: [&dyn Control<T>; 3],
    initial: &NetworkState<T>,
    t_span: (T, T),
    solver: &NetworkSolver<T>,
) -> Result<NetworkTrajectory<T>> {
    let n_modes = model.modes.len();
    if initial.psi.len() != n_modes {
        return Err(Error::GridMismatch { expected: n_modes, found: initial.psi.len() });
    }
    let (start, end) = t_span;
    if !(end > start) {
        return Err(Error::invalid(format!("empty time span [{start}, {end}]")));
    }
    let steps = ((end - start) / solver.dt).ceil().to_usize().unwrap_or(1).max(1);
    let dt = (end - start) / T::from_usize(steps).unwrap();
    let rhs = Rhs { model };
    let dim = 6 + n_modes;
    let mut y = initial.to_vec();
    let norm0 = initial.norm();
    let mut k1 = vec![Cx::new(T::zero(), T::zero()); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let eval_controls = |t: T| -> Result<[Cx<T>; 3]> {
        let mut g = [Cx::new(T::zero(), T::zero()); 3];
        for (i, c) in controls.iter().enumerate() {
            g[i] = c.at(t);
            if !(g[i].re.is_finite() && g[i].im.is_finite()) {
                return Err(Error::ScheduleGap { element: i, time: t.as_f64() });
            }
        }
        Ok(g)
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut qs = Vec::with_capacity(steps + 1);
    let mut cs = Vec::with_capacity(steps + 1);
    let mut modes = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    let record = |y: &[Cx<T>], t: T, times: &mut Vec<T>, qs: &mut Vec<[Cx<T>; 3]>, cs: &mut Vec<[Cx<T>; 3]>, modes: &mut Vec<T>, norms: &mut Vec<T>| {
        let mp: T = y[6..].iter().map(|v| v.norm_sqr()).sum();
        let local: T = y[..6].iter().map(|v| v.norm_sqr()).sum();
        times.push(t);
        qs.push([y[0], y[1], y[2]]);
        cs.push([y[3], y[4], y[5]]);
        modes.push(mp);
        norms.push(mp + local);
    };
    record(&y, start, &mut times, &mut qs, &mut cs, &mut modes, &mut norms);

    let half = T::lit(0.5);
    let sixth = dt / T::lit(6.0);
    let mut g_next = eval_controls(start)?;
    for s in 0..steps {
        let t = start + T::from_usize(s).unwrap() * dt;
        let g0 = g_next;
        let gm = eval_controls(t + half * dt)?;
        g_next = eval_controls(t + dt)?;
        rhs.eval(&g0, &y, &mut k1);
        for j in 0..dim {
            tmp[j] = y[j] + k1[j] * (half * dt);
        }
        rhs.eval(&gm, &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = y[j] + k2[j] * (half * dt);
        }
        rhs.eval(&gm, &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = y[j] + k3[j] * dt;
        }
        rhs.eval(&g_next, &tmp, &mut k4);
        for j in 0..dim {
            y[j] = y[j] + (k1[j] + (k2[j] + k3[j]) * T::lit(2.0) + k4[j]) * sixth;
        }
        record(&y, t + dt, &mut times, &mut qs, &mut cs, &mut modes, &mut norms);
        let drift = (*norms.last().unwrap() - norm0).abs();
        if !(drift <= solver.norm_tolerance) {
            return Err(Error::NormViolation { time: (t + dt).as_f64(), drift: drift.as_f64() });
        }
    }
    Ok(NetworkTrajectory {
        t0: start,
        dt,
        times,
        q: qs,
        c: cs,
        mode_population: modes,
        norm: norms,
        final_state: NetworkState::from_vec(&y),
    })
}

/// Probability of losing the photon over `n_traversals` waveguide lengths.
pub fn photon_loss_probability(loss_db_per_km: f64, length_m: f64, n_traversals: f64) -> f64 {
    1.0 - 10f64.powf(-loss_db_per_km * length_m * 1e-3 * n_traversals / 10.0)
}

/// `(p_T1, p_loss)` for a finished trajectory.
pub fn decoherence_factors<T: Real>(
    trajectory: &NetworkTrajectory<T>,
    t1: f64,
    loss_db_per_km: f64,
    length_m: f64,
    n_traversals: f64,
) -> (f64, f64) {
    let p_t1 = if t1.is_infinite() { 1.0 } else { (-trajectory.qubit_occupation_integral().as_f64() / t1).exp() };
    (p_t1, photon_loss_probability(loss_db_per_km, length_m, n_traversals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::Zero;

    #[test]
    fn loss_probabilities() {
        assert!((photon_loss_probability(1.0, 30.0, 1.0) - 6.884e-3).abs() < 1e-6);
        assert!((photon_loss_probability(0.3, 30.0, 1.0) - 2.07e-3).abs() < 1e-5);
        assert_eq!(photon_loss_probability(0.0, 30.0, 1.0), 0.0);
    }

    #[test]
    fn mode_range_agrees_with_scan() {
        let cfg = NetworkConfig::default();
        let r = mode_range(cfg.length, cfg.l0, cfg.band);
        let brute: Vec<u64> = (0..5000)
            .filter(|m| {
                let w = mode_frequency(*m as f64 * std::f64::consts::PI / cfg.length, cfg.l0);
                w >= cfg.band.0 && w <= cfg.band.1
            })
            .collect();
        assert_eq!(*r.start(), brute[0]);
        assert_eq!(*r.end(), *brute.last().unwrap());
    }

    #[test]
    fn idle_qubit_stays_excited() {
        let cfg = NetworkConfig { calibration: Calibration::Off, ..NetworkConfig::default() };
        let model = build_network::<f64>(&cfg).unwrap();
        let init = NetworkState::excited_qubit(model.modes.len(), 0);
        let solver = NetworkSolver::for_model(&model);
        let k = cfg.kappa[0];
        let z = Zero;
        let traj = simulate_network(&model, [&z, &z, &z], &init, (0.0, 2.0 / k), &solver).unwrap();
        assert!(traj.qubit_population(0).iter().all(|p| (p - 1.0).abs() < 1e-12));
        let (pt1, _) = decoherence_factors(&traj, f64::INFINITY, 1.0, 30.0, 1.0);
        assert_eq!(pt1, 1.0);
    }

    #[test]
    fn band_below_cutoff_is_rejected() {
        let cfg = NetworkConfig { band: (TWO_PI * 5.0e9, TWO_PI * 9.5e9), ..NetworkConfig::default() };
        assert!(build_network::<f64>(&cfg).is_err());
    }

    #[test]
    fn empty_band_is_reported() {
        let cfg = NetworkConfig {
            band: (TWO_PI * 8.5e9 - 1.0, TWO_PI * 8.5e9 + 1.0),
            delta1: 0.0,
            delta2: 0.0,
            calibration: Calibration::Off,
            ..NetworkConfig::default()
        };
        assert!(matches!(build_network::<f64>(&cfg), Err(Error::EmptyBand)));
    }

    #[test]
    fn decoupled_resonator_has_no_shift() {
        let mut cfg = NetworkConfig::default();
        cfg.kappa[1] = 0.0;
        let model = build_network::<f64>(&cfg).unwrap();
        assert_eq!(model.lamb_shift[1], 0.0);
        assert_eq!(model.qubit_detuning[1], model.resonator_detuning[1]);
    }
}
