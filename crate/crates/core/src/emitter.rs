//! Driven emitter dynamics: qubit `a`, resonator `b`, emitted field `gamma = sqrt(kappa) b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid_complex, TimeGrid};
use crate::pulse::{clamp_amplitude, sech_control, Control, ControlWaveform, PhotonShape};
use crate::scalar::{Cx, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct EmitterTrajectory<T: Real> {
    pub grid: TimeGrid<T>,
    pub kappa: T,
    pub a: Vec<Cx<T>>,
    pub b: Vec<Cx<T>>,
    pub gamma: Vec<Cx<T>>,
    /// Cumulative emitted norm.
    pub emitted: Vec<T>,
}

impl<T: Real> EmitterTrajectory<T> {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Largest deviation of `|a|^2 + |b|^2 + Gamma` from its initial value.
    pub fn norm_drift(&self) -> T {
        let total = |k: usize| self.a[k].norm_sqr() + self.b[k].norm_sqr() + self.emitted[k];
        let start = total(0);
        (0..self.len()).map(|k| (total(k) - start).abs()).fold(T::zero(), T::max)
    }

    pub fn final_qubit_population(&self) -> T {
        self.a.last().map(|a| a.norm_sqr()).unwrap_or_else(T::zero)
    }

    pub fn total_emitted(&self) -> T {
        self.emitted.last().copied().unwrap_or_else(T::zero)
    }
}

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterSolver<T> {
    /// Largest control rotation allowed per RK4 substep (rad).
    pub substep_phase: T,
    pub max_substeps: usize,
    pub norm_tolerance: T,
}

impl<T: Real> Default for EmitterSolver<T> {
    fn default() -> Self {
        Self { substep_phase: T::lit(0.1), max_substeps: 4096, norm_tolerance: T::lit(1e-6) }
    }
}

impl<T: Real> EmitterSolver<T> {
    /// One RK4 step per grid interval, regardless of how fast the control moves.
    pub fn fixed_step() -> Self {
        Self { substep_phase: T::infinity(), ..Self::default() }
    }

    pub fn run<C: Control<T> + ?Sized>(
        &self,
        control: &C,
        grid: &TimeGrid<T>,
        kappa: T,
        initial: (Cx<T>, Cx<T>),
    ) -> Result<EmitterTrajectory<T>> {
        if !(kappa >= T::zero()) {
            return Err(Error::invalid(format!("kappa must be non-negative, got {kappa}")));
        }
        let (a0, b0) = initial;
        let start_norm = a0.norm_sqr() + b0.norm_sqr();
        if start_norm > T::one() + T::lit(1e-12) {
            return Err(Error::invalid(format!("initial norm {start_norm} exceeds 1")));
        }
        let n = grid.len();
        let dt = grid.dt();
        let half_k = T::lit(0.5) * kappa;
        let i = Cx::new(T::zero(), T::one());
        let rhs = |t: T, a: Cx<T>, b: Cx<T>| {
            let g = control.at(t);
            (-i * g * b, -i * g.conj() * a - b * half_k, kappa * b.norm_sqr())
        };
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut emitted = Vec::with_capacity(n);
        let (mut ya, mut yb, mut yg) = (a0, b0, T::zero());
        a.push(ya);
        b.push(yb);
        emitted.push(yg);
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        for k in 0..n - 1 {
            let t0 = grid.time(k);
            let subs = if self.substep_phase.is_finite() {
                let rate = control.local_rate(t0).max(control.local_rate(t0 + dt)) + kappa;
                (rate * dt / self.substep_phase).ceil().to_usize().unwrap_or(1).clamp(1, self.max_substeps.max(1))
            } else {
                1
            };
            let h = dt / T::from_usize(subs).unwrap();
            for s in 0..subs {
                let t = t0 + T::from_usize(s).unwrap() * h;
                let hh = h / two;
                let k1 = rhs(t, ya, yb);
                let k2 = rhs(t + hh, ya + k1.0 * hh, yb + k1.1 * hh);
                let k3 = rhs(t + hh, ya + k2.0 * hh, yb + k2.1 * hh);
                let k4 = rhs(t + h, ya + k3.0 * h, yb + k3.1 * h);
                let w = h / six;
                ya = ya + (k1.0 + (k2.0 + k3.0) * two + k4.0) * w;
                yb = yb + (k1.1 + (k2.1 + k3.1) * two + k4.1) * w;
                yg = yg + (k1.2 + (k2.2 + k3.2) * two + k4.2) * w;
            }
            let drift = (ya.norm_sqr() + yb.norm_sqr() + yg - start_norm).abs();
            if !(drift <= self.norm_tolerance) {
                return Err(Error::NormViolation { time: (t0 + dt).as_f64(), drift: drift.as_f64() });
            }
            a.push(ya);
            b.push(yb);
            emitted.push(yg);
        }
        let root_k = kappa.sqrt();
        let gamma = b.iter().map(|v| *v * root_k).collect();
        Ok(EmitterTrajectory { grid: *grid, kappa, a, b, gamma, emitted })
    }
}

/// Integrates the emitter under a sampled control on the control's own grid.
pub fn simulate_emitter<T: Real>(
    control: &ControlWaveform<T>,
    kappa: T,
    initial: (Cx<T>, Cx<T>),
) -> Result<EmitterTrajectory<T>> {
    EmitterSolver::default().run(control, &control.grid(), kappa, initial)
}

/// `|integral conj(ideal) gamma dt|^2` over `window`.
pub fn emission_fidelity<T: Real>(
    gamma: &[Cx<T>],
    gamma_ideal: &[Cx<T>],
    grid: &TimeGrid<T>,
    window: (T, T),
) -> Result<T> {
    if gamma.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), found: gamma.len() });
    }
    if gamma_ideal.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), found: gamma_ideal.len() });
    }
    let range = grid.window(window.0, window.1);
    let prod: Vec<Cx<T>> = range.map(|k| gamma_ideal[k].conj() * gamma[k]).collect();
    Ok(trapezoid_complex(&prod, grid.dt()).norm_sqr().min(T::one()))
}

/// `tanh^2(kappa tau / (4 eta))`.
pub fn theoretical_fe<T: Real>(tau: T, eta: T, kappa: T) -> T {
    let x = (kappa * tau / (T::lit(4.0) * eta)).tanh();
    x * x
}

/// Emission fidelity of a sech photon produced by `control`, starting from the
/// bare qubit at the left edge of the symmetric window `[-tau/2, tau/2]`.
pub fn sech_emission_fidelity<T: Real>(control: &ControlWaveform<T>, shape: &PhotonShape<T>) -> Result<T> {
    let grid = control.grid();
    let zero = Cx::new(T::zero(), T::zero());
    let traj = simulate_emitter(control, shape.kappa, (Cx::new(T::one(), T::zero()), zero))?;
    let ideal: Vec<Cx<T>> = grid.times().map(|t| shape.photon_at(t)).collect();
    emission_fidelity(&traj.gamma, &ideal, &grid, (grid.t0(), grid.end()))
}

/// Default emitter grid step, `kappa dt = 1e-3 eta`.
pub fn default_dt<T: Real>(eta: T, kappa: T) -> T {
    T::lit(1e-3) * eta / kappa
}

/// Smallest amplitude cap `g_m` for which the clamped sech control still reaches `target`.
pub fn find_gm_for_fidelity<T: Real>(
    delta: T,
    eta: T,
    kappa: T,
    target: T,
    kappa_tau_over_eta: T,
) -> Result<T> {
    if !(target > T::zero() && target < T::one()) {
        return Err(Error::invalid(format!("target fidelity must lie in (0, 1), got {target}")));
    }
    let tau = kappa_tau_over_eta * eta / kappa;
    let grid = TimeGrid::symmetric(tau / T::lit(2.0), default_dt(eta, kappa))?;
    let shape = PhotonShape::sech(kappa, delta, eta)?;
    let control = sech_control(delta, eta, kappa, &grid)?;
    let best = sech_emission_fidelity(&control, &shape)?;
    if best < target {
        return Err(Error::Unreachable { target: target.as_f64(), best: best.as_f64() });
    }
    let fidelity = |gm: T| sech_emission_fidelity(&clamp_amplitude(&control, gm), &shape);
    let mut hi = control.max_amplitude();
    let mut lo = T::zero();
    while (hi - lo) > T::lit(1e-4) * hi {
        let mid = T::lit(0.5) * (lo + hi);
        if fidelity(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{fractional_sech_control, Zero};

    fn one() -> (Cx<f64>, Cx<f64>) {
        (Cx::new(1.0, 0.0), Cx::new(0.0, 0.0))
    }

    #[test]
    fn free_resonator_decays_exponentially() {
        let grid = TimeGrid::new(0.0f64, 1e-3, 5001).unwrap();
        let traj = EmitterSolver::default()
            .run(&Zero, &grid, 1.0, (Cx::new(0.0, 0.0), Cx::new(1.0, 0.0)))
            .unwrap();
        for (t, b) in grid.times().zip(&traj.b).step_by(250) {
            assert!((b.norm_sqr() - (-t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_control_emits_target_photon() {
        let grid = TimeGrid::symmetric(20.0, 1e-3).unwrap();
        let w = sech_control(0.0, 1.0, 1.0, &grid).unwrap();
        let traj = simulate_emitter(&w, 1.0, one()).unwrap();
        for (t, g) in grid.times().zip(&traj.gamma).skip(10000) {
            let ideal = 0.5 / (0.5 * t).cosh();
            assert!((g.norm() - ideal).abs() < 1e-5, "t={t}");
        }
        assert!(traj.norm_drift() < 1e-10);
    }

    #[test]
    fn half_fraction_leaves_half_in_qubit() {
        let grid = TimeGrid::symmetric(40.0, 2e-3).unwrap();
        let w = fractional_sech_control(2.0, 2.0, 1.0, &grid).unwrap();
        let traj = simulate_emitter(&w, 1.0, one()).unwrap();
        assert!((traj.final_qubit_population() - 0.5).abs() < 1e-3);
        assert!((traj.total_emitted() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn theoretical_values() {
        assert!((1.0 - theoretical_fe(30.0f64, 1.0, 1.0) - 1.2236e-6).abs() < 1e-9);
        assert!((theoretical_fe(8.0f64, 1.0, 1.0) - 0.92934).abs() < 1e-5);
        assert!((theoretical_fe(4.0f64, 1.0, 1.0) - 0.5800).abs() < 1e-4);
    }

    #[test]
    fn mismatched_grids_are_reported() {
        let grid = TimeGrid::new(0.0, 0.1, 10).unwrap();
        let a = vec![Cx::new(0.0, 0.0); 10];
        let b = vec![Cx::new(0.0, 0.0); 9];
        assert!(matches!(emission_fidelity(&a, &b, &grid, (0.0, 1.0)), Err(Error::GridMismatch { .. })));
    }
}
