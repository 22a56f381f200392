use wqed_core::emitter::sech_emission_fidelity;
use wqed_core::pulse::{Reversed, SechControl, Zero};
use wqed_core::*;

const K: f64 = 1.0;

fn excited() -> (Cx<f64>, Cx<f64>) {
    (Cx::new(1.0, 0.0), Cx::new(0.0, 0.0))
}

#[test]
fn maximum_bandwidth_photon_has_sech_envelope() {
    let g = TimeGrid::symmetric(20.0, 1e-3).unwrap();
    let w = sech_control(0.0, 1.0, K, &g).unwrap();
    let traj = simulate_emitter(&w, K, excited()).unwrap();
    // The window opens with the small pre-window photon missing; compare after it has decayed.
    for k in g.window(-8.0, 20.0).step_by(500) {
        let ideal = 0.5 / (0.5 * g.time(k)).cosh();
        assert!((traj.gamma[k].norm() - ideal).abs() < 1e-5);
    }
}

#[test]
fn free_resonator_emits_exponential_photon() {
    let g = TimeGrid::new(0.0, 1e-3, 8001).unwrap();
    let traj = EmitterSolver::default().run(&Zero, &g, K, (Cx::new(0.0, 0.0), Cx::new(1.0, 0.0))).unwrap();
    for (t, b) in g.times().zip(&traj.b).step_by(400) {
        assert!((b.norm_sqr() - (-K * t).exp()).abs() < 1e-12);
    }
}

#[test]
fn fractional_emission_releases_one_over_n() {
    for n in [1.0, 2.0, 4.0] {
        let g = TimeGrid::symmetric(60.0, 2e-3).unwrap();
        let w = fractional_sech_control(n, 2.0, K, &g).unwrap();
        let traj = simulate_emitter(&w, K, excited()).unwrap();
        assert!((traj.total_emitted() - 1.0 / n).abs() < 1e-4, "n={n}: {}", traj.total_emitted());
        assert!((traj.final_qubit_population() - (n - 1.0) / n).abs() < 1e-3);
    }
}

#[test]
fn norm_ledger_and_monotone_emission() {
    for eta in [1.0, 1.25, 2.0, 3.0] {
        for d in [0.0, 1.0, -2.0] {
            let g = TimeGrid::symmetric(15.0 * eta, default_dt(eta, K)).unwrap();
            let w = sech_control(d, eta, K, &g).unwrap();
            let traj = simulate_emitter(&w, K, excited()).unwrap();
            assert!(traj.norm_drift() < 1e-8, "eta={eta} d={d}: {}", traj.norm_drift());
            assert!(traj.emitted.windows(2).all(|p| p[1] >= p[0]));
        }
    }
}

#[test]
fn emission_fidelity_follows_tanh_law() {
    for (eta, d) in [(1.0, 0.0), (2.0, 1.0), (3.0, -2.0)] {
        for kt_eta in [20.0, 30.0] {
            let tau = kt_eta * eta / K;
            let g = TimeGrid::symmetric(tau / 2.0, default_dt(eta, K)).unwrap();
            let w = sech_control(d, eta, K, &g).unwrap();
            let shape = PhotonShape::sech(K, d, eta).unwrap();
            let f = sech_emission_fidelity(&w, &shape).unwrap();
            let want = theoretical_fe(tau, eta, K);
            assert!((f - want).abs() < 1e-4, "eta={eta} d={d} kt/eta={kt_eta}: {f} vs {want}");
        }
    }
}

#[test]
fn theoretical_fidelity_values() {
    assert!((1.0 - theoretical_fe(30.0, 1.0, K) - 1.2236e-6).abs() < 1e-9);
    assert!((theoretical_fe(4.0, 1.0, K) - 0.58002).abs() < 1e-5);
    assert!((theoretical_fe(8.0, 1.0, K) - 0.92934).abs() < 1e-5);
    assert!((theoretical_fe(1e3, 2.0, K) - 1.0).abs() < 1e-15);
}

#[test]
fn identical_photons_have_unit_fidelity() {
    let g = TimeGrid::symmetric(40.0, 1e-2).unwrap();
    let shape = PhotonShape::sech(K, 0.7, 2.0).unwrap();
    let ideal: Vec<Cx<f64>> = g.times().map(|t| shape.photon_at(t)).collect();
    let f = emission_fidelity(&ideal, &ideal, &g, (-40.0, 40.0)).unwrap();
    assert!((f - 1.0).abs() < 1e-6);
}

#[test]
fn clamping_lowers_fidelity() {
    let g = TimeGrid::symmetric(30.0, default_dt(2.0, K)).unwrap();
    let w = sech_control(4.0, 2.0, K, &g).unwrap();
    let shape = PhotonShape::sech(K, 4.0, 2.0).unwrap();
    let full = sech_emission_fidelity(&w, &shape).unwrap();
    let cut = sech_emission_fidelity(&clamp_amplitude(&w, 0.7 * w.max_amplitude()), &shape).unwrap();
    assert!(cut < full);
}

#[test]
fn required_amplitude_is_monotone_in_target() {
    let lo = find_gm_for_fidelity(3.0, 2.0, K, 0.9, 30.0).unwrap();
    let hi = find_gm_for_fidelity(3.0, 2.0, K, 0.999, 30.0).unwrap();
    assert!(lo < hi);
    assert!(hi < 3.0 / (2.0f64 - 1.0).sqrt() * 1.1);
}

#[test]
fn resonant_required_amplitude_is_bounded() {
    let gm = find_gm_for_fidelity(0.0, 1.0, K, 0.99, 30.0).unwrap();
    assert!(gm <= 0.5 * K + 1e-9);
}

#[test]
fn unreachable_target_is_reported() {
    // A window of kappa tau / eta = 4 caps the fidelity at tanh^2(1).
    let r = find_gm_for_fidelity(1.0, 2.0, K, 0.9, 4.0);
    assert!(matches!(r, Err(Error::Unreachable { .. })));
}

#[test]
fn integrator_is_fourth_order() {
    let c = SechControl::new(K, 1.0, 2.0).unwrap();
    let run = |dt: f64| {
        let g = TimeGrid::new(-4.0, dt, (8.0 / dt).round() as usize + 1).unwrap();
        let solver = EmitterSolver { norm_tolerance: 1.0, ..EmitterSolver::fixed_step() };
        let traj = solver.run(&c, &g, K, excited()).unwrap();
        *traj.a.last().unwrap()
    };
    let reference = run(0.2 / 16.0);
    let e1 = (run(0.2) - reference).norm();
    let e2 = (run(0.1) - reference).norm();
    assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
}

#[test]
fn norm_violation_is_raised() {
    let c = SechControl::new(K, 1.0, 2.0).unwrap();
    let g = TimeGrid::new(-4.0, 0.5, 17).unwrap();
    let solver = EmitterSolver { norm_tolerance: 1e-14, ..EmitterSolver::fixed_step() };
    assert!(matches!(solver.run(&c, &g, K, excited()), Err(Error::NormViolation { .. })));
}

#[test]
fn mismatched_photon_grid_is_rejected() {
    let g = TimeGrid::new(0.0, 0.1, 10).unwrap();
    let a = vec![Cx::new(0.0, 0.0); 10];
    let b = vec![Cx::new(0.0, 0.0); 11];
    assert!(matches!(emission_fidelity(&a, &b, &g, (0.0, 0.9)), Err(Error::GridMismatch { .. })));
}

/// Two emitters in cascade: the field leaving the first drives the second.
fn cascade(emit: &dyn Control<f64>, absorb: &dyn Control<f64>, t0: f64, t1: f64, dt: f64) -> [Cx<f64>; 4] {
    let i = Cx::new(0.0, 1.0);
    let rhs = |t: f64, y: &[Cx<f64>; 4]| {
        let (g1, g2) = (emit.at(t), absorb.at(t));
        let [a1, b1, a2, b2] = *y;
        [
            -i * g1 * b1,
            -i * g1.conj() * a1 - 0.5 * K * b1,
            -i * g2 * b2,
            -i * g2.conj() * a2 - 0.5 * K * b2 - K * b1,
        ]
    };
    let mut y = [Cx::new(1.0, 0.0), Cx::new(0.0, 0.0), Cx::new(0.0, 0.0), Cx::new(0.0, 0.0)];
    let steps = ((t1 - t0) / dt).round() as usize;
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        let add = |y: &[Cx<f64>; 4], k: &[Cx<f64>; 4], h: f64| [0, 1, 2, 3].map(|j| y[j] + k[j] * h);
        let k1 = rhs(t, &y);
        let k2 = rhs(t + dt / 2.0, &add(&y, &k1, dt / 2.0));
        let k3 = rhs(t + dt / 2.0, &add(&y, &k2, dt / 2.0));
        let k4 = rhs(t + dt, &add(&y, &k3, dt));
        y = [0, 1, 2, 3].map(|j| y[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0));
    }
    y
}

#[test]
fn time_reversed_control_absorbs_the_photon() {
    let eta = 2.0;
    let delay = 3.0;
    let emit = SechControl::new(K, 1.0, eta).unwrap();
    let absorb = Reversed { inner: SechControl::new(K, 1.0, eta).unwrap(), delay: 0.0 };
    // The cascade has no propagation delay, so the matched absorber is reversed about t = 0.
    let y = cascade(&emit, &absorb, -30.0 * eta, 30.0 * eta, 2e-3);
    assert!(y[2].norm_sqr() >= 1.0 - 1e-3, "absorbed {}", y[2].norm_sqr());
    let late = Reversed { inner: SechControl::new(K, 1.0, eta).unwrap(), delay };
    let y = cascade(&emit, &late, -30.0 * eta, 30.0 * eta, 2e-3);
    assert!(y[2].norm_sqr() < 0.99);
}
