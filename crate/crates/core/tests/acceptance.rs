//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Exits nonzero on any failure only when `WQED_ACCEPTANCE_STRICT` is set.

use std::time::Instant;

use rayon::prelude::*;
use wqed_core::emitter::sech_emission_fidelity;
use wqed_core::network::{group_velocity, photon_loss_probability, SPEED_OF_LIGHT};
use wqed_core::pulse::SechControl;
use wqed_core::*;

const C1_AMP_REL: f64 = 1e-6;
const C1_PHASE: f64 = 1e-6;
const C2_TOL: f64 = 1e-4;
const C3_REL: f64 = 0.10;
const C4_BINS: f64 = 2.0;
const C4_S_RANGE: (f64, f64) = (5e-3, 2e-2);
const C5_MODES: usize = 648;
const C5_VG_REL: f64 = 0.02;
const C5_TP_NS: (f64, f64) = (145.0, 155.0);
const C5_KTP: (f64, f64) = (28.9, 29.9);
const C5_KTP_TOL: f64 = 0.2;
const C6_RANGE: (f64, f64) = (0.985, 0.995);
const C6_UNTARGETED: f64 = 1e-2;
const C7_DEV: f64 = 1e-2;
const C8_AB: (f64, f64) = (0.98, 0.01);
const C8_BB: (f64, f64) = (0.97, 0.01);
const C8_STAIR: f64 = 1e-2;
const C9_NORM: f64 = 1e-6;
const C9_PARSEVAL: f64 = 1e-8;
const C9_ORDER_RATIO: f64 = 8.0;
const C9_PLOSS: (f64, f64) = (6.9e-3, 1e-4);
const C9_OVERLAP: (f64, f64) = (5e-4, 1e-4);
const C9_FRACTION: f64 = 1e-4;
const BAND_CONVERGENCE: f64 = 1e-3;

struct Report {
    failed: Vec<String>,
    norm_drift: f64,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }

    fn track(&mut self, r: &ProtocolResult64) {
        self.norm_drift = self.norm_drift.max(r.max_norm_drift);
    }
}

fn phase_spread(a: &[f64], b: &[f64]) -> f64 {
    let offset = a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64;
    a.iter().zip(b).map(|(x, y)| (x - y - offset).abs()).fold(0.0, f64::max)
}

fn criterion1(rep: &mut Report) {
    let start = Instant::now();
    let g: TimeGrid64 = TimeGrid::symmetric(20.0, 1e-2).unwrap();
    let (mut amp, mut ph) = (0.0f64, 0.0f64);
    for d in [0.0, 1.0, -1.0, 2.0, -2.0] {
        for eta in [1.25, 2.0, 3.0] {
            let closed = sech_control(d, eta, 1.0, &g).unwrap();
            let general = reverse_engineer_control(&PhotonShape::sech(1.0, d, eta).unwrap(), &g).unwrap();
            for (a, b) in general.amplitude.iter().zip(&closed.amplitude) {
                amp = amp.max((a - b).abs() / b);
            }
            ph = ph.max(phase_spread(&general.phase, &closed.phase));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    rep.line(
        "1",
        amp <= C1_AMP_REL && ph <= C1_PHASE && secs < 1.0,
        format!("closed form vs reverse engineering: max rel amplitude {amp:.2e}, phase {ph:.2e} rad, {secs:.2} s"),
    );
}

fn criterion2(rep: &mut Report) {
    let cases: Vec<(f64, f64, f64)> = [1.0, 2.0, 3.0]
        .into_iter()
        .flat_map(|eta| [0.0, 1.0, -1.0, 2.0, -2.0].map(|d| (eta, d)))
        .flat_map(|(eta, d)| [20.0, 30.0].map(|w| (eta, d, w)))
        .collect();
    let worst = cases
        .par_iter()
        .map(|&(eta, d, kt_eta)| {
            let tau = kt_eta * eta;
            let g = TimeGrid::symmetric(tau / 2.0, default_dt(eta, 1.0)).unwrap();
            let w = sech_control(d, eta, 1.0, &g).unwrap();
            let f = sech_emission_fidelity(&w, &PhotonShape::sech(1.0, d, eta).unwrap()).unwrap();
            ((1.0 - f) - (1.0 - theoretical_fe(tau, eta, 1.0))).abs()
        })
        .reduce(|| 0.0, f64::max);
    rep.line("2", worst <= C2_TOL, format!("1 - F_e vs 1 - tanh^2(kt/4eta), 15 (delta, eta) x 2 windows: max deviation {worst:.2e}"));
}

fn criterion3(rep: &mut Report) {
    let cases: Vec<(f64, f64)> =
        [1.25, 2.0, 3.0].into_iter().flat_map(|eta| [2.0, 4.0, 6.0, 8.0, 10.0].map(|d| (d, eta))).collect();
    let devs: Vec<f64> = cases
        .par_iter()
        .map(|&(d, eta)| {
            let gm = find_gm_for_fidelity(d, eta, 1.0, 0.999, 30.0).unwrap();
            gm / (d / (eta - 1.0f64).sqrt()) - 1.0
        })
        .collect();
    let worst = devs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let (lo, hi) = devs.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    rep.line("3", worst <= C3_REL, format!("g_m(0.999) / (|delta|/sqrt(eta-1)) - 1 in [{lo:.3}, {hi:.3}]"));
}

fn criterion4(rep: &mut Report) {
    let g: TimeGrid64 = TimeGrid::symmetric(30.0, 1e-2).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for eta in [1.5, 2.0, 3.0] {
        let s = spectrum(&sech_control(4.0, eta, 1.0, &g).unwrap());
        let want = 4.0 * (eta - 2.0) / (eta - 1.0);
        let bins = (spectral_peak(&s) - want).abs() / s.d_omega;
        ok &= bins <= C4_BINS;
        parts.push(format!("eta={eta}: {bins:.2} bins"));
    }
    rep.line("4a", ok, format!("spectral peak at delta(eta-2)/(eta-1): {}", parts.join(", ")));
    let s = filter_mismatch_s(&sech_control(10.0, 2.0, 1.0, &g).unwrap(), 10.0, (-30.0, 30.0)).unwrap();
    rep.line(
        "4b",
        (C4_S_RANGE.0..=C4_S_RANGE.1).contains(&s),
        format!("S(eta=2, delta=10k, w_co=10k) = {s:.4} (window [{}, {}])", C4_S_RANGE.0, C4_S_RANGE.1),
    );
}

fn criterion5(rep: &mut Report) {
    let cfg = NetworkConfig::default();
    let model = build_network::<f64>(&cfg).unwrap();
    let n = model.modes.len();
    rep.line("5a", n == C5_MODES, format!("mode count {n} (expected {C5_MODES})"));
    let v = group_velocity(cfg.omega0, cfg.l0) / SPEED_OF_LIGHT;
    rep.line("5b", (v / (2.0 / 3.0) - 1.0).abs() <= C5_VG_REL, format!("v_g(omega0) = {v:.4} c"));
    let tp = model.propagation_time.map(|t| t * 1e9);
    let ok = tp.iter().all(|t| (C5_TP_NS.0..=C5_TP_NS.1).contains(t));
    rep.line("5c", ok, format!("t_p = [{:.1}, {:.1}, {:.1}] ns", tp[0], tp[1], tp[2]));
    let k = cfg.kappa[0];
    let wide = build_network::<f64>(&cfg.clone().with_detuning(5.0 * k)).unwrap();
    let ktp = [wide.propagation_time[1] * k, wide.propagation_time[2] * k];
    let ok = (ktp[0] - C5_KTP.0).abs() <= C5_KTP_TOL && (ktp[1] - C5_KTP.1).abs() <= C5_KTP_TOL;
    rep.line("5d", ok, format!("delta=5k: k t_p1 = {:.3}, k t_p2 = {:.3}", ktp[0], ktp[1]));
}

fn criterion6(rep: &mut Report, model: &NetworkModel64) {
    let k = model.config.kappa[0];
    let s = ProtocolSettings::default();
    let near = build_network::<f64>(&NetworkConfig::default().with_detuning(k)).unwrap();
    let mid = build_network::<f64>(&NetworkConfig::default().with_detuning(1.5 * k)).unwrap();
    let runs: Vec<ProtocolResult64> = [(&near, k), (&mid, 1.5 * k), (model, 2.5 * k)]
        .par_iter()
        .map(|(m, d)| qst(m, 1, *d, 2.0, &s).unwrap())
        .collect();
    for r in &runs {
        rep.track(r);
    }
    for (id, r, label) in [("6a", &runs[1], "3"), ("6b", &runs[2], "5")] {
        let f = r.total();
        let ok = (C6_RANGE.0..=C6_RANGE.1).contains(&f) && r.final_population[2] <= C6_UNTARGETED;
        rep.line(id, ok, format!("QST Delta={label}k: F = {f:.5}, untargeted {:.1e}", r.final_population[2]));
    }
    let (f2, f5) = (runs[0].total(), runs[2].total());
    rep.line("6c", f2 < f5, format!("cross-talk: F(Delta=2k) = {f2:.5} < F(Delta=5k) = {f5:.5}"));
}

fn criterion7(rep: &mut Report, model: &NetworkModel64) {
    let k = model.config.kappa[0];
    let d1 = model.config.delta1;
    let offsets: Vec<f64> = (-8..=8).map(|j| 0.25 * j as f64).collect();
    let grid: Vec<f64> = offsets.iter().map(|o| d1 + o * k).collect();
    let pts = calibration_scan(model, &grid, 2.0, &ProtocolSettings::default()).unwrap();
    let peak = pts[8].fidelity;
    let dev = pts
        .iter()
        .zip(&offsets)
        .map(|(p, o)| (p.fidelity / peak - overlap(o * k, 2.0, k)).abs())
        .fold(0.0, f64::max);
    rep.line("7", dev <= C7_DEV, format!("F/F_peak vs O(delta_c - delta1), 17 points over +-2k: max deviation {dev:.2e}"));
}

fn criterion8(rep: &mut Report, model: &NetworkModel64) {
    let s = ProtocolSettings::default();
    let (ab, bb) = rayon::join(|| bell_ab(model, 2.0, &s).unwrap(), || bell_bb(model, 2.0, &s).unwrap());
    rep.track(&ab);
    rep.track(&bb);
    rep.line("8a", (ab.total() - C8_AB.0).abs() <= C8_AB.1, format!("F_01 = {:.5}", ab.total()));
    rep.line("8b", (bb.total() - C8_BB.0).abs() <= C8_BB.1, format!("F_12 = {:.5}", bb.total()));
    let traj = bb.trajectory.as_ref().unwrap();
    let q0 = traj.qubit_population(0);
    let at = |t: f64| q0[traj.times.iter().position(|s| *s >= t).unwrap()];
    let k = model.config.kappa[0];
    let steps = [at(bb.t_span.0 + 1.0 / k), at(model.propagation_time[0]), *q0.last().unwrap()];
    let ok = (steps[0] - 1.0).abs() <= C8_STAIR && (steps[1] - 0.5).abs() <= C8_STAIR && steps[2] <= C8_STAIR;
    rep.line("8c", ok, format!("q0 staircase {:.4} -> {:.4} -> {:.2e}", steps[0], steps[1], steps[2]));
}

fn criterion9(rep: &mut Report) {
    let g: TimeGrid64 = TimeGrid::symmetric(30.0, 1e-2).unwrap();
    let w = sech_control(2.0, 2.0, 1.0, &g).unwrap();
    let e_t: f64 = w.amplitude.iter().map(|a| a * a).sum::<f64>() * g.dt();
    let parseval = (spectrum(&w).energy() - e_t).abs() / e_t;
    rep.line("9a", parseval <= C9_PARSEVAL, format!("Parseval relative error {parseval:.2e}"));

    let c = SechControl::new(1.0, 1.0, 2.0).unwrap();
    let run = |dt: f64| {
        let grid = TimeGrid::new(-4.0, dt, (8.0 / dt).round() as usize + 1).unwrap();
        let solver = EmitterSolver { norm_tolerance: 1.0, ..EmitterSolver::fixed_step() };
        *solver.run(&c, &grid, 1.0, (Cx::new(1.0, 0.0), Cx::new(0.0, 0.0))).unwrap().a.last().unwrap()
    };
    let reference = run(0.2 / 16.0);
    let ratio = (run(0.2) - reference).norm() / (run(0.1) - reference).norm();
    rep.line("9b", ratio >= C9_ORDER_RATIO, format!("RK4 step-halving error ratio {ratio:.2}"));

    let p = photon_loss_probability(1.0, 30.0, 1.0);
    rep.line("9c", (p - C9_PLOSS.0).abs() <= C9_PLOSS.1, format!("p_loss(1 dB/km, 30 m) = {p:.4e}"));
    let o = overlap(1.0, 2.0, 1.0);
    rep.line("9d", (o - C9_OVERLAP.0).abs() <= C9_OVERLAP.1, format!("O(2k/eta) = {o:.3e}"));

    let mut worst = 0.0f64;
    for n in [1.0f64, 2.0, 4.0] {
        let g: TimeGrid64 = TimeGrid::symmetric(60.0, 2e-3).unwrap();
        let traj = simulate_emitter(&fractional_sech_control(n, 2.0, 1.0, &g).unwrap(), 1.0, (Cx::new(1.0, 0.0), Cx::new(0.0, 0.0)))
            .unwrap();
        worst = worst.max((traj.total_emitted() - 1.0 / n).abs());
    }
    rep.line("9e", worst <= C9_FRACTION, format!("fractional emission |Gamma(inf) - 1/n| <= {worst:.2e}, n = 1, 2, 4"));
}

fn band_convergence(rep: &mut Report, model: &NetworkModel64) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wide = build_network::<f64>(&NetworkConfig { band: (two_pi * 7.3e9, two_pi * 9.7e9), ..NetworkConfig::default() })
        .unwrap();
    let s = ProtocolSettings::default();
    let d1 = model.config.delta1;
    let run = |m: &NetworkModel64| -> [ProtocolResult64; 3] {
        [qst(m, 1, d1, 2.0, &s).unwrap(), bell_ab(m, 2.0, &s).unwrap(), bell_bb(m, 2.0, &s).unwrap()]
    };
    let (a, b) = rayon::join(|| run(model), || run(&wide));
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x.total() - y.total()).abs()).collect();
    for r in a.iter().chain(&b) {
        rep.track(r);
    }
    let ok = d.iter().all(|v| *v < BAND_CONVERGENCE);
    rep.line(
        "band",
        ok,
        format!(
            "{} -> {} modes: |dF| qst {:.1e}, bell-ab {:.1e}, bell-bb {:.1e}",
            model.modes.len(),
            wide.modes.len(),
            d[0],
            d[1],
            d[2]
        ),
    );
}

fn main() {
    let start = Instant::now();
    let mut rep = Report { failed: Vec::new(), norm_drift: 0.0 };
    criterion1(&mut rep);
    criterion2(&mut rep);
    criterion3(&mut rep);
    criterion4(&mut rep);
    criterion5(&mut rep);
    let model = build_network::<f64>(&NetworkConfig::default()).unwrap();
    criterion6(&mut rep, &model);
    criterion7(&mut rep, &model);
    criterion8(&mut rep, &model);
    criterion9(&mut rep);
    band_convergence(&mut rep, &model);
    let drift = rep.norm_drift;
    rep.line("9f", drift <= C9_NORM, format!("max norm drift over all network runs {drift:.2e}"));
    println!(
        "acceptance: {} failed [{}] in {:.1} s",
        rep.failed.len(),
        rep.failed.join(", "),
        start.elapsed().as_secs_f64()
    );
    if !rep.failed.is_empty() && std::env::var_os("WQED_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
