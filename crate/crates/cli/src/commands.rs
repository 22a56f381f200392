use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wqed_core::grid::trapezoid;
use wqed_core::*;

use crate::config::{Family, Loaded};
use crate::error::CliError;
use crate::output::{strided, write_csv, write_json, write_rows};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Every runnable unit of work, as named on the command line and in sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Pulse,
    Emit,
    Spectrum,
    Qst,
    Scan,
    BellAb,
    BellBb,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Pulse => "pulse",
            Task::Emit => "emit",
            Task::Spectrum => "spectrum",
            Task::Qst => "network qst",
            Task::Scan => "network scan",
            Task::BellAb => "network bell-ab",
            Task::BellBb => "network bell-bb",
        }
    }

    /// Scalar reported per point in sweep tables.
    pub fn metric(self) -> &'static str {
        match self {
            Task::Pulse => "max_amplitude",
            Task::Emit => "fidelity",
            Task::Spectrum => "peak",
            Task::Qst | Task::BellAb | Task::BellBb => "fidelity",
            Task::Scan => "max_deviation",
        }
    }
}

/// Runs `task`, writes its files into `out` and returns the summary.
pub fn run(task: Task, loaded: &Loaded, out: &Path) -> Result<Value, CliError> {
    match task {
        Task::Pulse => pulse(loaded, out),
        Task::Emit => emit(loaded, out),
        Task::Spectrum => spectrum_cmd(loaded, out),
        Task::Qst | Task::BellAb | Task::BellBb => protocol(task, loaded, out),
        Task::Scan => scan(loaded, out),
    }
}

struct Synth {
    control: ControlWaveform64,
    shape: PhotonShape64,
    prior: f64,
}

fn envelope_path(loaded: &Loaded, p: &Path) -> PathBuf {
    match (&loaded.path, p.is_relative()) {
        (Some(cfg), true) => cfg.parent().map(|d| d.join(p)).unwrap_or_else(|| p.to_path_buf()),
        _ => p.to_path_buf(),
    }
}

/// Reads `(t_seconds, envelope)` rows; a non-numeric first row is taken as a header.
fn read_envelope(loaded: &Loaded, path: &Path) -> Result<SampledEnvelope<f64>, CliError> {
    let path = envelope_path(loaded, path);
    let shown = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(&path)
        .map_err(|e| CliError::Config(format!("{shown}: {e}")))?;
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (j, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{shown}: {e}")))?;
        let line = rec.position().map_or(j as u64 + 1, |p| p.line());
        let parse = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(a), Some(b)) => {
                t.push(a);
                v.push(b);
            }
            _ if j == 0 => continue,
            _ => return Err(CliError::Config(format!("{shown}:{line}: expected two numbers"))),
        }
    }
    if t.len() < 8 {
        return Err(CliError::Config(format!("{shown}: need at least 8 samples, found {}", t.len())));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if let Some(j) = t.iter().enumerate().position(|(j, tj)| (tj - (t[0] + j as f64 * dt)).abs() > 1e-6 * dt) {
        return Err(CliError::Config(format!("{shown}: sample {} breaks the uniform spacing", j + 1)));
    }
    let grid = TimeGrid::new(t[0], dt, t.len())?;
    Ok(SampledEnvelope::new(&grid, v)?)
}

fn synthesize(loaded: &Loaded) -> Result<Synth, CliError> {
    let c = &loaded.config;
    let (k, d, eta, n) = (c.kappa(), c.delta(), c.eta, c.n);
    let tau = c.kappa_tau / k;
    let dt = c.dt();
    let (control, shape, prior) = match c.family {
        Family::Sech => {
            let g = TimeGrid::symmetric(tau / 2.0, dt)?;
            (sech_control(d, eta, k, &g)?, PhotonShape::sech(k, d, eta)?, 0.0)
        }
        Family::Fractional => {
            let g = TimeGrid::symmetric(tau / 2.0, dt)?;
            let shape = PhotonShape::fractional(k, d, eta, n)?;
            let control = if d == 0.0 {
                fractional_sech_control(n, eta, k, &g)?
            } else {
                reverse_engineer_control(&shape, &g)?
            };
            (control, shape, 0.0)
        }
        Family::Exponential => {
            let g = TimeGrid::spanning(0.0, tau, dt)?;
            (exp_control(d, eta, k, &g)?, PhotonShape::exponential(k, d, eta)?, 0.0)
        }
        Family::Custom => {
            let path = c.envelope.as_ref().ok_or_else(|| loaded.error("envelope", "missing"))?;
            let env = read_envelope(loaded, path)?.with_prior_emitted(c.prior_emitted);
            let g = env.grid()?;
            let shape = PhotonShape::custom(k, d, env)?;
            (reverse_engineer_control(&shape, &g)?, shape, c.prior_emitted)
        }
    };
    let control = match c.clamp_mhz {
        Some(m) => clamp_amplitude(&control, TWO_PI * m * 1e6),
        None => control,
    };
    Ok(Synth { control, shape, prior })
}

fn expected_rates(c: &crate::config::Config) -> Value {
    if c.family == Family::Sech && c.eta > 1.0 {
        let d = c.delta();
        json!([d, d * (c.eta - 2.0) / (c.eta - 1.0)])
    } else {
        Value::Null
    }
}

fn pulse(loaded: &Loaded, out: &Path) -> Result<Value, CliError> {
    let c = &loaded.config;
    let s = synthesize(loaded)?;
    let w = &s.control;
    let g = w.grid();
    let k = c.kappa();
    let times: Vec<f64> = g.times().collect();
    let rows: Vec<Vec<f64>> = (0..w.len()).map(|j| vec![times[j], w.amplitude[j], w.phase[j]]).collect();
    write_rows(&out.join("waveform.csv"), &["t_seconds", "amp_rad_per_s", "phase_rad"], &rows)?;

    let rate: Vec<f64> = w.phase.windows(2).map(|p| (p[1] - p[0]) / w.dt).collect();
    let fold = |f: fn(f64, f64) -> f64, init: f64| rate.iter().copied().fold(init, f);
    let max_amp = w.max_amplitude();
    let long_time = (c.family == Family::Sech && c.eta > 1.0).then(|| {
        let (d, e) = (c.delta(), c.eta);
        (4.0 * d * d * e * e + (e - 1.0).powi(2) * k * k).sqrt() / (2.0 * e * (e - 1.0).sqrt())
    });
    let summary = json!({
        "family": c.family,
        "samples": w.len(),
        "dt": w.dt,
        "max_amplitude": max_amp,
        "max_amplitude_over_kappa": max_amp / k,
        "long_time_amplitude": long_time,
        "phase_rate": {
            "start": rate.first().copied().unwrap_or(0.0),
            "end": rate.last().copied().unwrap_or(0.0),
            "min": fold(f64::min, f64::INFINITY),
            "max": fold(f64::max, f64::NEG_INFINITY),
        },
        "expected_phase_rate_limits": expected_rates(c),
        "divergent": w.divergent,
    });
    write_json(
        &out.join("waveform.json"),
        &json!({
            "meta": w.meta,
            "t_seconds": times,
            "amp_rad_per_s": w.amplitude,
            "phase_rad": w.phase,
        }),
    )?;
    write_json(&out.join("report.json"), &summary)?;
    Ok(summary)
}

fn emit(loaded: &Loaded, out: &Path) -> Result<Value, CliError> {
    let c = &loaded.config;
    let s = synthesize(loaded)?;
    let g = s.control.grid();
    let k = c.kappa();
    let zero = Cx::new(0.0, 0.0);
    let a0 = Cx::new((1.0 - s.prior).max(0.0).sqrt(), 0.0);
    let traj = simulate_emitter(&s.control, k, (a0, zero))?;
    let ideal: Vec<Cx<f64>> = g.times().map(|t| s.shape.photon_at(t)).collect();
    // Photon norm over all time: what a perfect emission would carry.
    let ideal_norm = match c.family {
        Family::Fractional => 1.0 / c.n,
        Family::Custom => trapezoid(&ideal.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(), g.dt()),
        _ => 1.0,
    };
    let raw = emission_fidelity(&traj.gamma, &ideal, &g, (g.t0(), g.end()))?;
    let fidelity = (raw / (ideal_norm * ideal_norm)).min(1.0);
    let tau = g.end() - g.t0();
    let theory = (c.family == Family::Sech).then(|| theoretical_fe(tau, c.eta, k));

    let stride = c.stride.unwrap_or(1);
    let rows: Vec<Vec<f64>> = strided(traj.len(), stride)
        .into_iter()
        .map(|j| {
            let (a, b, gm) = (traj.a[j], traj.b[j], traj.gamma[j]);
            vec![g.time(j), a.re, a.im, b.re, b.im, gm.norm_sqr(), traj.emitted[j]]
        })
        .collect();
    write_rows(
        &out.join("trajectory.csv"),
        &["t", "re_a", "im_a", "re_b", "im_b", "abs2_gamma", "emitted"],
        &rows,
    )?;

    let g_m = match (c.target_fidelity, c.family) {
        (Some(target), Family::Sech) => {
            Some(find_gm_for_fidelity(c.delta(), c.eta, k, target, c.kappa_tau / c.eta)?)
        }
        _ => None,
    };
    let summary = json!({
        "family": c.family,
        "kappa_tau": tau * k,
        "kappa_tau_over_eta": tau * k / c.eta,
        "fidelity": fidelity,
        "infidelity": 1.0 - fidelity,
        "theory": theory,
        "norm_drift": traj.norm_drift(),
        "final_qubit_population": traj.final_qubit_population(),
        "total_emitted": traj.total_emitted(),
        "g_m": g_m,
        "g_m_over_kappa": g_m.map(|v| v / k),
        "g_m_asymptote": (c.eta > 1.0).then(|| c.delta().abs() / (c.eta - 1.0).sqrt()),
    });
    write_json(&out.join("report.json"), &summary)?;
    Ok(summary)
}

fn spectrum_cmd(loaded: &Loaded, out: &Path) -> Result<Value, CliError> {
    let c = &loaded.config;
    let s = synthesize(loaded)?;
    let k = c.kappa();
    let spec = spectrum(&s.control);
    let rows: Vec<Vec<f64>> =
        spec.omega.iter().zip(&spec.g).map(|(w, v)| vec![*w, v.re, v.im, v.norm_sqr()]).collect();
    write_rows(&out.join("spectrum.csv"), &["omega_rad_per_s", "re_G", "im_G", "abs2_G"], &rows)?;
    let g = s.control.grid();
    let mismatch = match c.cutoff_mhz {
        Some(f) => Some(filter_mismatch_s(&s.control, TWO_PI * f * 1e6, (g.t0(), g.end()))?),
        None => None,
    };
    let expected = (c.eta > 1.0 && c.family == Family::Sech).then(|| c.delta() * (c.eta - 2.0) / (c.eta - 1.0));
    let peak = spectral_peak(&spec);
    let center = spectral_center(&spec);
    let summary = json!({
        "d_omega": spec.d_omega,
        "peak": peak,
        "peak_over_kappa": peak / k,
        "center": center,
        "center_over_kappa": center / k,
        "expected_center": expected,
        "expected_center_over_kappa": expected.map(|v| v / k),
        "cutoff": c.cutoff_mhz.map(|f| TWO_PI * f * 1e6),
        "mismatch_s": mismatch,
    });
    write_json(&out.join("report.json"), &summary)?;
    Ok(summary)
}

fn model(loaded: &Loaded) -> Result<NetworkModel64, CliError> {
    Ok(build_network(&loaded.config.network())?)
}

fn write_protocol(out: &Path, r: &ProtocolResult64, sched: &Schedule<f64>, stride: usize) -> Result<(), CliError> {
    let traj = r.trajectory.as_ref().expect("protocols keep their trajectory");
    let idx = strided(traj.len(), stride);
    let pops: Vec<Vec<f64>> = idx
        .iter()
        .map(|&j| {
            let (q, cc) = (traj.q[j], traj.c[j]);
            vec![
                traj.times[j],
                q[0].norm_sqr(),
                q[1].norm_sqr(),
                q[2].norm_sqr(),
                cc[0].norm_sqr(),
                cc[1].norm_sqr(),
                cc[2].norm_sqr(),
                traj.mode_population[j],
            ]
        })
        .collect();
    write_rows(
        &out.join("trajectory.csv"),
        &["t", "abs2_q0", "abs2_q1", "abs2_q2", "abs2_c0", "abs2_c1", "abs2_c2", "sum_abs2_psi"],
        &pops,
    )?;
    let controls: Vec<Vec<f64>> = idx
        .iter()
        .map(|&j| {
            let t = traj.times[j];
            let mut row = vec![t];
            for c in &sched.controls {
                let g = c.at(t);
                row.extend([g.re, g.im]);
            }
            row
        })
        .collect();
    write_rows(
        &out.join("controls.csv"),
        &["t", "re_g0", "im_g0", "re_g1", "im_g1", "re_g2", "im_g2"],
        &controls,
    )?;
    std::fs::write(out.join("result.json"), r.to_json() + "\n")?;
    Ok(())
}

fn protocol(task: Task, loaded: &Loaded, out: &Path) -> Result<Value, CliError> {
    let c = &loaded.config;
    let m = model(loaded)?;
    let settings = c.settings();
    let (r, sched) = match task {
        Task::Qst => {
            let d = c.delta_c();
            (qst(&m, c.target, d, c.eta, &settings)?, qst_schedule(&m, d, c.eta, &settings)?)
        }
        Task::BellAb => (bell_ab(&m, c.eta, &settings)?, bell_ab_schedule(&m, c.eta, &settings)?),
        Task::BellBb => (bell_bb(&m, c.eta, &settings)?, bell_bb_schedule(&m, c.eta, &settings)?),
        _ => unreachable!("not a protocol"),
    };
    write_protocol(out, &r, &sched, c.stride.unwrap_or(100))?;
    Ok(json!({
        "protocol": r.protocol,
        "fidelity": r.fidelity.total,
        "components": r.fidelity,
        "final_population": r.final_population,
        "max_norm_drift": r.max_norm_drift,
        "n_modes": r.n_modes,
        "steps": r.steps,
        "grid_hash": r.grid_hash,
    }))
}

fn scan(loaded: &Loaded, out: &Path) -> Result<Value, CliError> {
    let c = &loaded.config;
    let m = model(loaded)?;
    let k = m.config.kappa[0];
    let d1 = m.config.delta1;
    let half = (0.5 * c.scan_span_mhz / c.scan_step_mhz).round() as i64;
    let step = TWO_PI * c.scan_step_mhz * 1e6;
    let grid: Vec<f64> = (-half..=half).map(|j| d1 + j as f64 * step).collect();
    let pts = calibration_scan(&m, &grid, c.eta, &c.settings())?;
    let peak = pts.iter().map(|p| p.fidelity).fold(0.0, f64::max);
    let mut max_dev = 0.0f64;
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let ratio = if peak > 0.0 { p.fidelity / peak } else { 0.0 };
            let o = overlap(p.delta_c - d1, c.eta, k);
            max_dev = max_dev.max((ratio - o).abs());
            vec![p.delta_c / (TWO_PI * 1e6), (p.delta_c - d1) / k, p.fidelity, ratio, o, p.coherent, p.untargeted]
        })
        .collect();
    write_csv(
        &out.join("scan.csv"),
        &["delta_c_mhz", "offset_over_kappa", "fidelity", "ratio", "overlap", "coherent", "untargeted"],
        rows.iter().map(Vec::as_slice),
    )?;
    let summary = json!({
        "delta1": d1,
        "kappa": k,
        "eta": c.eta,
        "peak": peak,
        "max_deviation": max_dev,
        "points": pts,
    });
    write_json(&out.join("scan.json"), &summary)?;
    Ok(summary)
}
