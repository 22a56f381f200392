//! Parameter sweeps and the figure presets.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use wqed_core::emitter::sech_emission_fidelity;
use wqed_core::*;

use crate::commands::{self, Task};
use crate::config::{self, Config, Loaded};
use crate::error::CliError;
use crate::output::{ensure_dir, write_json, write_rows};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    /// `key=v1,v2,...`
    pub fn parse(raw: &str) -> Result<Self, CliError> {
        let (key, values) = raw
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--axis {raw}: expected key=v1,v2,...")))?;
        let key = key.trim().to_string();
        if !Config::keys().contains(&key) {
            return Err(CliError::Config(format!("--axis {raw}: unknown key `{key}`")));
        }
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(CliError::Config(format!("--axis {raw}: no values")));
        }
        Ok(Self { key, values })
    }
}

/// What was run, from which inputs, and which files it produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub overrides: Vec<String>,
    pub axes: Vec<Axis>,
    /// Fixed-step integration and no randomness: reruns are byte-identical.
    pub deterministic: bool,
    pub version: String,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: impl Into<String>, config: Option<&Path>, out: &Path, overrides: &[String]) -> Self {
        Self {
            subcommand: subcommand.into(),
            config: config.map(Path::to_path_buf),
            out: out.to_path_buf(),
            overrides: overrides.to_vec(),
            axes: Vec::new(),
            deterministic: true,
            version: env!("CARGO_PKG_VERSION").to_string(),
            files: Vec::new(),
        }
    }

    /// Lists everything under `out` and writes `manifest.json` there.
    pub fn write(mut self) -> Result<(), CliError> {
        let mut files = Vec::new();
        collect_files(&self.out, &self.out, &mut files)?;
        files.retain(|f| f != "manifest.json");
        files.sort();
        self.files = files;
        write_json(&self.out.join("manifest.json"), &self)
    }
}

fn collect_files(root: &Path, dir: &Path, acc: &mut Vec<String>) -> Result<(), CliError> {
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(root, &p, acc)?;
        } else if let Ok(rel) = p.strip_prefix(root) {
            acc.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

fn cartesian(axes: &[Axis]) -> Vec<Vec<String>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(format!("{}={v}", axis.key));
                    q
                })
            })
            .collect();
    }
    points
}

/// Runs `task` at every point of the axes' cartesian product.
///
/// Each point writes into `point_NNN/`; `sweep.csv` and `sweep.json` collect
/// the summaries. A failing point is recorded and the first failure returned
/// after the tables are written.
pub fn sweep(
    task: Task,
    config: Option<&Path>,
    overrides: &[String],
    axes: &[Axis],
    out: &Path,
) -> Result<Value, CliError> {
    let points = cartesian(axes);
    // Surface config errors before any work starts.
    for p in &points {
        config::load(config, &[overrides, p].concat())?;
    }
    let results: Vec<(Vec<String>, Result<Value, CliError>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let dir = out.join(format!("point_{i:03}"));
            let r = ensure_dir(&dir)
                .and_then(|_| config::load(config, &[overrides, p].concat()))
                .and_then(|l| commands::run(task, &l, &dir));
            (p.clone(), r)
        })
        .collect();

    let metric = task.metric();
    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    let mut header: Vec<String> = vec!["point".into()];
    header.extend(axes.iter().map(|a| a.key.clone()));
    header.extend([metric.to_string(), "error".into()]);
    w.write_record(&header)?;
    let mut table = Vec::new();
    let mut first_err = None;
    for (i, (p, r)) in results.into_iter().enumerate() {
        let mut row = vec![format!("{i:03}")];
        row.extend(p.iter().map(|kv| kv.split_once('=').map_or(kv.clone(), |(_, v)| v.to_string())));
        match r {
            Ok(summary) => {
                row.push(summary.get(metric).map(|v| v.to_string()).unwrap_or_default());
                row.push(String::new());
                table.push(json!({ "point": i, "set": p, "summary": summary }));
            }
            Err(e) => {
                row.push(String::new());
                row.push(e.to_string());
                table.push(json!({ "point": i, "set": p, "error": e.to_string(), "exit_code": e.exit_code() }));
                first_err.get_or_insert(e);
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    let summary = json!({ "task": task, "metric": metric, "points": table });
    write_json(&out.join("sweep.json"), &summary)?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig5,
    Fig6,
    All,
}

struct Ctx<'a> {
    config: Option<&'a Path>,
    overrides: &'a [String],
    base: Config,
}

impl Ctx<'_> {
    /// `pre` yields to user overrides, `post` wins over them.
    fn load(&self, pre: &[String], post: &[String]) -> Result<Loaded, CliError> {
        config::load(self.config, &[pre, self.overrides, post].concat())
    }

    fn mhz(&self, over_kappa: f64) -> String {
        format!("{}", over_kappa * self.base.kappa_mhz)
    }
}

/// Writes the data behind one or all of Figs. 2, 3, 5 and 6 under `out/figN/`.
pub fn preset(which: Preset, config: Option<&Path>, overrides: &[String], out: &Path) -> Result<Value, CliError> {
    let base = config::load(config, overrides)?.config;
    let ctx = Ctx { config, overrides, base };
    let list = match which {
        Preset::All => vec![Preset::Fig2, Preset::Fig3, Preset::Fig5, Preset::Fig6],
        p => vec![p],
    };
    let mut done = serde_json::Map::new();
    for p in list {
        let (name, v) = match p {
            Preset::Fig2 => ("fig2", fig2(&ctx, &ensure_dir(&out.join("fig2"))?)?),
            Preset::Fig3 => ("fig3", fig3(&ctx, &ensure_dir(&out.join("fig3"))?)?),
            Preset::Fig5 => ("fig5", fig5(&ctx, &ensure_dir(&out.join("fig5"))?)?),
            Preset::Fig6 => ("fig6", fig6(&ctx, &ensure_dir(&out.join("fig6"))?)?),
            Preset::All => unreachable!(),
        };
        done.insert(name.into(), v);
    }
    Ok(Value::Object(done))
}

fn fig2(ctx: &Ctx, out: &Path) -> Result<Value, CliError> {
    let cases = [(-1.0, 1.0, "eta1_delta-1"), (-2.0, 1.0, "eta1_delta-2"), (-2.0, 1.5, "eta1.5_delta-2"), (-2.0, 2.0, "eta2_delta-2")];
    let mut res = serde_json::Map::new();
    for (d, eta, name) in cases {
        let l = ctx.load(
            &["kappa_tau=10".into()],
            &["family=\"sech\"".into(), format!("delta_mhz={}", ctx.mhz(d)), format!("eta={eta}")],
        )?;
        let dir = ensure_dir(&out.join(name))?;
        res.insert(name.into(), commands::run(Task::Pulse, &l, &dir)?);
    }
    Ok(Value::Object(res))
}

fn fig3(ctx: &Ctx, out: &Path) -> Result<Value, CliError> {
    let k = ctx.base.kappa();
    // (a) emission infidelity against kappa tau / eta.
    let mut cases = Vec::new();
    for d in [0.0, 1.0, -1.0, 2.0, -2.0] {
        for eta in [1.0, 2.0, 3.0] {
            for x in (1..=15).map(|j| 2.0 * j as f64) {
                cases.push((d, eta, x));
            }
        }
    }
    let rows = cases
        .par_iter()
        .map(|&(d, eta, x)| {
            let tau = x * eta / k;
            let g = TimeGrid::symmetric(tau / 2.0, default_dt(eta, k))?;
            let shape = PhotonShape::sech(k, d * k, eta)?;
            let fe = sech_emission_fidelity(&sech_control(d * k, eta, k, &g)?, &shape)?;
            Ok(vec![d, eta, x, 1.0 - fe, 1.0 - theoretical_fe(tau, eta, k)])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write_rows(
        &out.join("fe_collapse.csv"),
        &["delta_over_kappa", "eta", "kappa_tau_over_eta", "infidelity", "theory_infidelity"],
        &rows,
    )?;
    // The law assumes the photon is caught almost whole; short windows fall off it.
    let worst = rows.iter().filter(|r| r[2] >= 20.0).map(|r| (r[3] - r[4]).abs()).fold(0.0, f64::max);

    // (b) amplitude cap needed for a target emission fidelity.
    let mut cases = Vec::new();
    for d in [1.0, 2.0, 4.0, 6.0, 8.0, 10.0] {
        for eta in [1.25, 2.0, 3.0] {
            for target in [0.9, 0.99, 0.999] {
                cases.push((d, eta, target));
            }
        }
    }
    let rows = cases
        .par_iter()
        .map(|&(d, eta, target)| {
            let gm = find_gm_for_fidelity(d * k, eta, k, target, 30.0)?;
            Ok(vec![d, eta, target, gm / k, d / (eta - 1.0_f64).sqrt()])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write_rows(
        &out.join("gm.csv"),
        &["delta_over_kappa", "eta", "target_fidelity", "gm_over_kappa", "asymptote_over_kappa"],
        &rows,
    )?;

    // (c) spectra at delta = 4 kappa.
    let mut spectra = serde_json::Map::new();
    for eta in [1.5, 2.0, 4.0] {
        let name = format!("spectrum_eta{eta}");
        let l = ctx.load(&[], &["family=\"sech\"".into(), format!("delta_mhz={}", ctx.mhz(4.0)), format!("eta={eta}")])?;
        let dir = ensure_dir(&out.join(&name))?;
        spectra.insert(name, commands::run(Task::Spectrum, &l, &dir)?);
    }

    // (d) filter mismatch map at omega_co = 10 kappa.
    let mut cases = Vec::new();
    for d in (1..=10).map(f64::from) {
        for eta in [1.25, 1.5, 2.0, 3.0, 4.0] {
            cases.push((d, eta));
        }
    }
    let tau = 60.0 / k;
    let rows = cases
        .par_iter()
        .map(|&(d, eta)| {
            let g = TimeGrid::symmetric(tau / 2.0, default_dt(eta, k))?;
            let s = filter_mismatch_s(&sech_control(d * k, eta, k, &g)?, 10.0 * k, (g.t0(), g.end()))?;
            Ok(vec![d, eta, s, s.log10()])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write_rows(&out.join("s_map.csv"), &["delta_over_kappa", "eta", "s", "log10_s"], &rows)?;
    Ok(json!({ "fe_max_deviation_long_windows": worst, "spectra": spectra }))
}

fn fig5(ctx: &Ctx, out: &Path) -> Result<Value, CliError> {
    let delta_k = ["target=1".to_string(), format!("delta_mhz={}", ctx.mhz(1.0))];
    let l = ctx.load(&[], &delta_k)?;
    let qst = commands::run(Task::Qst, &l, &ensure_dir(&out.join("qst_delta1"))?)?;

    // (c) fidelity against the receiver separation Delta = 2 delta.
    let mut cases = Vec::new();
    for big_delta in (1..=10).map(f64::from) {
        for target in [1, 2] {
            cases.push((big_delta, target));
        }
    }
    let rows = cases
        .par_iter()
        .map(|&(big_delta, target)| {
            let l = ctx.load(&[], &[format!("delta_mhz={}", ctx.mhz(big_delta / 2.0)), format!("target={target}")])?;
            let c = &l.config;
            let m = build_network::<f64>(&c.network())?;
            let r = wqed_core::qst(&m, target, c.delta_c(), c.eta, &c.settings())?;
            let f = r.fidelity;
            let other = r.final_population[3 - target];
            Ok(vec![big_delta, target as f64, f.total, f.coherent, other, f.p_loss, f.p_t1])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_rows(
        &out.join("fidelity_vs_delta.csv"),
        &["big_delta_over_kappa", "target", "fidelity", "coherent", "untargeted", "p_loss", "p_t1"],
        &rows,
    )?;

    let l = ctx.load(&[], &[format!("delta_mhz={}", ctx.mhz(2.5))])?;
    let scan = commands::run(Task::Scan, &l, &ensure_dir(&out.join("scan"))?)?;
    Ok(json!({ "qst": qst, "scan_max_deviation": scan["max_deviation"], "scan_peak": scan["peak"] }))
}

fn fig6(ctx: &Ctx, out: &Path) -> Result<Value, CliError> {
    let l = ctx.load(&[], &[])?;
    let ab = commands::run(Task::BellAb, &l, &ensure_dir(&out.join("bell_ab"))?)?;
    let bb = commands::run(Task::BellBb, &l, &ensure_dir(&out.join("bell_bb"))?)?;
    Ok(json!({ "bell_ab": ab, "bell_bb": bb }))
}
