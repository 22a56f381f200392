mod commands;
mod config;
mod error;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use commands::Task;
use error::CliError;
use output::ensure_dir;
use sweep::{Axis, Preset, RunManifest};

#[derive(Parser)]
#[command(name = "wqed", version, about = "Detuned single-photon shaping and two-node waveguide-QED network simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Qst,
    Scan,
    BellAb,
    BellBb,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a control waveform.
    Pulse(Common),
    /// Integrate the emitter under the synthesized control.
    Emit(Common),
    /// Fourier spectrum of the control and its low-pass mismatch.
    Spectrum(Common),
    /// Run a two-node network protocol.
    Network {
        #[arg(value_enum)]
        protocol: Protocol,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep configuration keys, or reproduce a figure's data.
    Sweep {
        /// Task run at every point.
        #[arg(long, value_enum, required_unless_present = "preset")]
        run: Option<Task>,
        /// `key=v1,v2,...`; repeated axes form a cartesian product.
        #[arg(long = "axis", value_name = "KEY=V1,V2")]
        axis: Vec<String>,
        #[arg(long, value_enum, conflicts_with_all = ["run", "axis"])]
        preset: Option<Preset>,
        #[command(flatten)]
        common: Common,
    },
}

fn execute(cmd: Cmd) -> Result<Value, CliError> {
    let (label, common, task) = match &cmd {
        Cmd::Pulse(c) => ("pulse".to_string(), c, Some(Task::Pulse)),
        Cmd::Emit(c) => ("emit".to_string(), c, Some(Task::Emit)),
        Cmd::Spectrum(c) => ("spectrum".to_string(), c, Some(Task::Spectrum)),
        Cmd::Network { protocol, common } => {
            let t = match protocol {
                Protocol::Qst => Task::Qst,
                Protocol::Scan => Task::Scan,
                Protocol::BellAb => Task::BellAb,
                Protocol::BellBb => Task::BellBb,
            };
            (t.name().to_string(), common, Some(t))
        }
        Cmd::Sweep { common, .. } => ("sweep".to_string(), common, None),
    };
    let cfg = common.config.as_deref();
    let out = &common.out;
    let mut manifest = RunManifest::new(label, cfg, out, &common.set);
    let value = match (&cmd, task) {
        (_, Some(task)) => {
            let loaded = config::load(cfg, &common.set)?;
            ensure_dir(out)?;
            commands::run(task, &loaded, out)?
        }
        (Cmd::Sweep { run, axis, preset, .. }, None) => {
            if let Some(p) = preset {
                config::load(cfg, &common.set)?;
                ensure_dir(out)?;
                manifest.subcommand = format!("sweep --preset {}", p.to_possible_value().map_or("?".into(), |v| v.get_name().to_string()));
                sweep::preset(*p, cfg, &common.set, out)?
            } else {
                let task = run.expect("clap requires --run without --preset");
                let axes = axis.iter().map(|a| Axis::parse(a)).collect::<Result<Vec<_>, _>>()?;
                config::load(cfg, &common.set)?;
                ensure_dir(out)?;
                manifest.subcommand = format!("sweep --run {}", task.name());
                manifest.axes = axes.clone();
                let r = sweep::sweep(task, cfg, &common.set, &axes, out);
                manifest.clone().write()?;
                r?
            }
        }
        _ => unreachable!(),
    };
    manifest.write()?;
    Ok(value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
