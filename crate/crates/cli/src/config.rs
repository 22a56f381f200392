//! Run configuration in lab units.
//!
//! Frequencies are cyclic (GHz, MHz) and converted to angular units here.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wqed_core::{Calibration, NetworkConfig, ProtocolSettings};

use crate::error::CliError;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sech,
    Fractional,
    Exponential,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    // Single emitter.
    pub family: Family,
    pub kappa_mhz: f64,
    /// Photon detuning. In network runs it also places the receivers at `+-delta`.
    pub delta_mhz: Option<f64>,
    pub eta: f64,
    pub n: f64,
    pub kappa_tau: f64,
    /// Grid step in units of `1/kappa`.
    pub kappa_dt: Option<f64>,
    /// Custom envelope CSV `(t_seconds, envelope)`.
    pub envelope: Option<PathBuf>,
    pub prior_emitted: f64,
    pub cutoff_mhz: Option<f64>,
    pub target_fidelity: Option<f64>,
    pub clamp_mhz: Option<f64>,
    // Network.
    pub omega0_ghz: f64,
    pub delta1_mhz: f64,
    pub delta2_mhz: f64,
    pub delta_c_mhz: Option<f64>,
    pub kappa1_mhz: Option<f64>,
    pub kappa2_mhz: Option<f64>,
    pub length_m: f64,
    pub l0_cm: f64,
    pub band_lo_ghz: f64,
    pub band_hi_ghz: f64,
    pub t1_us: f64,
    pub loss_db_per_km: f64,
    pub calibration: Calibration,
    pub target: usize,
    pub decoherence: bool,
    pub dispersion_compensation: bool,
    pub scan_span_mhz: f64,
    pub scan_step_mhz: f64,
    /// Rows kept in trajectory CSVs: every `stride`-th step.
    pub stride: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            family: Family::Sech,
            kappa_mhz: 30.0,
            delta_mhz: None,
            eta: 2.0,
            n: 2.0,
            kappa_tau: 60.0,
            kappa_dt: None,
            envelope: None,
            prior_emitted: 0.0,
            cutoff_mhz: None,
            target_fidelity: None,
            clamp_mhz: None,
            omega0_ghz: 8.5,
            delta1_mhz: 75.0,
            delta2_mhz: -75.0,
            delta_c_mhz: None,
            kappa1_mhz: None,
            kappa2_mhz: None,
            length_m: 30.0,
            l0_cm: 2.286,
            band_lo_ghz: 7.5,
            band_hi_ghz: 9.5,
            t1_us: 100.0,
            loss_db_per_km: 1.0,
            calibration: Calibration::Loaded,
            target: 1,
            decoherence: true,
            dispersion_compensation: false,
            scan_span_mhz: 60.0,
            scan_step_mhz: 7.5,
            stride: None,
        }
    }
}

/// Parsed configuration with the file text kept for error locations.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    pub path: Option<PathBuf>,
    text: String,
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `key=value` overrides to a TOML table.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set {o}: expected key=value")))?;
        table.insert(k.trim().to_string(), parse_value(v.trim()));
    }
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Loaded, CliError> {
    let (text, origin) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            (text, p.display().to_string())
        }
        None => (String::new(), "<defaults>".to_string()),
    };
    // Parse the file on its own first so errors point at file lines.
    let _: Config = toml::from_str(&text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    let mut table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| CliError::Config(format!("{origin}: {e}")))?;
    apply_overrides(&mut table, overrides)?;
    let config: Config = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("--set: {}", e.message())))?;
    let loaded = Loaded { config, path: path.map(Path::to_path_buf), text };
    loaded.validate()?;
    Ok(loaded)
}

impl Loaded {
    /// `path:line: key: message`, falling back to the key alone.
    pub fn error(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        let line = self.text.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        });
        match (&self.path, line) {
            (Some(p), Some(n)) => CliError::Config(format!("{}:{}: {key}: {msg}", p.display(), n + 1)),
            _ => CliError::Config(format!("{key}: {msg}")),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let positive = [
            ("kappa_mhz", c.kappa_mhz),
            ("kappa_tau", c.kappa_tau),
            ("omega0_ghz", c.omega0_ghz),
            ("length_m", c.length_m),
            ("l0_cm", c.l0_cm),
            ("t1_us", c.t1_us),
            ("scan_step_mhz", c.scan_step_mhz),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(self.error(key, format!("must be positive, got {v}")));
            }
        }
        if !(c.eta >= 1.0) {
            return Err(self.error("eta", format!("must be >= 1, got {}", c.eta)));
        }
        if !(c.n >= 1.0) {
            return Err(self.error("n", format!("must be >= 1, got {}", c.n)));
        }
        if let Some(dt) = c.kappa_dt {
            if !(dt > 0.0) {
                return Err(self.error("kappa_dt", format!("must be positive, got {dt}")));
            }
        }
        if let Some(f) = c.target_fidelity {
            if !(f > 0.0 && f < 1.0) {
                return Err(self.error("target_fidelity", format!("must lie in (0, 1), got {f}")));
            }
        }
        if !(c.band_hi_ghz > c.band_lo_ghz) {
            return Err(self.error("band_hi_ghz", "must exceed band_lo_ghz"));
        }
        if !(c.target == 1 || c.target == 2) {
            return Err(self.error("target", format!("must be 1 or 2, got {}", c.target)));
        }
        if c.stride == Some(0) {
            return Err(self.error("stride", "must be at least 1"));
        }
        if c.family == Family::Custom && c.envelope.is_none() {
            return Err(self.error("family", "custom family needs an envelope file"));
        }
        Ok(())
    }
}

impl Config {
    /// `kappa` in rad/s.
    pub fn kappa(&self) -> f64 {
        TWO_PI * self.kappa_mhz * 1e6
    }

    /// Single-emitter photon detuning in rad/s.
    pub fn delta(&self) -> f64 {
        TWO_PI * self.delta_mhz.unwrap_or(0.0) * 1e6
    }

    pub fn dt(&self) -> f64 {
        self.kappa_dt.unwrap_or(1e-3 * self.eta) / self.kappa()
    }

    pub fn network(&self) -> NetworkConfig {
        let mhz = |v: f64| TWO_PI * v * 1e6;
        let (d1, d2) = match self.delta_mhz {
            Some(d) => (d, -d),
            None => (self.delta1_mhz, self.delta2_mhz),
        };
        let k0 = self.kappa_mhz;
        let length = self.length_m;
        NetworkConfig {
            omega0: TWO_PI * self.omega0_ghz * 1e9,
            delta1: mhz(d1),
            delta2: mhz(d2),
            kappa: [k0, self.kappa1_mhz.unwrap_or(k0), self.kappa2_mhz.unwrap_or(k0)].map(mhz),
            length,
            l0: self.l0_cm * 1e-2,
            band: (TWO_PI * self.band_lo_ghz * 1e9, TWO_PI * self.band_hi_ghz * 1e9),
            t1: self.t1_us * 1e-6,
            loss_db_per_km: self.loss_db_per_km,
            positions: [0.0, length, length],
            calibration: self.calibration,
            kappa_dt: self.kappa_dt.unwrap_or(1e-3),
        }
    }

    /// Emitter detuning for state transfer, defaulting to receiver 1 or 2.
    pub fn delta_c(&self) -> f64 {
        let net = self.network();
        match self.delta_c_mhz {
            Some(d) => TWO_PI * d * 1e6,
            None if self.target == 2 => net.delta2,
            None => net.delta1,
        }
    }

    pub fn settings(&self) -> ProtocolSettings {
        ProtocolSettings {
            kappa_tau: self.kappa_tau,
            decoherence: self.decoherence,
            kappa_dt: self.kappa_dt,
            dispersion_compensation: self.dispersion_compensation,
        }
    }

    /// Keys accepted in config files and `--set`.
    pub fn keys() -> Vec<String> {
        match serde_json::to_value(Config::default()) {
            Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }
}
