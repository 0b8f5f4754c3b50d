//! Experiment configuration: a flat TOML document, optionally layered on a
//! named preset.

use std::collections::BTreeSet;
use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use super::format::fmt_num;
use crate::evolution::{FloquetParams, RunConfig, DEFAULT_EDGE_GUARD, DEFAULT_SUBSTEPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<&'static str>),
    #[error("{key}: {reason}")]
    OutOfRange { key: &'static str, reason: String },
    #[error("unknown preset '{0}' (see `preset list`)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub physics: FloquetParams,
    pub grid_size: usize,
    pub total_kicks: usize,
    pub snapshot_times: BTreeSet<usize>,
    pub renormalize: bool,
    pub edge_guard: f64,
    pub output_dir: PathBuf,
    pub emit_snapshots: bool,
}

impl ExperimentConfig {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            params: self.physics,
            total_kicks: self.total_kicks,
            renormalize: self.renormalize,
            snapshot_times: if self.emit_snapshots {
                self.snapshot_times.clone()
            } else {
                BTreeSet::new()
            },
            edge_guard: self.edge_guard,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key, reason: String| Err(ConfigError::OutOfRange { key, reason });
        let p = &self.physics;
        for (key, v) in [("K", p.kick_strength), ("lambda", p.lambda), ("eta", p.eta)] {
            if !(v.is_finite() && v >= 0.0) {
                return range(key, format!("must be finite and non-negative, got {v}"));
            }
        }
        if !(p.hbar_eff.is_finite() && p.hbar_eff > 0.0) {
            return range("hbar_eff", format!("must be positive, got {}", p.hbar_eff));
        }
        if p.substeps == 0 {
            return range("substeps", "must be at least 1".into());
        }
        if self.grid_size < 8 || self.grid_size % 2 != 0 {
            return range("grid_size", format!("must be even and >= 8, got {}", self.grid_size));
        }
        if !(self.edge_guard > 0.0 && self.edge_guard < 1.0) {
            return range("edge_guard", format!("must lie in (0, 1), got {}", self.edge_guard));
        }
        if let Some(&t) = self.snapshot_times.iter().next_back() {
            if t > self.total_kicks {
                return range(
                    "snapshot_times",
                    format!("time {t} exceeds total_kicks {}", self.total_kicks),
                );
            }
        }
        Ok(())
    }

    /// Renders every field explicitly, so that `parse_config(render())`
    /// reproduces the config exactly.
    pub fn render(&self) -> String {
        let p = &self.physics;
        let mut out = String::new();
        let times: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(out, "K = {}", toml_float(p.kick_strength));
        let _ = writeln!(out, "lambda = {}", toml_float(p.lambda));
        let _ = writeln!(out, "eta = {}", toml_float(p.eta));
        let _ = writeln!(out, "hbar_eff = {}", toml_float(p.hbar_eff));
        let _ = writeln!(out, "substeps = {}", p.substeps);
        let _ = writeln!(out, "grid_size = {}", self.grid_size);
        let _ = writeln!(out, "total_kicks = {}", self.total_kicks);
        let _ = writeln!(out, "snapshot_times = [{}]", times.join(", "));
        let _ = writeln!(out, "renormalize = {}", self.renormalize);
        let _ = writeln!(out, "edge_guard = {}", toml_float(self.edge_guard));
        let _ = writeln!(out, "output_dir = {}", toml_string(&self.output_dir.to_string_lossy()));
        let _ = writeln!(out, "emit_snapshots = {}", self.emit_snapshots);
        out
    }
}

fn toml_float(v: f64) -> String {
    let s = fmt_num(v);
    // TOML floats need a fractional part or an exponent.
    if s.contains(['.', 'e', 'E']) || !v.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn toml_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    #[serde(rename = "K")]
    kick_strength: Option<f64>,
    lambda: Option<f64>,
    eta: Option<f64>,
    hbar_eff: Option<f64>,
    substeps: Option<u64>,
    grid_size: Option<u64>,
    total_kicks: Option<u64>,
    snapshot_times: Option<Vec<u64>>,
    renormalize: Option<bool>,
    edge_guard: Option<f64>,
    output_dir: Option<String>,
    emit_snapshots: Option<bool>,
}

fn to_usize(key: &'static str, v: u64) -> Result<usize, ConfigError> {
    usize::try_from(v).map_err(|_| ConfigError::OutOfRange { key, reason: format!("{v} too large") })
}

/// Parses and validates a config document. Unknown keys are errors; when a
/// `preset` key is present, the remaining keys override the preset.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
    let base = match &raw.preset {
        Some(name) => Some(preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?.config),
        None => None,
    };
    let mut missing = Vec::new();
    macro_rules! required {
        ($field:ident, $key:literal, $from_base:expr) => {
            match (raw.$field, &base) {
                (Some(v), _) => Some(v),
                (None, Some(b)) => Some($from_base(b)),
                (None, None) => {
                    missing.push($key);
                    None
                }
            }
        };
    }
    let kick_strength = required!(kick_strength, "K", |b: &ExperimentConfig| b.physics.kick_strength);
    let lambda = required!(lambda, "lambda", |b: &ExperimentConfig| b.physics.lambda);
    let eta = required!(eta, "eta", |b: &ExperimentConfig| b.physics.eta);
    let hbar_eff = required!(hbar_eff, "hbar_eff", |b: &ExperimentConfig| b.physics.hbar_eff);
    let grid_size = required!(grid_size, "grid_size", |b: &ExperimentConfig| b.grid_size as u64);
    let total_kicks = required!(total_kicks, "total_kicks", |b: &ExperimentConfig| b.total_kicks as u64);
    if !missing.is_empty() {
        return Err(ConfigError::MissingKeys(missing));
    }

    let defaults = base.unwrap_or_else(|| ExperimentConfig {
        physics: FloquetParams {
            kick_strength: 0.0,
            lambda: 0.0,
            eta: 0.0,
            hbar_eff: 1.0,
            substeps: DEFAULT_SUBSTEPS,
        },
        grid_size: 0,
        total_kicks: 0,
        snapshot_times: BTreeSet::new(),
        renormalize: true,
        edge_guard: DEFAULT_EDGE_GUARD,
        output_dir: PathBuf::from("out"),
        emit_snapshots: false,
    });
    let snapshot_times = match raw.snapshot_times {
        Some(v) => v.into_iter().map(|t| to_usize("snapshot_times", t)).collect::<Result<_, _>>()?,
        None => defaults.snapshot_times,
    };
    let config = ExperimentConfig {
        physics: FloquetParams {
            kick_strength: kick_strength.unwrap(),
            lambda: lambda.unwrap(),
            eta: eta.unwrap(),
            hbar_eff: hbar_eff.unwrap(),
            substeps: match raw.substeps {
                Some(n) => to_usize("substeps", n)?,
                None => defaults.physics.substeps,
            },
        },
        grid_size: to_usize("grid_size", grid_size.unwrap())?,
        total_kicks: to_usize("total_kicks", total_kicks.unwrap())?,
        snapshot_times,
        renormalize: raw.renormalize.unwrap_or(defaults.renormalize),
        edge_guard: raw.edge_guard.unwrap_or(defaults.edge_guard),
        output_dir: raw.output_dir.map(PathBuf::from).unwrap_or(defaults.output_dir),
        emit_snapshots: raw.emit_snapshots.unwrap_or(defaults.emit_snapshots),
    };
    config.validate()?;
    Ok(config)
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

/// Non-resonant oscillator frequency `η = 2π/e²`.
pub fn eta_non_resonant() -> f64 {
    2.0 * PI / (E * E)
}

/// Resonant oscillator frequency `η = 2π`.
pub fn eta_resonant() -> f64 {
    2.0 * PI
}

const NON_RESONANT_GRID: usize = 1 << 16;
/// The directed-current packet reaches |p| ~ 600 by t = 100, where 100
/// substeps visibly distort its shape.
const NON_RESONANT_SUBSTEPS: usize = 800;
const RESONANT_GRID: usize = 1 << 13;
/// The wrapped `θ²` potential has a cusp at `±π`, so the momentum tail decays
/// algebraically and its edge-band weight falls only as `D⁻³`.
const RESONANT_GUARD: f64 = 1e-6;
/// At `η = 2π` the Strang error per period is large; resonant observables
/// stop moving at about this many substeps.
const RESONANT_SUBSTEPS: usize = 1600;

fn base(lambda: f64, eta: f64, grid_size: usize, total_kicks: usize, dir: &str) -> ExperimentConfig {
    ExperimentConfig {
        physics: FloquetParams {
            kick_strength: 5.0,
            lambda,
            eta,
            hbar_eff: 0.1,
            substeps: DEFAULT_SUBSTEPS,
        },
        grid_size,
        total_kicks,
        snapshot_times: BTreeSet::new(),
        renormalize: true,
        edge_guard: DEFAULT_EDGE_GUARD,
        output_dir: PathBuf::from(format!("out/{dir}")),
        emit_snapshots: false,
    }
}

fn non_resonant(lambda: f64, grid_size: usize, total_kicks: usize, dir: &str) -> ExperimentConfig {
    let mut c = base(lambda, eta_non_resonant(), grid_size, total_kicks, dir);
    c.physics.substeps = NON_RESONANT_SUBSTEPS;
    c
}

fn resonant(lambda: f64, total_kicks: usize, dir: &str) -> ExperimentConfig {
    let mut c = base(lambda, eta_resonant(), RESONANT_GRID, total_kicks, dir);
    c.edge_guard = RESONANT_GUARD;
    c.physics.substeps = RESONANT_SUBSTEPS;
    c
}

pub const PRESET_NAMES: &[&str] = &[
    "fig1_lambda0",
    "fig1_lambda001",
    "fig1_lambda05",
    "fig1_lambda1",
    "fig1_lambda3",
    "fig3_lambda0",
    "fig3_lambda001",
    "fig3_lambda05",
    "fig3_lambda1",
];

/// Canonical parameter sets: K = 5, ħ_eff = 0.1, with the non-resonant
/// (`fig1_*`) or resonant (`fig3_*`) oscillator frequency.
pub fn preset(name: &str) -> Option<Preset> {
    let (description, config) = match name {
        "fig1_lambda0" => {
            // The Hermitian packet spreads sub-diffusively; its tail reaches
            // the 2^13 grid edge at the 1e-6 level by t = 500.
            let mut c = non_resonant(0.0, 1 << 13, 500, name);
            c.edge_guard = 1e-5;
            ("non-resonant, Hermitian: no current, sub-diffusive width", c)
        }
        "fig1_lambda001" => ("non-resonant, lambda = 0.01", non_resonant(0.01, NON_RESONANT_GRID, 200, name)),
        "fig1_lambda05" => {
            // A broad secondary component rides along with the current and
            // puts up to 1e-3 of the weight in the edge band.
            let mut c = non_resonant(0.5, NON_RESONANT_GRID, 200, name);
            c.edge_guard = 1e-2;
            ("non-resonant, lambda = 0.5", c)
        }
        "fig1_lambda1" => ("non-resonant, lambda = 1: directed current", non_resonant(1.0, NON_RESONANT_GRID, 200, name)),
        "fig1_lambda3" => {
            let mut c = non_resonant(3.0, 1 << 15, 200, name);
            c.snapshot_times = [101].into_iter().collect();
            c.emit_snapshots = true;
            ("non-resonant, lambda = 3: directed current, Gaussian packet", c)
        }
        "fig3_lambda0" => {
            // The Hermitian packet keeps spreading until t ~ 2000, so it
            // needs the larger grid.
            let mut c = resonant(0.0, 2000, name);
            c.grid_size = 1 << 14;
            c.edge_guard = 1e-5;
            ("resonant, Hermitian: double-exponential saturation", c)
        }
        "fig3_lambda001" => ("resonant, lambda = 0.01", resonant(0.01, 500, name)),
        "fig3_lambda05" => ("resonant, lambda = 0.5: damped oscillation", resonant(0.5, 500, name)),
        "fig3_lambda1" => ("resonant, lambda = 1: power-law damped oscillation", resonant(1.0, 600, name)),
        _ => return None,
    };
    let name = PRESET_NAMES.iter().find(|n| **n == name)?;
    Some(Preset { name, description, config })
}
