//! Fit requests for `analyze`: `<kind>:<column>[:key=value]...`.
//!
//! ```text
//! linear:p_mean
//! power:width:window=50..500
//! quadratic:e_kin:g=6.28
//! damped:p_mean:envelope=exp:sign=minus:gamma=0.01
//! gaussian:prob
//! ```

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{CosineSign, EnvelopeKind, GammaMode, Window};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitSpecError {
    #[error("fit spec must look like <kind>:<column>[:key=value...]")]
    Shape,
    #[error("unknown fit kind '{0}'")]
    Kind(String),
    #[error("unknown column '{0}'")]
    Column(String),
    #[error("option '{key}' is not valid for {kind} fits")]
    Option { kind: &'static str, key: String },
    #[error("bad value '{value}' for option '{key}'")]
    Value { key: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Linear,
    Power,
    Quadratic,
    Drift,
    Frequency,
    Damped,
    DoubleExp,
    Gaussian,
}

impl FitKind {
    pub fn name(self) -> &'static str {
        match self {
            FitKind::Linear => "linear",
            FitKind::Power => "power",
            FitKind::Quadratic => "quadratic",
            FitKind::Drift => "drift",
            FitKind::Frequency => "frequency",
            FitKind::Damped => "damped",
            FitKind::DoubleExp => "double_exp",
            FitKind::Gaussian => "gaussian",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        use FitKind::*;
        [Linear, Power, Quadratic, Drift, Frequency, Damped, DoubleExp, Gaussian]
            .into_iter()
            .find(|k| k.name() == s)
    }

    /// Asymptotic laws use the late half by default; oscillation and
    /// saturation fits need the whole record.
    pub fn default_window(self) -> Window {
        match self {
            FitKind::Linear | FitKind::Power | FitKind::Quadratic => Window::LATE_HALF,
            _ => Window::All,
        }
    }

    fn accepts(self, key: &str) -> bool {
        match key {
            "window" => !matches!(self, FitKind::Drift | FitKind::Gaussian),
            "g" => self == FitKind::Quadratic,
            "envelope" | "sign" | "gamma" => self == FitKind::Damped,
            _ => false,
        }
    }
}

pub const SERIES_COLUMNS: &[&str] = &["log_norm", "p_mean", "e_kin", "e_pot", "e_tot", "width"];

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub kind: FitKind,
    pub column: String,
    pub window: Window,
    /// Growth rate for `quadratic`; `None` means fit it from `p_mean`.
    pub growth_rate: Option<f64>,
    pub envelope: EnvelopeKind,
    pub sign: CosineSign,
    pub gamma: GammaMode,
}

fn bad(key: &str, value: &str) -> FitSpecError {
    FitSpecError::Value { key: key.into(), value: value.into() }
}

fn finite(key: &str, value: &str) -> Result<f64, FitSpecError> {
    value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(key, value))
}

fn parse_window(value: &str) -> Result<Window, FitSpecError> {
    if value == "all" {
        return Ok(Window::All);
    }
    if let Some(fraction) = value.strip_prefix("late") {
        let fraction = match fraction.strip_prefix('@') {
            Some(f) => finite("window", f)?,
            None if fraction.is_empty() => 0.5,
            None => return Err(bad("window", value)),
        };
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(bad("window", value));
        }
        return Ok(Window::Late { fraction });
    }
    let (lo, hi) = value.split_once("..").ok_or_else(|| bad("window", value))?;
    let (lo, hi) = (finite("window", lo)?, finite("window", hi)?);
    if lo > hi {
        return Err(bad("window", value));
    }
    Ok(Window::Time { lo, hi })
}

fn render_window(w: Window) -> String {
    match w {
        Window::All => "all".into(),
        Window::Late { fraction } => format!("late@{fraction}"),
        Window::Time { lo, hi } => format!("{lo}..{hi}"),
    }
}

impl FromStr for FitSpec {
    type Err = FitSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.trim().split(':');
        let kind_str = parts.next().filter(|k| !k.is_empty()).ok_or(FitSpecError::Shape)?;
        let column = parts.next().filter(|c| !c.is_empty()).ok_or(FitSpecError::Shape)?;
        let kind = FitKind::parse(kind_str).ok_or_else(|| FitSpecError::Kind(kind_str.into()))?;
        let column_ok = match kind {
            FitKind::Gaussian => column == "prob",
            _ => SERIES_COLUMNS.contains(&column),
        };
        if !column_ok {
            return Err(FitSpecError::Column(column.into()));
        }
        let mut spec = FitSpec {
            kind,
            column: column.into(),
            window: kind.default_window(),
            growth_rate: None,
            envelope: EnvelopeKind::PureExponential,
            sign: CosineSign::MinusCosine,
            gamma: GammaMode::default(),
        };
        for option in parts {
            let (key, value) = option.split_once('=').ok_or(FitSpecError::Shape)?;
            if !kind.accepts(key) {
                return Err(FitSpecError::Option { kind: kind.name(), key: key.into() });
            }
            match key {
                "window" => spec.window = parse_window(value)?,
                "g" => spec.growth_rate = Some(finite(key, value)?),
                "envelope" => {
                    spec.envelope = match value {
                        "exp" => EnvelopeKind::PureExponential,
                        "exp_power" => EnvelopeKind::ExponentialTimesPower,
                        _ => return Err(bad(key, value)),
                    }
                }
                "sign" => {
                    spec.sign = match value {
                        "minus" => CosineSign::MinusCosine,
                        "plus" => CosineSign::PlusCosine,
                        _ => return Err(bad(key, value)),
                    }
                }
                "gamma" => {
                    spec.gamma = match value.strip_prefix("free") {
                        Some("") => GammaMode::Free(0.01),
                        Some(seed) => GammaMode::Free(finite(key, seed.strip_prefix('@').ok_or_else(|| bad(key, value))?)?),
                        None => GammaMode::Fixed(finite(key, value)?),
                    }
                }
                _ => unreachable!("accepts() admitted an unhandled key"),
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for FitSpec {
    /// Canonical form, with every applicable option spelled out.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.column)?;
        if self.kind.accepts("window") {
            write!(f, ":window={}", render_window(self.window))?;
        }
        if let Some(g) = self.growth_rate {
            write!(f, ":g={g}")?;
        }
        if self.kind == FitKind::Damped {
            let envelope = match self.envelope {
                EnvelopeKind::PureExponential => "exp",
                EnvelopeKind::ExponentialTimesPower => "exp_power",
            };
            let sign = match self.sign {
                CosineSign::MinusCosine => "minus",
                CosineSign::PlusCosine => "plus",
            };
            write!(f, ":envelope={envelope}:sign={sign}")?;
            match self.gamma {
                GammaMode::Fixed(g) => write!(f, ":gamma={g}")?,
                GammaMode::Free(g) => write!(f, ":gamma=free@{g}")?,
            }
        }
        Ok(())
    }
}
