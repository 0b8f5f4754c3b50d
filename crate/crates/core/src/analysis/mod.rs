//! Curve fits for every regime of the dynamics, frequency estimation and the
//! kick-operator hopping diagnostic.

mod damped;
mod gaussian;
mod hopping;
mod linear;
pub mod lm;
mod spectrum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use damped::{
    fit_damped_cosine, fit_double_exponential, CosineSign, DampedCosineFit, DampedCosineOptions,
    DoubleExponentialFit, EnvelopeKind, GammaMode,
};
pub use gaussian::{fit_gaussian, GaussianFit};
pub use hopping::{
    kick_matrix_element, kick_matrix_elements, potential_matrix_elements, KickMatrixTable,
    QuadratureOptions,
};
pub use linear::{
    drift_force, fit_linear, fit_power_law, fit_quadratic_energy, LinearFit, PowerLawFit,
    QuadraticEnergyFit,
};
pub use spectrum::{
    estimate_frequency, fit_asymptote, pearson, periodogram_peak, AsymptoteFit, FrequencyEstimate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate window: all abscissae equal")]
    DegenerateWindow,
    #[error("non-positive or non-finite value {value} at t={t}")]
    NonPositive { t: f64, value: f64 },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("density has zero or single-point support")]
    DegenerateDensity,
    #[error("no spectral peak above the noise floor (peak/median power {ratio:.3})")]
    NoPeak { ratio: f64 },
    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        /// Last iterate, rendered as JSON so callers can report it.
        last_iterate: String,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
}

/// Which samples of a series a fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Window {
    #[default]
    All,
    /// The trailing fraction of samples, e.g. `0.5` for the late half.
    Late { fraction: f64 },
    /// Samples with `lo ≤ t ≤ hi`.
    Time { lo: f64, hi: f64 },
}

impl Window {
    pub const LATE_HALF: Window = Window::Late { fraction: 0.5 };

    /// Selects the windowed sub-series.
    pub fn apply<'a>(&self, t: &'a [f64], y: &'a [f64]) -> Result<(&'a [f64], &'a [f64]), FitError> {
        if t.len() != y.len() {
            return Err(FitError::LengthMismatch(t.len(), y.len()));
        }
        match *self {
            Window::All => Ok((t, y)),
            Window::Late { fraction } => {
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(FitError::InvalidWindow(format!("fraction {fraction} not in (0, 1]")));
                }
                let keep = ((t.len() as f64) * fraction).ceil() as usize;
                let start = t.len() - keep.min(t.len());
                Ok((&t[start..], &y[start..]))
            }
            Window::Time { lo, hi } => {
                if !(lo <= hi) {
                    return Err(FitError::InvalidWindow(format!("empty time range {lo}..{hi}")));
                }
                let start = t.iter().position(|&v| v >= lo).unwrap_or(t.len());
                let end = t.iter().rposition(|&v| v <= hi).map_or(0, |i| i + 1);
                let end = end.max(start);
                Ok((&t[start..end], &y[start..end]))
            }
        }
    }
}

fn check_series(t: &[f64], y: &[f64], needed: usize) -> Result<(), FitError> {
    if t.len() != y.len() {
        return Err(FitError::LengthMismatch(t.len(), y.len()));
    }
    if t.len() < needed {
        return Err(FitError::TooFewPoints { needed, got: t.len() });
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(())
}

/// `1 - SS_res/SS_tot`, clamped to `[0, 1]`. A constant target yields 1 when
/// matched exactly and 0 otherwise.
pub(crate) fn r_squared(y: &[f64], model: impl Iterator<Item = f64>) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(model).map(|(v, m)| (v - m).powi(2)).sum();
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if ss_tot <= 1e-28 * scale {
        return if ss_res <= 1e-24 * scale { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}
