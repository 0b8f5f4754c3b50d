use serde::{Deserialize, Serialize};

use super::{check_series, r_squared, FitError, Window};

/// `y = slope·t + intercept`; `slope` is the current growth rate `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// `y = prefactor·t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    pub r_squared: f64,
}

/// `E ≈ ½G²t² + C` with `G` held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticEnergyFit {
    pub growth_rate: f64,
    pub offset: f64,
    /// Largest `|E - model| / |E|` over the late half of the window.
    pub relative_residual: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64), FitError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * n {
        return Err(FitError::DegenerateWindow);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

pub fn fit_linear(t: &[f64], y: &[f64], window: Window) -> Result<LinearFit, FitError> {
    let (t, y) = window.apply(t, y)?;
    check_series(t, y, 3)?;
    let (slope, intercept) = ols(t, y)?;
    Ok(LinearFit {
        slope,
        intercept,
        r_squared: r_squared(y, t.iter().map(|&v| slope * v + intercept)),
    })
}

/// Least squares on `(ln t, ln y)`; `r_squared` is reported in log space.
pub fn fit_power_law(t: &[f64], y: &[f64], window: Window) -> Result<PowerLawFit, FitError> {
    let (t, y) = window.apply(t, y)?;
    check_series(t, y, 3)?;
    if let Some((&tv, &yv)) = t.iter().zip(y).find(|(&tv, &yv)| tv <= 0.0 || yv <= 0.0) {
        return Err(FitError::NonPositive { t: tv, value: yv.min(tv) });
    }
    let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (exponent, ln_prefactor) = ols(&lt, &ly)?;
    Ok(PowerLawFit {
        prefactor: ln_prefactor.exp(),
        exponent,
        r_squared: r_squared(&ly, lt.iter().map(|&v| exponent * v + ln_prefactor)),
    })
}

pub fn fit_quadratic_energy(
    t: &[f64],
    e: &[f64],
    growth_rate: f64,
    window: Window,
) -> Result<QuadraticEnergyFit, FitError> {
    let (t, e) = window.apply(t, e)?;
    check_series(t, e, 3)?;
    let ballistic = |tv: f64| 0.5 * growth_rate * growth_rate * tv * tv;
    let offset = t.iter().zip(e).map(|(&tv, &ev)| ev - ballistic(tv)).sum::<f64>() / t.len() as f64;
    let late = t.len() / 2;
    let relative_residual = t[late..]
        .iter()
        .zip(&e[late..])
        .map(|(&tv, &ev)| {
            let diff = (ev - ballistic(tv) - offset).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / ev.abs()
            }
        })
        .fold(0.0, f64::max);
    Ok(QuadraticEnergyFit {
        growth_rate,
        offset,
        relative_residual,
    })
}

/// Mean forward difference `Δp/Δt` over the late half of the series.
pub fn drift_force(t: &[f64], p: &[f64]) -> Result<f64, FitError> {
    check_series(t, p, 2)?;
    let start = (t.len() / 2).min(t.len() - 2);
    let diffs: Vec<f64> = t[start..]
        .windows(2)
        .zip(p[start..].windows(2))
        .map(|(tw, pw)| {
            let dt = tw[1] - tw[0];
            if dt == 0.0 {
                Err(FitError::DegenerateWindow)
            } else {
                Ok((pw[1] - pw[0]) / dt)
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(diffs.iter().sum::<f64>() / diffs.len() as f64)
}
