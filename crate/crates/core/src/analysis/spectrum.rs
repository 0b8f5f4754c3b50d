//! Exponential-approach detrending and periodogram frequency estimation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_series, r_squared, FitError};

/// `y ≈ saturation + coeff·exp(-t/rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteFit {
    pub saturation: f64,
    pub coeff: f64,
    pub rate: f64,
    pub r_squared: f64,
}

impl AsymptoteFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.saturation + self.coeff * (-t / self.rate).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    /// Angular frequency per kick.
    pub omega: f64,
    /// Peak power over median power of the residual periodogram.
    pub power_ratio: f64,
    pub trend: AsymptoteFit,
}

/// Peak must stand this far above the median periodogram power.
const NOISE_FLOOR_RATIO: f64 = 10.0;
const OVERSAMPLE: f64 = 8.0;

/// `(s, B, residual sum of squares)` for `s + B·exp(-(t - t[0])/rate)`.
fn project_rate(t: &[f64], y: &[f64], rate: f64) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let t_ref = t[0];
    let (mut se, mut see, mut sy, mut sey) = (0.0, 0.0, 0.0, 0.0);
    for (&tv, &yv) in t.iter().zip(y) {
        let e = (-(tv - t_ref) / rate).exp();
        se += e;
        see += e * e;
        sy += yv;
        sey += e * yv;
    }
    let det = n * see - se * se;
    let (s, b) = if det.abs() <= 1e-12 * n * see.max(f64::MIN_POSITIVE) {
        (sy / n, 0.0)
    } else {
        ((see * sy - se * sey) / det, (n * sey - se * sy) / det)
    };
    let ss = t
        .iter()
        .zip(y)
        .map(|(&tv, &yv)| (yv - s - b * (-(tv - t_ref) / rate).exp()).powi(2))
        .sum();
    (s, b, ss)
}

/// Fits the exponential approach to saturation by scanning the rate on a
/// log grid and refining with golden-section search.
pub fn fit_asymptote(t: &[f64], y: &[f64]) -> Result<AsymptoteFit, FitError> {
    check_series(t, y, 3)?;
    let span = (t[t.len() - 1] - t[0]).abs().max(1.0);
    // Rates below two sample spacings would only fit the first point.
    let spacing = span / (t.len() - 1) as f64;
    let (lo, hi) = ((span / 200.0).max(2.0 * spacing).ln(), (span * 100.0).ln());
    let steps = 240;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let cost = |ln_rate: f64| project_rate(t, y, ln_rate.exp()).2;
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &g)| (i, cost(g)))
        .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps)]);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = cost(d);
        }
    }
    let rate = (0.5 * (a + b)).exp();
    let (saturation, coeff_at_start, _) = project_rate(t, y, rate);
    let coeff = coeff_at_start * (t[0] / rate).exp();
    let mut fit = AsymptoteFit { saturation, coeff, rate, r_squared: 0.0 };
    fit.r_squared = r_squared(y, t.iter().map(|&tv| fit.eval(tv)));
    Ok(fit)
}

/// Classical periodogram `|Σ r_k e^{-iωt_k}|²/n` on an oversampled grid.
/// Returns `(peak ω, peak/median power)`, the peak refined by a parabola
/// through the three grid points around the maximum.
pub fn periodogram_peak(t: &[f64], r: &[f64]) -> Result<(f64, f64), FitError> {
    check_series(t, r, 4)?;
    let span = (t[t.len() - 1] - t[0]).abs();
    let min_dt = t
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0 && min_dt.is_finite()) {
        return Err(FitError::DegenerateWindow);
    }
    let d_omega = 2.0 * PI / (span * OVERSAMPLE);
    let nyquist = PI / min_dt;
    let first = OVERSAMPLE as usize; // one full cycle across the window
    let last = (nyquist / d_omega).floor() as usize;
    if last <= first + 2 {
        return Err(FitError::TooFewPoints { needed: 8, got: t.len() });
    }
    let n = t.len() as f64;
    let power: Vec<f64> = (first..=last)
        .map(|k| {
            let omega = k as f64 * d_omega;
            let (mut re, mut im) = (0.0, 0.0);
            for (&tv, &rv) in t.iter().zip(r) {
                let (s, c) = (omega * tv).sin_cos();
                re += rv * c;
                im -= rv * s;
            }
            (re * re + im * im) / n
        })
        .collect();
    let (imax, &pmax) = power
        .iter()
        .enumerate()
        .fold((0, &f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut sorted = power.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let ratio = if median > 0.0 { pmax / median } else if pmax > 0.0 { f64::INFINITY } else { 0.0 };
    if !(ratio >= NOISE_FLOOR_RATIO) || imax == 0 || imax + 1 == power.len() {
        return Err(FitError::NoPeak { ratio });
    }
    let (pm, p0, pp) = (power[imax - 1], power[imax], power[imax + 1]);
    let denom = pm - 2.0 * p0 + pp;
    let shift = if denom < 0.0 { 0.5 * (pm - pp) / denom } else { 0.0 };
    let omega = ((first + imax) as f64 + shift) * d_omega;
    Ok((omega, ratio))
}

/// Detrends with [`fit_asymptote`] and locates the dominant angular
/// frequency of the residual.
pub fn estimate_frequency(t: &[f64], y: &[f64]) -> Result<FrequencyEstimate, FitError> {
    check_series(t, y, 64)?;
    let trend = fit_asymptote(t, y)?;
    let residual: Vec<f64> = t.iter().zip(y).map(|(&tv, &yv)| yv - trend.eval(tv)).collect();
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let rms = (residual.iter().map(|v| v * v).sum::<f64>() / residual.len() as f64).sqrt();
    if rms <= 1e-10 * scale {
        return Err(FitError::NoPeak { ratio: 0.0 });
    }
    let (omega, power_ratio) = periodogram_peak(t, &residual)?;
    Ok(FrequencyEstimate { omega, power_ratio, trend })
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, FitError> {
    check_series(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(FitError::DegenerateWindow);
    }
    Ok(sxy / (sxx * syy).sqrt())
}
