//! Damped-cosine and double-exponential fits for the resonant regime.
//!
//! The damped cosine is fitted in stages: exponential asymptote, then the
//! oscillation frequency from the residual periodogram, then a linear
//! projection for amplitude and phase over a scan of decay times, and only
//! then a joint nonlinear refinement of all parameters.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{minimize, LmOptions};
use super::spectrum::estimate_frequency;
use super::{check_series, r_squared, FitError, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `A·exp(-t/τ)`
    PureExponential,
    /// `A·exp(-t/τ)·(2/(πt))^{1/4}`
    ExponentialTimesPower,
}

impl EnvelopeKind {
    pub fn eval(self, t: f64, amplitude: f64, decay_time: f64) -> f64 {
        let base = amplitude * (-t / decay_time).exp();
        match self {
            EnvelopeKind::PureExponential => base,
            EnvelopeKind::ExponentialTimesPower => base * (2.0 / (PI * t)).powf(0.25),
        }
    }
}

/// Whether the oscillation enters as `asymptote - envelope·cos` (momentum,
/// kinetic and total energy) or `asymptote + envelope·cos` (potential energy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CosineSign {
    MinusCosine,
    PlusCosine,
}

impl CosineSign {
    fn factor(self) -> f64 {
        match self {
            CosineSign::MinusCosine => -1.0,
            CosineSign::PlusCosine => 1.0,
        }
    }
}

/// Growth rate `γ` of the phase shift `t_c = t₀ + D·exp(γt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    Fixed(f64),
    /// Free parameter, seeded with the given value.
    Free(f64),
}

impl Default for GammaMode {
    fn default() -> Self {
        GammaMode::Fixed(0.01)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DampedCosineOptions {
    pub gamma: GammaMode,
    pub window: Window,
}

/// `y(t) = s + B·exp(-t/μ) ± env(t)·cos[ω(t - t₀ - D·exp(γt))]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampedCosineFit {
    pub saturation: f64,
    pub asymptote_coeff: f64,
    pub asymptote_rate: f64,
    pub amplitude_scale: f64,
    pub decay_time: f64,
    pub envelope_kind: EnvelopeKind,
    pub omega_c: f64,
    pub t0: f64,
    pub d_shift: f64,
    pub gamma: f64,
    pub sign: CosineSign,
    pub r_squared: f64,
    pub iterations: usize,
}

impl DampedCosineFit {
    pub fn asymptote(&self, t: f64) -> f64 {
        self.saturation + self.asymptote_coeff * (-t / self.asymptote_rate).exp()
    }

    pub fn oscillation(&self, t: f64) -> f64 {
        let tc = self.t0 + self.d_shift * (self.gamma * t).exp();
        self.sign.factor()
            * self.envelope_kind.eval(t, self.amplitude_scale, self.decay_time)
            * (self.omega_c * (t - tc)).cos()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.asymptote(t) + self.oscillation(t)
    }
}

fn least_squares(design: &DMatrix<f64>, y: &[f64]) -> Option<DVector<f64>> {
    let svd = design.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    svd.solve(&DVector::from_column_slice(y), tol).ok()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

pub fn fit_damped_cosine(
    t: &[f64],
    y: &[f64],
    envelope: EnvelopeKind,
    sign: CosineSign,
    options: DampedCosineOptions,
) -> Result<DampedCosineFit, FitError> {
    let (t, y) = options.window.apply(t, y)?;
    let (t, y): (Vec<f64>, Vec<f64>) = match envelope {
        EnvelopeKind::PureExponential => (t.to_vec(), y.to_vec()),
        // The power-law factor is singular at t = 0.
        EnvelopeKind::ExponentialTimesPower => t.iter().zip(y).filter(|(&tv, _)| tv > 0.0).unzip(),
    };
    check_series(&t, &y, 64)?;

    let freq = estimate_frequency(&t, &y)?;
    let omega = freq.omega;
    let span = (t[t.len() - 1] - t[0]).abs().max(1.0);
    // The asymptote is parametrized from the window start, and its rate is
    // kept above two sample spacings so it cannot collapse onto one point.
    let t_ref = t[0];
    let mu_min = 2.0 * span / (t.len() - 1) as f64;
    let mu = freq.trend.rate.max(1.5 * mu_min);

    // Seed amplitude, phase and asymptote jointly for each trial decay time.
    let mut best: Option<(f64, f64, DVector<f64>)> = None;
    for tau in log_grid(2.0, 20.0 * span, 80) {
        let mut design = DMatrix::zeros(t.len(), 4);
        for (i, &tv) in t.iter().enumerate() {
            let env = envelope.eval(tv, 1.0, tau);
            let (s, c) = (omega * tv).sin_cos();
            design[(i, 0)] = 1.0;
            design[(i, 1)] = (-(tv - t_ref) / mu).exp();
            design[(i, 2)] = env * c;
            design[(i, 3)] = env * s;
        }
        let Some(coef) = least_squares(&design, &y) else { continue };
        let fitted = &design * &coef;
        let ss: f64 = fitted.iter().zip(&y).map(|(f, v)| (f - v).powi(2)).sum();
        if best.as_ref().is_none_or(|b| ss < b.0) {
            best = Some((ss, tau, coef));
        }
    }
    let (_, tau, coef) = best.ok_or(FitError::NonConvergence {
        what: "damped cosine seed",
        iterations: 0,
        last_iterate: String::new(),
    })?;
    let amplitude = coef[2].hypot(coef[3]).max(f64::MIN_POSITIVE);
    let phase = coef[3].atan2(coef[2]);
    let shift = match sign {
        CosineSign::PlusCosine => phase,
        CosineSign::MinusCosine => phase + PI,
    };
    let t0 = shift.rem_euclid(2.0 * PI) / omega;
    let (gamma0, free_gamma) = match options.gamma {
        GammaMode::Fixed(g) => (g, false),
        GammaMode::Free(g) => (g, true),
    };

    let rate_of = |p: &[f64]| mu_min + p[2].exp();
    let unpack = |p: &[f64]| DampedCosineFit {
        saturation: p[0],
        asymptote_coeff: p[1] * (t_ref / rate_of(p)).exp(),
        asymptote_rate: rate_of(p),
        amplitude_scale: p[3].exp(),
        decay_time: p[4].exp(),
        envelope_kind: envelope,
        omega_c: p[5],
        t0: p[6],
        d_shift: p[7],
        gamma: if free_gamma { p[8] } else { gamma0 },
        sign,
        r_squared: 0.0,
        iterations: 0,
    };
    let mut x0 = vec![
        coef[0],
        coef[1],
        (mu - mu_min).ln(),
        amplitude.ln(),
        tau.ln(),
        omega,
        t0,
        0.0,
    ];
    if free_gamma {
        x0.push(gamma0);
    }
    let outcome = minimize(
        |p, r| {
            let model = unpack(p);
            let rate = rate_of(p);
            for ((ri, &tv), &yv) in r.iter_mut().zip(&t).zip(&y) {
                let asymptote = p[0] + p[1] * (-(tv - t_ref) / rate).exp();
                *ri = asymptote + model.oscillation(tv) - yv;
            }
        },
        &x0,
        t.len(),
        LmOptions::default(),
    );
    let mut fit = unpack(&outcome.params);
    fit.r_squared = r_squared(&y, t.iter().map(|&tv| fit.eval(tv)));
    fit.iterations = outcome.iterations;
    if !outcome.converged || !fit.r_squared.is_finite() {
        return Err(FitError::NonConvergence {
            what: "damped cosine",
            iterations: outcome.iterations,
            last_iterate: serde_json::to_string(&fit).unwrap_or_default(),
        });
    }
    Ok(fit)
}

/// `y = saturation - a1·exp(-t/mu1) - a2·exp(-t/mu2)` with `mu1 < mu2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleExponentialFit {
    pub saturation: f64,
    pub a1: f64,
    pub mu1: f64,
    pub a2: f64,
    pub mu2: f64,
    pub r_squared: f64,
    /// False when the data only support a single exponential (or none), in
    /// which case `mu2` carries no information.
    pub second_rate_identified: bool,
}

impl DoubleExponentialFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.saturation - self.a1 * (-t / self.mu1).exp() - self.a2 * (-t / self.mu2).exp()
    }
}

/// Linear coefficients and residual sum of squares for fixed rates.
fn project_rates(t: &[f64], y: &[f64], mu1: f64, mu2: f64) -> Option<(DVector<f64>, f64)> {
    let mut design = DMatrix::zeros(t.len(), 3);
    for (i, &tv) in t.iter().enumerate() {
        design[(i, 0)] = 1.0;
        design[(i, 1)] = -(-tv / mu1).exp();
        design[(i, 2)] = -(-tv / mu2).exp();
    }
    let coef = least_squares(&design, y)?;
    let fitted = &design * &coef;
    let ss = fitted.iter().zip(y).map(|(f, v)| (f - v).powi(2)).sum();
    Some((coef, ss))
}

pub fn fit_double_exponential(t: &[f64], y: &[f64]) -> Result<DoubleExponentialFit, FitError> {
    check_series(t, y, 8)?;
    let span = (t[t.len() - 1] - t[0]).abs().max(1.0);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) {
        return Ok(DoubleExponentialFit {
            saturation: mean,
            a1: 0.0,
            mu1: span,
            a2: 0.0,
            mu2: 10.0 * span,
            r_squared: 1.0,
            second_rate_identified: false,
        });
    }

    let grid: Vec<f64> = log_grid(span / 200.0, span * 50.0, 48).collect();
    let mut best = (f64::INFINITY, grid[0], grid[1]);
    for (i, &m1) in grid.iter().enumerate() {
        for &m2 in &grid[i + 1..] {
            if let Some((_, ss)) = project_rates(t, y, m1, m2) {
                if ss < best.0 {
                    best = (ss, m1, m2);
                }
            }
        }
    }
    let residuals = |p: &[f64], r: &mut [f64]| {
        let (m1, m2) = (p[0].exp(), p[1].exp());
        match project_rates(t, y, m1, m2) {
            Some((c, _)) => {
                for ((ri, &tv), &yv) in r.iter_mut().zip(t).zip(y) {
                    *ri = c[0] - c[1] * (-tv / m1).exp() - c[2] * (-tv / m2).exp() - yv;
                }
            }
            None => r.iter_mut().for_each(|v| *v = f64::NAN),
        }
    };
    let outcome = minimize(residuals, &[best.1.ln(), best.2.ln()], t.len(), LmOptions::default());
    let (mut m1, mut m2) = (outcome.params[0].exp(), outcome.params[1].exp());
    let (coef, _) = project_rates(t, y, m1, m2).ok_or(FitError::NonConvergence {
        what: "double exponential",
        iterations: outcome.iterations,
        last_iterate: format!("{{\"mu1\":{m1},\"mu2\":{m2}}}"),
    })?;
    let (mut a1, mut a2) = (coef[1], coef[2]);
    if m1 > m2 {
        std::mem::swap(&mut m1, &mut m2);
        std::mem::swap(&mut a1, &mut a2);
    }
    let mut fit = DoubleExponentialFit {
        saturation: coef[0],
        a1,
        mu1: m1,
        a2,
        mu2: m2,
        r_squared: 0.0,
        second_rate_identified: false,
    };
    fit.r_squared = r_squared(y, t.iter().map(|&tv| fit.eval(tv)));
    let (small, large) = (a1.abs().min(a2.abs()), a1.abs().max(a2.abs()));
    fit.second_rate_identified = small > 1e-3 * large && m2 > 1.05 * m1;
    if !outcome.converged {
        return Err(FitError::NonConvergence {
            what: "double exponential",
            iterations: outcome.iterations,
            last_iterate: serde_json::to_string(&fit).unwrap_or_default(),
        });
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(range: std::ops::RangeInclusive<usize>) -> Vec<f64> {
        range.map(|i| i as f64).collect()
    }

    fn generator(envelope: EnvelopeKind, amplitude: f64, tau: f64) -> DampedCosineFit {
        DampedCosineFit {
            saturation: 16.0,
            asymptote_coeff: 4.0,
            asymptote_rate: 40.0,
            amplitude_scale: amplitude,
            decay_time: tau,
            envelope_kind: envelope,
            omega_c: 4.0 * PI / 15.0,
            t0: 2.0,
            d_shift: 0.3,
            gamma: 0.01,
            sign: CosineSign::MinusCosine,
            r_squared: 1.0,
            iterations: 0,
        }
    }

    #[test]
    fn recovers_pure_exponential_envelope() {
        let truth = generator(EnvelopeKind::PureExponential, 16.5, 66.0);
        let t = times(0..=500);
        let y: Vec<f64> = t.iter().map(|&v| truth.eval(v)).collect();
        let fit = fit_damped_cosine(
            &t,
            &y,
            EnvelopeKind::PureExponential,
            CosineSign::MinusCosine,
            DampedCosineOptions::default(),
        )
        .unwrap();
        assert!((fit.decay_time - 66.0).abs() / 66.0 < 0.05, "{fit:?}");
        assert!((fit.omega_c - truth.omega_c).abs() / truth.omega_c < 0.01, "{fit:?}");
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn recovers_power_envelope() {
        let truth = generator(EnvelopeKind::ExponentialTimesPower, 30.0, 600.0);
        let t = times(1..=600);
        let y: Vec<f64> = t.iter().map(|&v| truth.eval(v)).collect();
        let fit = fit_damped_cosine(
            &t,
            &y,
            EnvelopeKind::ExponentialTimesPower,
            CosineSign::MinusCosine,
            DampedCosineOptions::default(),
        )
        .unwrap();
        assert!((fit.decay_time - 600.0).abs() / 600.0 < 0.10, "{fit:?}");
    }

    #[test]
    fn plus_sign_recovered() {
        let mut truth = generator(EnvelopeKind::PureExponential, 50.0, 66.0);
        truth.sign = CosineSign::PlusCosine;
        let t = times(0..=400);
        let y: Vec<f64> = t.iter().map(|&v| truth.eval(v)).collect();
        let fit = fit_damped_cosine(
            &t,
            &y,
            EnvelopeKind::PureExponential,
            CosineSign::PlusCosine,
            DampedCosineOptions { gamma: GammaMode::Free(0.01), window: Window::All },
        )
        .unwrap();
        assert!(fit.r_squared > 0.9999, "{fit:?}");
        assert!((fit.decay_time - 66.0).abs() / 66.0 < 0.01);
    }

    #[test]
    fn zero_amplitude_is_rejected_upstream() {
        let t = times(0..=200);
        let y = vec![5.0; t.len()];
        assert!(matches!(
            fit_damped_cosine(
                &t,
                &y,
                EnvelopeKind::PureExponential,
                CosineSign::MinusCosine,
                DampedCosineOptions::default()
            ),
            Err(FitError::NoPeak { .. })
        ));
    }

    #[test]
    fn double_exponential_rates() {
        let t = times(0..=3000);
        let y: Vec<f64> = t
            .iter()
            .map(|&v| 900.0 - 500.0 * (-v / 323.0).exp() - 400.0 * (-v / 2730.0).exp())
            .collect();
        let fit = fit_double_exponential(&t, &y).unwrap();
        assert!((fit.mu1 - 323.0).abs() / 323.0 < 0.1, "{fit:?}");
        assert!((fit.mu2 - 2730.0).abs() / 2730.0 < 0.1, "{fit:?}");
        assert!(fit.second_rate_identified);
    }

    #[test]
    fn double_exponential_nested_and_constant() {
        let t = times(0..=400);
        let y: Vec<f64> = t.iter().map(|&v| 10.0 - 6.0 * (-v / 50.0).exp()).collect();
        let fit = fit_double_exponential(&t, &y).unwrap();
        assert!(fit.r_squared > 0.999999);
        assert!(!fit.second_rate_identified, "{fit:?}");

        let flat = fit_double_exponential(&t, &vec![3.5; t.len()]).unwrap();
        assert_eq!((flat.a1, flat.a2, flat.saturation), (0.0, 0.0, 3.5));
    }
}
