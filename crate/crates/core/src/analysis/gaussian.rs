use serde::{Deserialize, Serialize};

use super::lm::{minimize, LmOptions};
use super::{r_squared, FitError};

/// `ρ(x) ≈ amplitude · exp(-(x - center)² / sigma)`.
///
/// `sigma` follows the convention of the plotted fits: it is the full
/// denominator of the exponent, i.e. twice the variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub center: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub r_squared: f64,
}

impl GaussianFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (-(x - self.center).powi(2) / self.sigma).exp()
    }
}

/// Moment-seeded, least-squares refined Gaussian fit of a sampled density.
///
/// If refinement fails, does worse than the moment estimate, or runs off to
/// a width larger than the sampled span (a flat density), the moment
/// estimate is returned with its own `r_squared`.
pub fn fit_gaussian(x: &[f64], density: &[f64]) -> Result<GaussianFit, FitError> {
    if x.len() != density.len() {
        return Err(FitError::LengthMismatch(x.len(), density.len()));
    }
    if x.iter().chain(density).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    if density.iter().filter(|&&w| w > 0.0).count() < 2 {
        return Err(FitError::DegenerateDensity);
    }
    let mass: f64 = density.iter().map(|w| w.max(0.0)).sum();
    let center = x.iter().zip(density).map(|(a, w)| a * w.max(0.0)).sum::<f64>() / mass;
    let variance = x
        .iter()
        .zip(density)
        .map(|(a, w)| (a - center).powi(2) * w.max(0.0))
        .sum::<f64>()
        / mass;
    if !(variance > 0.0) {
        return Err(FitError::DegenerateDensity);
    }
    let amplitude = density.iter().cloned().fold(f64::MIN, f64::max);
    let with_r2 = |center: f64, sigma: f64, amplitude: f64| {
        let mut fit = GaussianFit { center, sigma, amplitude, r_squared: 0.0 };
        fit.r_squared = r_squared(density, x.iter().map(|&v| fit.eval(v)));
        fit
    };
    let seed = with_r2(center, 2.0 * variance, amplitude);

    // Refine (center, ln sigma, ln amplitude); the log keeps both positive.
    let outcome = minimize(
        |p, r| {
            let (c, s, a) = (p[0], p[1].exp(), p[2].exp());
            for ((ri, &xi), &wi) in r.iter_mut().zip(x).zip(density) {
                *ri = a * (-(xi - c).powi(2) / s).exp() - wi;
            }
        },
        &[seed.center, seed.sigma.ln(), seed.amplitude.ln()],
        x.len(),
        LmOptions::default(),
    );
    let p = &outcome.params;
    let refined = with_r2(p[0], p[1].exp(), p[2].exp());
    let (lo, hi) = x.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    if refined.sigma.is_finite()
        && (0.5 * refined.sigma).sqrt() <= span
        && refined.amplitude.is_finite()
        && refined.r_squared >= seed.r_squared
    {
        Ok(refined)
    } else {
        Ok(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn recovers_own_model() {
        let x: Vec<f64> = (0..400).map(|i| -20.0 + 0.1 * i as f64).collect();
        let truth = GaussianFit { center: 3.2, sigma: 1.7, amplitude: 0.04, r_squared: 1.0 };
        let rho: Vec<f64> = x.iter().map(|&v| truth.eval(v)).collect();
        let fit = fit_gaussian(&x, &rho).unwrap();
        assert!((fit.center - 3.2).abs() < 1e-6, "{fit:?}");
        assert!((fit.sigma - 1.7).abs() < 1e-6, "{fit:?}");
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn uniform_density_scores_low() {
        let n = 256;
        let x: Vec<f64> = (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect();
        let rho = vec![1.0 / n as f64; n];
        let fit = fit_gaussian(&x, &rho).unwrap();
        assert!(fit.r_squared < 0.5, "{fit:?}");
        assert!(fit.sigma > 0.0);
    }

    #[test]
    fn rejects_point_support() {
        let x = [0.0, 1.0, 2.0];
        assert_eq!(fit_gaussian(&x, &[0.0, 1.0, 0.0]), Err(FitError::DegenerateDensity));
        assert_eq!(fit_gaussian(&x, &[0.0, 0.0, 0.0]), Err(FitError::DegenerateDensity));
    }
}
