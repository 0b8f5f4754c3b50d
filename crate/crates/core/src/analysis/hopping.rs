//! Momentum-basis matrix elements of the one-kick operator.
//!
//! `⟨φ_m|U_K|φ_m'⟩ = (1/2π)∫ e^{-imθ} e^{-(i/ħ)K(cosθ + iλ sinθ)} e^{im'θ} dθ`
//! is evaluated by the periodic trapezoid rule, doubling the point count
//! until the table stops changing. The real exponent `Kλ sinθ/ħ` is shifted
//! by its maximum `Kλ/ħ`, which is returned separately as `log_scale`, so the
//! table stays finite for strong non-Hermitian kicks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FitError;
use crate::evolution::FloquetParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub initial_points: usize,
    pub max_points: usize,
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            initial_points: 4096,
            max_points: 1 << 22,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickMatrixTable {
    pub band: usize,
    /// `e^{-log_scale}·⟨φ_{m'+Δ}|U_K|φ_{m'}⟩` for `Δ = -band..=band`.
    pub scaled: Vec<(i64, [f64; 2])>,
    pub log_scale: f64,
    pub points: usize,
}

impl KickMatrixTable {
    /// Element at hop `Δ = m - m'`, unscaled (may overflow for huge `Kλ/ħ`).
    pub fn element(&self, delta: i64) -> Option<Complex64> {
        self.scaled
            .iter()
            .find(|(d, _)| *d == delta)
            .map(|(_, [re, im])| Complex64::new(*re, *im) * self.log_scale.exp())
    }

    /// `ln|⟨φ_{m'+Δ}|U_K|φ_{m'}⟩|`, finite even when the element overflows.
    pub fn log_magnitude(&self, delta: i64) -> Option<f64> {
        self.scaled
            .iter()
            .find(|(d, _)| *d == delta)
            .map(|(_, [re, im])| re.hypot(*im).ln() + self.log_scale)
    }
}

fn scaled_kick(params: &FloquetParams, theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    let k_over_h = params.kick_strength / params.hbar_eff;
    Complex64::from_polar(
        (k_over_h * params.lambda * (s - 1.0)).exp(),
        -k_over_h * c,
    )
}

/// Scaled elements for explicit `(m, m')` pairs at a fixed point count,
/// plus the mean integrand magnitude.
fn trapezoid(params: &FloquetParams, pairs: &[(i64, i64)], points: usize) -> (Vec<Complex64>, f64) {
    let h = 2.0 * PI / points as f64;
    let mut acc = vec![Complex64::default(); pairs.len()];
    let mut magnitude = 0.0;
    for j in 0..points {
        let theta = -PI + h * j as f64;
        let u = scaled_kick(params, theta);
        magnitude += u.norm();
        for (a, &(m, mp)) in acc.iter_mut().zip(pairs) {
            let bra = Complex64::from_polar(1.0, -(m as f64) * theta);
            let ket = Complex64::from_polar(1.0, mp as f64 * theta);
            *a += bra * u * ket;
        }
    }
    let n = points as f64;
    (acc.iter().map(|a| a / n).collect(), magnitude / n)
}

fn converged_elements(
    params: &FloquetParams,
    pairs: &[(i64, i64)],
    opts: QuadratureOptions,
) -> Result<(Vec<Complex64>, usize), FitError> {
    params
        .validate()
        .map_err(|e| FitError::InvalidParams(e.to_string()))?;
    let mut points = opts.initial_points.max(8);
    let (mut prev, _) = trapezoid(params, pairs, points);
    while points < opts.max_points {
        points *= 2;
        let (next, magnitude) = trapezoid(params, pairs, points);
        // For λ > 0 the elements are far smaller than the integrand, and the
        // cancellation between them caps the attainable relative accuracy;
        // the change is measured against whichever scale is larger.
        let scale = next
            .iter()
            .map(|z| z.norm())
            .fold(magnitude, f64::max)
            .max(f64::MIN_POSITIVE);
        let change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if change <= opts.tolerance * scale {
            return Ok((next, points));
        }
        prev = next;
    }
    Err(FitError::NonConvergence {
        what: "kick matrix quadrature",
        iterations: points,
        last_iterate: String::new(),
    })
}

/// Band of one-kick matrix elements around reference momentum `m' = 0`.
pub fn kick_matrix_elements(params: &FloquetParams, band: usize) -> Result<KickMatrixTable, FitError> {
    kick_matrix_elements_at(params, band, 0, QuadratureOptions::default())
}

/// Same table built around reference momentum `reference`; by translation
/// invariance the result does not depend on it.
pub fn kick_matrix_elements_at(
    params: &FloquetParams,
    band: usize,
    reference: i64,
    opts: QuadratureOptions,
) -> Result<KickMatrixTable, FitError> {
    if band == 0 {
        return Err(FitError::TooFewPoints { needed: 1, got: 0 });
    }
    let b = band as i64;
    let pairs: Vec<(i64, i64)> = (-b..=b).map(|d| (reference + d, reference)).collect();
    let (values, points) = converged_elements(params, &pairs, opts)?;
    Ok(KickMatrixTable {
        band,
        scaled: (-b..=b).zip(values).map(|(d, z)| (d, [z.re, z.im])).collect(),
        log_scale: params.kick_strength * params.lambda / params.hbar_eff,
        points,
    })
}

/// Single unscaled element `⟨φ_m|U_K|φ_m'⟩`.
pub fn kick_matrix_element(params: &FloquetParams, m: i64, m_prime: i64) -> Result<Complex64, FitError> {
    let (v, _) = converged_elements(params, &[(m, m_prime)], QuadratureOptions::default())?;
    Ok(v[0] * (params.kick_strength * params.lambda / params.hbar_eff).exp())
}

/// `(⟨φ_{m+1}|V|φ_m⟩, ⟨φ_{m-1}|V|φ_m⟩)` for `V = cosθ + iλ sinθ`, by
/// trapezoid quadrature (exact for this trigonometric polynomial).
pub fn potential_matrix_elements(lambda: f64) -> (Complex64, Complex64) {
    let points = 64;
    let h = 2.0 * PI / points as f64;
    let (mut forward, mut backward) = (Complex64::default(), Complex64::default());
    for j in 0..points {
        let theta = -PI + h * j as f64;
        let v = Complex64::new(theta.cos(), lambda * theta.sin());
        forward += Complex64::from_polar(1.0, -theta) * v;
        backward += Complex64::from_polar(1.0, theta) * v;
    }
    (forward / points as f64, backward / points as f64)
}
