//! Momentum/coordinate lattice and the spectral transform between the two
//! representations.
//!
//! Momentum amplitudes are stored with `m` ascending from `-D/2`. Coordinate
//! samples live on `θ_j = -π + 2πj/D`. The transform is
//!
//! ```text
//! ψ(θ_j) = Σ_m ψ_m e^{imθ_j} / √(2π)
//! ```
//!
//! so that `Σ_m |ψ_m|²` is the physical norm and the coordinate density
//! integrates with quadrature weight `2π/D`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size {0} must be even and at least 8")]
    InvalidSize(usize),
    #[error("hbar_eff must be positive and finite, got {0}")]
    InvalidHbar(f64),
    #[error("vector length {actual} does not match grid size {expected}")]
    SizeMismatch { expected: usize, actual: usize },
}

/// Discretized momentum lattice `p_m = m·ħ_eff` and its dual coordinate grid.
///
/// Immutable after construction; FFT plans are shared behind `Arc`, so cloning
/// is cheap and the grid can be shared across threads.
#[derive(Clone)]
pub struct LatticeGrid {
    size: usize,
    hbar_eff: f64,
    momenta: Vec<f64>,
    thetas: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for LatticeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeGrid")
            .field("size", &self.size)
            .field("hbar_eff", &self.hbar_eff)
            .finish()
    }
}

impl LatticeGrid {
    pub fn new(size: usize, hbar_eff: f64) -> Result<Self, GridError> {
        if size < 8 || size % 2 != 0 {
            return Err(GridError::InvalidSize(size));
        }
        if !(hbar_eff.is_finite() && hbar_eff > 0.0) {
            return Err(GridError::InvalidHbar(hbar_eff));
        }
        let half = (size / 2) as i64;
        let momenta = (0..size as i64)
            .map(|k| (k - half) as f64 * hbar_eff)
            .collect();
        let step = 2.0 * PI / size as f64;
        let thetas = (0..size).map(|j| -PI + step * j as f64).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        Ok(Self {
            size,
            hbar_eff,
            momenta,
            thetas,
            forward,
            inverse,
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn hbar_eff(&self) -> f64 {
        self.hbar_eff
    }

    /// Momentum quantum number stored at `index`.
    #[inline]
    pub fn m_at(&self, index: usize) -> i64 {
        index as i64 - (self.size / 2) as i64
    }

    /// Storage index of momentum quantum number `m`, if it lies on the grid.
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let k = m + (self.size / 2) as i64;
        (0..self.size as i64).contains(&k).then_some(k as usize)
    }

    pub fn m_indices(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.size).map(|k| self.m_at(k))
    }

    /// Momentum eigenvalues `p_m = m·ħ_eff`, ascending.
    #[inline]
    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    /// Coordinate samples `θ_j ∈ [-π, π)`.
    #[inline]
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Quadrature weight `2π/D` of one coordinate sample.
    #[inline]
    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<(), GridError> {
        if len != self.size {
            return Err(GridError::SizeMismatch {
                expected: self.size,
                actual: len,
            });
        }
        Ok(())
    }

    /// Unnormalized inverse DFT in place: `x_j ← Σ_k x_k e^{+2πikj/D}`.
    pub(crate) fn raw_inverse(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, scratch);
    }

    /// Unnormalized forward DFT in place: `x_k ← Σ_j x_j e^{-2πikj/D}`.
    pub(crate) fn raw_forward(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(data, scratch);
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Evaluates the momentum amplitudes on the coordinate grid.
    pub fn to_coordinate(&self, amplitudes: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.check_len(amplitudes.len())?;
        // e^{imθ_j} = (-1)^m (-1)^j e^{2πikj/D} with k = m + D/2.
        let mut buf: Vec<Complex64> = amplitudes
            .iter()
            .enumerate()
            .map(|(k, &a)| if self.m_at(k) % 2 == 0 { a } else { -a })
            .collect();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.raw_inverse(&mut buf, &mut scratch);
        let scale = 1.0 / (2.0 * PI).sqrt();
        for (j, v) in buf.iter_mut().enumerate() {
            *v *= if j % 2 == 0 { scale } else { -scale };
        }
        Ok(buf)
    }

    /// Inverse of [`LatticeGrid::to_coordinate`].
    pub fn from_coordinate(&self, values: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.check_len(values.len())?;
        let mut buf: Vec<Complex64> = values
            .iter()
            .enumerate()
            .map(|(j, &v)| if j % 2 == 0 { v } else { -v })
            .collect();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.raw_forward(&mut buf, &mut scratch);
        let scale = (2.0 * PI).sqrt() / self.size as f64;
        for (k, a) in buf.iter_mut().enumerate() {
            *a *= if self.m_at(k) % 2 == 0 { scale } else { -scale };
        }
        Ok(buf)
    }
}

/// State vector in the momentum eigenbasis plus the running log of all norm
/// factors removed by renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub amplitudes: Vec<Complex64>,
    pub log_norm_growth: f64,
}

impl WaveFunction {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        Self {
            amplitudes,
            log_norm_growth: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// `Σ_m |ψ_m|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Divides by the current norm, folds `ln(norm)` into the growth log and
    /// returns the norm that was removed.
    pub fn renormalize(&mut self) -> f64 {
        let norm = self.norm_sqr().sqrt();
        let inv = 1.0 / norm;
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        self.log_norm_growth += norm.ln();
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(grid: &LatticeGrid, m: i64) -> Vec<Complex64> {
        let mut v = vec![Complex64::default(); grid.size()];
        v[grid.index_of(m).unwrap()] = Complex64::new(1.0, 0.0);
        v
    }

    fn pseudo_random_state(n: usize, seed: u64) -> Vec<Complex64> {
        // splitmix64; deterministic without pulling in an RNG crate
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / norm).collect()
    }

    #[test]
    fn small_grid_layout() {
        let g = LatticeGrid::new(8, 0.1).unwrap();
        assert_eq!(g.m_indices().collect::<Vec<_>>(), vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        assert!((g.momenta()[0] + 0.4).abs() < 1e-15);
        assert!((g.momenta()[7] - 0.3).abs() < 1e-15);
        assert_eq!(g.thetas()[0], -PI);
        assert!(g.thetas()[4].abs() < 1e-15);
    }

    #[test]
    fn large_grid_momentum_range() {
        let g = LatticeGrid::new(1 << 15, 0.1).unwrap();
        assert!((g.momenta()[0] + 1638.4).abs() < 1e-9);
        assert!((g.momenta()[(1 << 15) - 1] - 1638.3).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(LatticeGrid::new(7, 0.1).unwrap_err(), GridError::InvalidSize(7));
        assert_eq!(LatticeGrid::new(6, 0.1).unwrap_err(), GridError::InvalidSize(6));
        assert!(matches!(LatticeGrid::new(8, 0.0), Err(GridError::InvalidHbar(_))));
        assert!(matches!(LatticeGrid::new(8, -1.0), Err(GridError::InvalidHbar(_))));
        let g = LatticeGrid::new(8, 0.1).unwrap();
        assert!(matches!(
            g.to_coordinate(&[Complex64::default(); 4]),
            Err(GridError::SizeMismatch { expected: 8, actual: 4 })
        ));
        assert!(g.from_coordinate(&[Complex64::default(); 10]).is_err());
    }

    #[test]
    fn ground_state_is_flat() {
        let g = LatticeGrid::new(64, 0.1).unwrap();
        let c = g.to_coordinate(&basis(&g, 0)).unwrap();
        let expected = 1.0 / (2.0 * PI).sqrt();
        for v in &c {
            assert!((v.re - expected).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn first_excited_state_is_plane_wave() {
        let g = LatticeGrid::new(64, 0.1).unwrap();
        let c = g.to_coordinate(&basis(&g, 1)).unwrap();
        for (v, &th) in c.iter().zip(g.thetas()) {
            let expected = Complex64::from_polar(1.0 / (2.0 * PI).sqrt(), th);
            assert!((v - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_waves_map_back_to_single_index() {
        let g = LatticeGrid::new(64, 0.1).unwrap();
        let flat = vec![Complex64::new(1.0 / (2.0 * PI).sqrt(), 0.0); 64];
        let a = g.from_coordinate(&flat).unwrap();
        for (k, v) in a.iter().enumerate() {
            let expected = if g.m_at(k) == 0 { 1.0 } else { 0.0 };
            assert!((v - expected).norm() < 1e-14);
        }
        let wave: Vec<_> = g
            .thetas()
            .iter()
            .map(|&th| Complex64::from_polar(1.0, 2.0 * th))
            .collect();
        let a = g.from_coordinate(&wave).unwrap();
        for (k, v) in a.iter().enumerate() {
            if g.m_at(k) == 2 {
                assert!(v.norm() > 1.0);
            } else {
                assert!(v.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for &n in &[8usize, 64, 1 << 12, 1 << 17] {
            let g = LatticeGrid::new(n, 0.1).unwrap();
            let psi = pseudo_random_state(n, n as u64);
            let c = g.to_coordinate(&psi).unwrap();
            let quad: f64 = c.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dtheta();
            assert!((quad - 1.0).abs() < 1e-12, "parseval at D={n}: {quad}");
            let back = g.from_coordinate(&c).unwrap();
            let err = psi
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "round trip at D={n}: {err}");
            let again = g.to_coordinate(&g.from_coordinate(&c).unwrap()).unwrap();
            let err = c
                .iter()
                .zip(&again)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn renormalize_tracks_log_norm() {
        let mut wf = WaveFunction::from_amplitudes(vec![Complex64::new(3.0, 4.0); 1]);
        assert_eq!(wf.log_norm_growth, 0.0);
        let removed = wf.renormalize();
        assert!((removed - 5.0).abs() < 1e-15);
        assert!((wf.log_norm_growth - 5f64.ln()).abs() < 1e-15);
        assert!((wf.norm_sqr() - 1.0).abs() < 1e-15);
    }
}
