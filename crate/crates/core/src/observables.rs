//! Expectation values and probability densities.
//!
//! Every expectation is divided by the current norm, so records are correct
//! whether or not the state has been renormalized.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::FloquetParams;
use crate::grid::{GridError, LatticeGrid, WaveFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("state has zero or non-finite norm")]
    ZeroNorm,
}

/// One row of the per-kick time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: usize,
    pub log_norm_growth: f64,
    pub p_mean: f64,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_tot: f64,
    /// `⟨p²⟩ - ⟨p⟩²`.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySnapshot {
    pub t: usize,
    /// `(p_m, |ψ_m|²/𝒩)`.
    pub momentum_density: Vec<(f64, f64)>,
    /// `(θ_j, |ψ(θ_j)|²/𝒩_θ)`, normalized as a discrete distribution.
    pub coordinate_density: Vec<(f64, f64)>,
}

fn checked_norm(total: f64) -> Result<f64, ObservableError> {
    if total.is_finite() && total > 0.0 {
        Ok(total)
    } else {
        Err(ObservableError::ZeroNorm)
    }
}

pub fn measure(
    state: &WaveFunction,
    params: &FloquetParams,
    grid: &LatticeGrid,
    t: usize,
) -> Result<ObservableRecord, ObservableError> {
    grid.check_len(state.len())?;
    let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
    for (a, &p) in state.amplitudes.iter().zip(grid.momenta()) {
        let w = a.norm_sqr();
        w0 += w;
        w1 += w * p;
        w2 += w * p * p;
    }
    let n = checked_norm(w0)?;
    let p_mean = w1 / n;
    let p2 = w2 / n;

    let coords = grid.to_coordinate(&state.amplitudes)?;
    let (mut c0, mut c2) = (0.0, 0.0);
    for (v, &th) in coords.iter().zip(grid.thetas()) {
        let w = v.norm_sqr();
        c0 += w;
        c2 += w * th * th;
    }
    let theta2 = c2 / checked_norm(c0)?;

    let e_kin = 0.5 * p2;
    let e_pot = 0.5 * params.eta * params.eta * theta2;
    Ok(ObservableRecord {
        t,
        log_norm_growth: state.log_norm_growth,
        p_mean,
        e_kin,
        e_pot,
        e_tot: e_kin + e_pot,
        width: p2 - p_mean * p_mean,
    })
}

pub fn snapshot(
    state: &WaveFunction,
    grid: &LatticeGrid,
    t: usize,
) -> Result<DensitySnapshot, ObservableError> {
    grid.check_len(state.len())?;
    let n = checked_norm(state.norm_sqr())?;
    let momentum_density = grid
        .momenta()
        .iter()
        .zip(&state.amplitudes)
        .map(|(&p, a)| (p, a.norm_sqr() / n))
        .collect();
    let coords = grid.to_coordinate(&state.amplitudes)?;
    let nc = checked_norm(coords.iter().map(|v| v.norm_sqr()).sum())?;
    let coordinate_density = grid
        .thetas()
        .iter()
        .zip(&coords)
        .map(|(&th, v)| (th, v.norm_sqr() / nc))
        .collect();
    Ok(DensitySnapshot {
        t,
        momentum_density,
        coordinate_density,
    })
}
