//! Floquet evolution: the complex kick `U_K`, the Strang-split harmonic
//! propagator `U_ω`, renormalization after each period and the multi-kick
//! run loop.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, LatticeGrid, WaveFunction};
use crate::observables::{measure, snapshot, DensitySnapshot, ObservableError, ObservableRecord};

pub const DEFAULT_SUBSTEPS: usize = 100;
pub const DEFAULT_EDGE_GUARD: f64 = 1e-8;

/// Fraction of the momentum indices, split evenly between both ends, that
/// the edge guard watches.
pub const EDGE_BAND_FRACTION: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("params hbar_eff {params} does not match grid hbar_eff {grid}")]
    HbarMismatch { params: f64, grid: f64 },
    #[error(
        "kick overflow: non-finite amplitudes for K={kick_strength}, lambda={lambda}, \
         hbar_eff={hbar_eff} (K*lambda/hbar_eff = {})",
        kick_strength * lambda / hbar_eff
    )]
    Overflow {
        kick_strength: f64,
        lambda: f64,
        hbar_eff: f64,
    },
    #[error(
        "grid too small: probability {probability:e} in the outer momentum band exceeds \
         edge guard {limit:e}"
    )]
    EdgeGuard { probability: f64, limit: f64 },
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("at kick {kick}: {source}")]
    AtKick {
        kick: usize,
        #[source]
        source: Box<EvolutionError>,
    },
}

impl EvolutionError {
    /// The innermost error, with any kick annotation stripped.
    pub fn root(&self) -> &EvolutionError {
        match self {
            EvolutionError::AtKick { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Dimensionless physics parameters of the kicked oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetParams {
    /// Real kicking strength `K`.
    pub kick_strength: f64,
    /// Imaginary (non-Hermitian) kicking strength.
    pub lambda: f64,
    /// Oscillator frequency `η = 2π·ω/Ω`.
    pub eta: f64,
    pub hbar_eff: f64,
    /// Strang substeps inside `U_ω`, each of length `1/N`.
    pub substeps: usize,
}

impl FloquetParams {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(EvolutionError::InvalidParams(format!(
                    "{name} must be finite and non-negative, got {v}"
                )))
            }
        };
        finite_nonneg("K", self.kick_strength)?;
        finite_nonneg("lambda", self.lambda)?;
        finite_nonneg("eta", self.eta)?;
        if !(self.hbar_eff.is_finite() && self.hbar_eff > 0.0) {
            return Err(EvolutionError::InvalidParams(format!(
                "hbar_eff must be positive, got {}",
                self.hbar_eff
            )));
        }
        if self.substeps == 0 {
            return Err(EvolutionError::InvalidParams("substeps must be at least 1".into()));
        }
        Ok(())
    }

    fn check_grid(&self, grid: &LatticeGrid) -> Result<(), EvolutionError> {
        self.validate()?;
        if self.hbar_eff != grid.hbar_eff() {
            return Err(EvolutionError::HbarMismatch {
                params: self.hbar_eff,
                grid: grid.hbar_eff(),
            });
        }
        Ok(())
    }

    fn overflow(&self) -> EvolutionError {
        EvolutionError::Overflow {
            kick_strength: self.kick_strength,
            lambda: self.lambda,
            hbar_eff: self.hbar_eff,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: FloquetParams,
    pub total_kicks: usize,
    pub renormalize: bool,
    pub snapshot_times: BTreeSet<usize>,
    pub edge_guard: f64,
}

impl RunConfig {
    pub fn new(params: FloquetParams, total_kicks: usize) -> Self {
        Self {
            params,
            total_kicks,
            renormalize: true,
            snapshot_times: BTreeSet::new(),
            edge_guard: DEFAULT_EDGE_GUARD,
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        self.params.validate()?;
        if !(self.edge_guard > 0.0 && self.edge_guard < 1.0) {
            return Err(EvolutionError::InvalidParams(format!(
                "edge_guard must lie in (0, 1), got {}",
                self.edge_guard
            )));
        }
        if let Some(&last) = self.snapshot_times.iter().next_back() {
            if last > self.total_kicks {
                return Err(EvolutionError::InvalidParams(format!(
                    "snapshot time {last} exceeds total_kicks {}",
                    self.total_kicks
                )));
            }
        }
        Ok(())
    }
}

/// Receives the per-kick output of [`run`].
pub trait ObservableSink {
    fn record(&mut self, record: &ObservableRecord);
    fn snapshot(&mut self, _snapshot: DensitySnapshot) {}
}

/// Sink that keeps everything in memory.
#[derive(Debug, Default, Clone)]
pub struct RunTrace {
    pub records: Vec<ObservableRecord>,
    pub snapshots: Vec<DensitySnapshot>,
}

impl ObservableSink for RunTrace {
    fn record(&mut self, record: &ObservableRecord) {
        self.records.push(*record);
    }

    fn snapshot(&mut self, snapshot: DensitySnapshot) {
        self.snapshots.push(snapshot);
    }
}

impl<F: FnMut(&ObservableRecord)> ObservableSink for F {
    fn record(&mut self, record: &ObservableRecord) {
        self(record)
    }
}

/// `|φ_0⟩`: unit amplitude at `m = 0`.
pub fn initial_state(grid: &LatticeGrid) -> WaveFunction {
    let mut amplitudes = vec![Complex64::default(); grid.size()];
    amplitudes[grid.size() / 2] = Complex64::new(1.0, 0.0);
    WaveFunction::from_amplitudes(amplitudes)
}

/// Precomputed diagonal factors for one parameter set on one grid.
///
/// Internally the state is held in a "twisted" layout `x_k = (-1)^m ψ_m`, in
/// which the grid transform reduces to a bare DFT pair. Every factor is
/// diagonal, so the sign twist commutes with all of them and is applied once
/// on entry and once on exit.
pub struct FloquetPropagator {
    grid: LatticeGrid,
    params: FloquetParams,
    kick: Vec<Complex64>,
    potential: Vec<Complex64>,
    kinetic_half: Vec<Complex64>,
    kinetic_full: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FloquetPropagator {
    pub fn new(params: FloquetParams, grid: &LatticeGrid) -> Result<Self, EvolutionError> {
        params.check_grid(grid)?;
        let hbar = params.hbar_eff;
        let inv_d = 1.0 / grid.size() as f64;
        let kick: Vec<Complex64> = grid
            .thetas()
            .iter()
            .map(|&th| {
                let (s, c) = th.sin_cos();
                let gain = (params.kick_strength * params.lambda * s / hbar).exp();
                Complex64::from_polar(gain * inv_d, -params.kick_strength * c / hbar)
            })
            .collect();
        if kick.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(params.overflow());
        }
        let dt = 1.0 / params.substeps as f64;
        let eta2 = params.eta * params.eta;
        let potential = grid
            .thetas()
            .iter()
            .map(|&th| Complex64::from_polar(inv_d, -eta2 * th * th * 0.5 * dt / hbar))
            .collect();
        let kinetic_half = grid
            .momenta()
            .iter()
            .map(|&p| Complex64::from_polar(1.0, -p * p * 0.25 * dt / hbar))
            .collect();
        let kinetic_full = grid
            .momenta()
            .iter()
            .map(|&p| Complex64::from_polar(1.0, -p * p * 0.5 * dt / hbar))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            params,
            kick,
            potential,
            kinetic_half,
            kinetic_full,
            scratch: vec![Complex64::default(); grid.scratch_len()],
        })
    }

    pub fn params(&self) -> &FloquetParams {
        &self.params
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    fn twist(&self, data: &mut [Complex64]) {
        // (-1)^m with m = k - D/2; D/2 parity fixes which k flip.
        let offset = (self.grid.size() / 2) % 2;
        for (k, a) in data.iter_mut().enumerate() {
            if (k + offset) % 2 == 1 {
                *a = -*a;
            }
        }
    }

    fn apply_in_coordinates(&mut self, data: &mut [Complex64], factor: &[Complex64]) {
        self.grid.raw_inverse(data, &mut self.scratch);
        for (a, f) in data.iter_mut().zip(factor) {
            *a *= f;
        }
        self.grid.raw_forward(data, &mut self.scratch);
    }

    fn kick_twisted(&mut self, data: &mut [Complex64]) -> Result<(), EvolutionError> {
        let kick = std::mem::take(&mut self.kick);
        self.apply_in_coordinates(data, &kick);
        self.kick = kick;
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(self.params.overflow());
        }
        Ok(())
    }

    fn harmonic_twisted(&mut self, data: &mut [Complex64]) {
        let potential = std::mem::take(&mut self.potential);
        for step in 0..self.params.substeps {
            // Adjacent half kinetic steps of consecutive Strang sweeps fuse.
            let kinetic = if step == 0 {
                &self.kinetic_half
            } else {
                &self.kinetic_full
            };
            for (a, f) in data.iter_mut().zip(kinetic) {
                *a *= f;
            }
            self.apply_in_coordinates(data, &potential);
        }
        for (a, f) in data.iter_mut().zip(&self.kinetic_half) {
            *a *= f;
        }
        self.potential = potential;
    }

    /// Applies `U_K` in place. The result is not renormalized.
    pub fn kick(&mut self, state: &mut WaveFunction) -> Result<(), EvolutionError> {
        self.grid.check_len(state.len())?;
        self.twist(&mut state.amplitudes);
        let out = self.kick_twisted(&mut state.amplitudes);
        self.twist(&mut state.amplitudes);
        out
    }

    /// Applies the split-step `U_ω` in place.
    pub fn harmonic(&mut self, state: &mut WaveFunction) -> Result<(), EvolutionError> {
        self.grid.check_len(state.len())?;
        self.twist(&mut state.amplitudes);
        self.harmonic_twisted(&mut state.amplitudes);
        self.twist(&mut state.amplitudes);
        Ok(())
    }

    /// One Floquet period: kick, then harmonic evolution, then (optionally)
    /// renormalization.
    pub fn step(&mut self, state: &mut WaveFunction, renormalize: bool) -> Result<(), EvolutionError> {
        self.grid.check_len(state.len())?;
        self.twist(&mut state.amplitudes);
        let kicked = self.kick_twisted(&mut state.amplitudes);
        if kicked.is_ok() {
            self.harmonic_twisted(&mut state.amplitudes);
        }
        self.twist(&mut state.amplitudes);
        kicked?;
        if renormalize {
            let norm = state.renormalize();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(self.params.overflow());
            }
        }
        Ok(())
    }
}

/// Probability fraction held in the outermost `EDGE_BAND_FRACTION` of the
/// momentum indices (half at each end).
pub fn edge_probability(state: &WaveFunction) -> f64 {
    let n = state.len();
    let band = ((n as f64 * EDGE_BAND_FRACTION / 2.0) as usize).max(1);
    let total = state.norm_sqr();
    let outer: f64 = state.amplitudes[..band]
        .iter()
        .chain(&state.amplitudes[n - band..])
        .map(|a| a.norm_sqr())
        .sum();
    outer / total
}

pub fn kick_apply(
    state: &WaveFunction,
    params: &FloquetParams,
    grid: &LatticeGrid,
) -> Result<WaveFunction, EvolutionError> {
    let mut out = state.clone();
    FloquetPropagator::new(*params, grid)?.kick(&mut out)?;
    Ok(out)
}

pub fn harmonic_apply(
    state: &WaveFunction,
    params: &FloquetParams,
    grid: &LatticeGrid,
) -> Result<WaveFunction, EvolutionError> {
    let mut out = state.clone();
    FloquetPropagator::new(*params, grid)?.harmonic(&mut out)?;
    Ok(out)
}

/// One Floquet period including the edge-guard check.
pub fn floquet_step(
    state: &WaveFunction,
    config: &RunConfig,
    grid: &LatticeGrid,
) -> Result<WaveFunction, EvolutionError> {
    config.validate()?;
    let mut prop = FloquetPropagator::new(config.params, grid)?;
    let mut out = state.clone();
    guarded_step(&mut prop, &mut out, config)?;
    Ok(out)
}

fn guarded_step(
    prop: &mut FloquetPropagator,
    state: &mut WaveFunction,
    config: &RunConfig,
) -> Result<(), EvolutionError> {
    prop.step(state, config.renormalize)?;
    let probability = edge_probability(state);
    if !(probability <= config.edge_guard) {
        return Err(EvolutionError::EdgeGuard {
            probability,
            limit: config.edge_guard,
        });
    }
    Ok(())
}

/// Evolves `|φ_0⟩` for `total_kicks` periods, emitting one record per kick
/// (including `t = 0`) and density snapshots at the configured times.
pub fn run<S: ObservableSink + ?Sized>(
    config: &RunConfig,
    grid: &LatticeGrid,
    sink: &mut S,
) -> Result<WaveFunction, EvolutionError> {
    config.validate()?;
    let mut prop = FloquetPropagator::new(config.params, grid)?;
    let mut state = initial_state(grid);
    let at = |kick: usize| move |e: EvolutionError| EvolutionError::AtKick {
        kick,
        source: Box::new(e),
    };
    emit(&state, config, grid, 0, sink).map_err(at(0))?;
    for t in 1..=config.total_kicks {
        guarded_step(&mut prop, &mut state, config).map_err(at(t))?;
        emit(&state, config, grid, t, sink).map_err(at(t))?;
    }
    Ok(state)
}

fn emit<S: ObservableSink + ?Sized>(
    state: &WaveFunction,
    config: &RunConfig,
    grid: &LatticeGrid,
    t: usize,
    sink: &mut S,
) -> Result<(), EvolutionError> {
    sink.record(&measure(state, &config.params, grid, t)?);
    if config.snapshot_times.contains(&t) {
        sink.snapshot(snapshot(state, grid, t)?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(k: f64, lambda: f64, eta: f64) -> FloquetParams {
        FloquetParams {
            kick_strength: k,
            lambda,
            eta,
            hbar_eff: 0.1,
            substeps: DEFAULT_SUBSTEPS,
        }
    }

    #[test]
    fn initial_state_is_momentum_ground_state() {
        let g = LatticeGrid::new(8, 0.1).unwrap();
        let s = initial_state(&g);
        let expected: Vec<f64> = vec![0., 0., 0., 0., 1., 0., 0., 0.];
        assert_eq!(s.amplitudes.iter().map(|a| a.re).collect::<Vec<_>>(), expected);
        assert_eq!(s.log_norm_growth, 0.0);
    }

    #[test]
    fn zero_kick_is_identity() {
        let g = LatticeGrid::new(64, 0.1).unwrap();
        let mut s = initial_state(&g);
        s.amplitudes[30] = Complex64::new(0.3, -0.2);
        let out = kick_apply(&s, &params(0.0, 2.0, 1.0), &g).unwrap();
        for (a, b) in s.amplitudes.iter().zip(&out.amplitudes) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_kick_preserves_norm() {
        let g = LatticeGrid::new(1024, 0.1).unwrap();
        let out = kick_apply(&initial_state(&g), &params(5.0, 0.0, 1.0), &g).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_evolution_is_pure_phase() {
        let g = LatticeGrid::new(64, 0.1).unwrap();
        let mut s = initial_state(&g);
        for (k, a) in s.amplitudes.iter_mut().enumerate() {
            *a = Complex64::new(1.0 / (1.0 + k as f64), 0.5);
        }
        let out = harmonic_apply(&s, &params(0.0, 0.0, 0.0), &g).unwrap();
        for ((a, b), &p) in s.amplitudes.iter().zip(&out.amplitudes).zip(g.momenta()) {
            let expected = a * Complex64::from_polar(1.0, -p * p / (2.0 * 0.1));
            assert!((b - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn kick_overflow_is_reported() {
        let g = LatticeGrid::new(64, 0.1).unwrap();
        let err = kick_apply(&initial_state(&g), &params(50.0, 3.0, 1.0), &g).unwrap_err();
        assert!(matches!(err, EvolutionError::Overflow { .. }));
        assert!(err.to_string().contains("lambda=3"));
    }

    #[test]
    fn hbar_mismatch_is_rejected() {
        let g = LatticeGrid::new(64, 0.2).unwrap();
        assert!(matches!(
            FloquetPropagator::new(params(5.0, 0.0, 1.0), &g),
            Err(EvolutionError::HbarMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(params(5.0, 0.0, 1.0), 10);
        c.snapshot_times.insert(11);
        assert!(c.validate().is_err());
        c.snapshot_times.clear();
        c.edge_guard = 1.0;
        assert!(c.validate().is_err());
        c.edge_guard = 1e-8;
        c.params.substeps = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_kicks_emits_single_record() {
        let g = LatticeGrid::new(64, 0.1).unwrap();
        let mut trace = RunTrace::default();
        run(&RunConfig::new(params(5.0, 3.0, 2.0 * PI), 0), &g, &mut trace).unwrap();
        assert_eq!(trace.records.len(), 1);
        let r = trace.records[0];
        assert_eq!((r.t, r.p_mean, r.e_kin, r.width), (0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn edge_guard_trips_on_tiny_grid() {
        let g = LatticeGrid::new(64, 0.1).unwrap();
        let err = run(&RunConfig::new(params(5.0, 0.0, 1.0), 5), &g, &mut RunTrace::default())
            .unwrap_err();
        match err {
            EvolutionError::AtKick { kick, source } => {
                assert_eq!(kick, 1);
                assert!(matches!(*source, EvolutionError::EdgeGuard { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parity_is_conserved_without_drive() {
        let g = LatticeGrid::new(1 << 10, 0.1).unwrap();
        let mut prop = FloquetPropagator::new(params(1.0, 0.0, 2.0 * PI / std::f64::consts::E.powi(2)), &g)
            .unwrap();
        let mut s = initial_state(&g);
        for _ in 0..20 {
            prop.step(&mut s, false).unwrap();
            for m in 1..(g.size() / 2) as i64 {
                let a = s.amplitudes[g.index_of(m).unwrap()].norm();
                let b = s.amplitudes[g.index_of(-m).unwrap()].norm();
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
