//! Split-operator Floquet simulation of a PT-symmetric quantum kicked
//! harmonic oscillator, with the curve fits used to characterize its
//! directed-current and resonant-oscillation regimes.

pub mod analysis;
pub mod cli;
pub mod evolution;
pub mod grid;
pub mod observables;

pub use evolution::{FloquetParams, RunConfig};
pub use grid::{LatticeGrid, WaveFunction};
pub use observables::{DensitySnapshot, ObservableRecord};
