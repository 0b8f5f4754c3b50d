//! Reference computations shared by the oracle and acceptance tests. None of
//! them call into the propagator.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use ptkho::{LatticeGrid, WaveFunction};

/// `J_n(x)` for `0 ≤ n ≤ n_max` by Miller's backward recurrence, normalized
/// with `J_0 + 2ΣJ_{2k} = 1`.
pub fn bessel_j_table(x: f64, n_max: usize) -> Vec<f64> {
    let start = 2 * (n_max + x as usize + 40);
    let mut out = vec![0.0; n_max + 1];
    let (mut above, mut here) = (0.0f64, 1e-300f64);
    let mut even_sum = 0.0;
    for n in (0..start).rev() {
        // J_{n-1} = (2n/x) J_n - J_{n+1}, stepping from n+1 down to n.
        let below = 2.0 * (n + 1) as f64 / x * here - above;
        above = here;
        here = below;
        if here.abs() > 1e250 {
            let s = 1e-250;
            here *= s;
            above *= s;
            even_sum *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
        if n <= n_max {
            out[n] = here;
        }
        if n % 2 == 0 && n > 0 {
            even_sum += 2.0 * here;
        }
    }
    let norm = here + even_sum;
    out.iter().map(|v| v / norm).collect()
}

pub fn bessel_j(n: i64, x: f64) -> f64 {
    let j = bessel_j_table(x, n.unsigned_abs() as usize)[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -j
    } else {
        j
    }
}

/// `ln I_0(x)` from its power series, whose terms are all positive.
pub fn ln_bessel_i0(x: f64) -> f64 {
    let ln_half = (x / 2.0).ln();
    let terms: Vec<f64> = (0..2000)
        .scan(0.0, |ln_fact, k| {
            if k > 0 {
                *ln_fact += (k as f64).ln();
            }
            Some(2.0 * k as f64 * ln_half - 2.0 * *ln_fact)
        })
        .collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// `exp(-iH/ħ)` for `H = p²/2 + η²θ²/2` on the grid, with the potential
/// built through the grid transform and exponentiated by eigendecomposition.
pub fn dense_harmonic(grid: &LatticeGrid, eta: f64) -> DMatrix<Complex64> {
    let d = grid.size();
    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for col in 0..d {
        let mut e = vec![Complex64::default(); d];
        e[col] = Complex64::new(1.0, 0.0);
        let mut coords = grid.to_coordinate(&e).unwrap();
        for (v, th) in coords.iter_mut().zip(grid.thetas()) {
            *v *= 0.5 * eta * eta * th * th;
        }
        let back = grid.from_coordinate(&coords).unwrap();
        for (row, v) in back.into_iter().enumerate() {
            h[(row, col)] += v;
        }
        h[(col, col)] += 0.5 * grid.momenta()[col].powi(2);
    }
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|ev| {
        Complex64::from_polar(1.0, -ev / grid.hbar_eff())
    }));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

pub fn test_state(grid: &LatticeGrid) -> WaveFunction {
    let amps = grid
        .m_indices()
        .map(|m| {
            let m = m as f64;
            Complex64::from_polar((-m * m / 18.0).exp(), 0.3 * m)
        })
        .collect();
    let mut state = WaveFunction::from_amplitudes(amps);
    state.renormalize();
    state
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
