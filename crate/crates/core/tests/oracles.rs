//! Physics checks against references computed independently of the
//! propagator: series and recurrence Bessel functions, and a dense
//! eigendecomposition of the discretized harmonic Hamiltonian.

use std::f64::consts::{E, PI};

mod common;

use common::{bessel_j, dense_harmonic, ln_bessel_i0, max_diff, test_state};
use num_complex::Complex64;
use ptkho::analysis::{kick_matrix_elements, potential_matrix_elements};
use ptkho::evolution::{floquet_step, harmonic_apply, initial_state, kick_apply};
use ptkho::{FloquetParams, LatticeGrid, RunConfig};

fn params(k: f64, lambda: f64, eta: f64, substeps: usize) -> FloquetParams {
    FloquetParams { kick_strength: k, lambda, eta, hbar_eff: 0.1, substeps }
}

#[test]
fn bessel_reference_is_sane() {
    // Tabulated J_0(1), J_1(1) and the small-argument J_1(x) ≈ x/2.
    assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
    assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
    assert!((bessel_j(1, 1e-3) - 5e-4).abs() < 1e-10);
    assert!((ln_bessel_i0(1.0) - 1.266_065_877_752_008_4f64.ln()).abs() < 1e-14);
}

#[test]
fn hermitian_kick_matches_jacobi_anger() {
    let table = kick_matrix_elements(&params(5.0, 0.0, 2.0 * PI / (E * E), 100), 10).unwrap();
    for delta in -10i64..=10 {
        let expected = Complex64::new(0.0, -1.0).powi(delta as i32) * bessel_j(delta, 50.0);
        let got = table.element(delta).unwrap();
        assert!((got - expected).norm() < 1e-8, "delta={delta}: {got} vs {expected}");
    }
}

#[test]
fn non_hermitian_kick_matches_modified_jacobi_anger() {
    // exp(-iκ(cosθ + iλ sinθ)) = Σ (-i)^Δ ((1+λ)/(1-λ))^{Δ/2} J_Δ(κ√(1-λ²)) e^{iΔθ}.
    for (k, lambda) in [(0.5, 0.5), (1.0, 0.3)] {
        let kappa: f64 = k / 0.1;
        let table = kick_matrix_elements(&params(k, lambda, 2.0 * PI, 100), 10).unwrap();
        let ratio = ((1.0 + lambda) / (1.0 - lambda)).sqrt();
        for delta in -10i64..=10 {
            let expected = Complex64::new(0.0, -1.0).powi(delta as i32)
                * ratio.powi(delta as i32)
                * bessel_j(delta, kappa * (1.0 - lambda * lambda).sqrt());
            let got = table.element(delta).unwrap();
            assert!(
                (got - expected).norm() < 1e-8 * expected.norm().max(1.0),
                "K={k} lambda={lambda} delta={delta}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn potential_elements_are_exact() {
    for lambda in [0.0, 0.01, 0.5, 1.0, 3.0] {
        let (forward, backward) = potential_matrix_elements(lambda);
        assert!((forward - Complex64::new((1.0 + lambda) / 2.0, 0.0)).norm() < 1e-12);
        assert!((backward - Complex64::new((1.0 - lambda) / 2.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn weak_non_hermitian_kick_favors_forward_hop() {
    let table = kick_matrix_elements(&params(0.1, 0.5, 2.0 * PI, 100), 1).unwrap();
    assert!(table.element(1).unwrap().norm() > table.element(-1).unwrap().norm());
}

#[test]
fn kick_norm_growth_matches_bessel_i0() {
    // ‖U_K φ_0‖² = (1/2π)∫ e^{2κλ sinθ} dθ = I_0(2κλ).
    let grid = LatticeGrid::new(1 << 12, 0.1).unwrap();
    for lambda in [0.01, 0.5, 1.0] {
        let p = params(5.0, lambda, 2.0 * PI, 100);
        let kicked = kick_apply(&initial_state(&grid), &p, &grid).unwrap();
        let expected = ln_bessel_i0(2.0 * 50.0 * lambda);
        let got = kicked.norm_sqr().ln();
        assert!((got - expected).abs() < 1e-10 * expected.abs().max(1.0), "{got} vs {expected}");

        let mut config = RunConfig::new(p, 1);
        config.edge_guard = 0.5;
        let stepped = floquet_step(&initial_state(&grid), &config, &grid).unwrap();
        assert!((stepped.log_norm_growth - 0.5 * expected).abs() < 1e-9 * expected.abs().max(1.0));
        assert!((stepped.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn strang_split_converges_to_dense_exponential() {
    let grid = LatticeGrid::new(32, 0.1).unwrap();
    let eta = 2.0 * PI;
    let exact_u = dense_harmonic(&grid, eta);
    let state = test_state(&grid);
    let exact: Vec<Complex64> =
        (&exact_u * nalgebra::DVector::from_column_slice(&state.amplitudes)).iter().copied().collect();
    let errors: Vec<f64> = [128, 256, 512, 1024]
        .iter()
        .map(|&n| {
            let out = harmonic_apply(&state, &params(0.0, 0.0, eta, n), &grid).unwrap();
            max_diff(&out.amplitudes, &exact)
        })
        .collect();
    for pair in errors.windows(2) {
        assert!(pair[0] / pair[1] > 3.5, "{errors:?}");
    }
    let order = (errors[0] / errors[3]).log2() / 3.0;
    assert!((1.8..2.5).contains(&order), "observed order {order} from {errors:?}");
    assert!(errors[3] < 2e-5, "{errors:?}");
}

#[test]
fn substep_refinement_shrinks_at_second_order() {
    let grid = LatticeGrid::new(1 << 12, 0.1).unwrap();
    let p = params(5.0, 0.5, 2.0 * PI, 100);
    let mut kicked = kick_apply(&initial_state(&grid), &p, &grid).unwrap();
    kicked.renormalize();
    let run = |n: usize| harmonic_apply(&kicked, &FloquetParams { substeps: n, ..p }, &grid).unwrap();
    let (a, b, c) = (run(400), run(800), run(1600));
    let coarse = max_diff(&a.amplitudes, &b.amplitudes);
    let fine = max_diff(&b.amplitudes, &c.amplitudes);
    assert!((3.0..5.0).contains(&(coarse / fine)), "{coarse} then {fine}");
    assert!(fine < 1e-3, "{fine}");
}
