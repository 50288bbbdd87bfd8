//! Generating-function readout against independent oracles.

mod common;

use common::random_density;
use nems_squeeze_core::dynamics::squeeze_resonator;
use nems_squeeze_core::hilbert::{
    annihilation, matrix_exp, quadrature_x, thermal_state, thermal_state_truncated, DensityMatrix,
    StateVector, C64,
};
use nems_squeeze_core::measure::{
    closed_form_gf, generating_function, moments_from_gf, symmetric_grid,
    verify_protocol_equivalence, ProtocolOptions, Shots, Stencil,
};
use proptest::prelude::*;

fn exact_var(rho: &DensityMatrix) -> f64 {
    let x = quadrature_x(rho.dim()).unwrap();
    let m = rho.expect(&x).unwrap().re;
    rho.expect(&x.dot(&x)).unwrap().re - m * m
}

fn squeezed(kappa: f64, d: usize) -> DensityMatrix {
    let s = squeeze_resonator(kappa, d).unwrap();
    StateVector::basis(d, 0).transformed(&s).projector()
}

#[test]
fn random_states_satisfy_protocol_equivalence() {
    let t_grid: Vec<f64> = (0..10).map(|k| 0.05 * k as f64).collect();
    for seed in 0..10 {
        let rho = random_density(12, 6, seed);
        let r = verify_protocol_equivalence(&rho, 1.3, &t_grid).unwrap();
        assert!(r.max_deviation < 1e-9, "seed {seed}: {:e}", r.max_deviation);
    }
}

#[test]
fn coherent_state_mean_from_slope() {
    let d = 40;
    let a = annihilation(d).unwrap();
    let alpha = 0.7;
    let gen = &a.adjoint().scale_real(alpha) - &a.scale_real(alpha);
    let rho = StateVector::basis(d, 0).transformed(&matrix_exp(&gen).unwrap()).projector();
    let h = 0.05;
    let curve = generating_function(&rho, &symmetric_grid(h, 2), None, ProtocolOptions::default()).unwrap();
    let est = moments_from_gf(&curve, h, Stencil::FivePoint).unwrap();
    assert!((est.mean_x - 2.0 * alpha).abs() < 1e-4, "{}", est.mean_x);
    assert!((est.var_x - 1.0).abs() < 1e-3, "{}", est.var_x);
}

#[test]
fn three_point_stencil_is_second_order() {
    let rho = squeezed(0.3, 40);
    let truth = exact_var(&rho);
    let err = |h: f64| {
        let curve = generating_function(&rho, &symmetric_grid(h, 2), None, ProtocolOptions::default()).unwrap();
        (moments_from_gf(&curve, h, Stencil::ThreePoint).unwrap().var_x - truth).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
}

#[test]
fn sampled_curve_agrees_with_exact_within_stderr() {
    let rho = squeezed(0.5, 40);
    let grid = symmetric_grid(0.05, 2);
    let exact = generating_function(&rho, &grid, None, ProtocolOptions::default()).unwrap();
    let shots = Shots { count: 20_000, seed: 11 };
    let sampled = generating_function(&rho, &grid, Some(shots), ProtocolOptions::default()).unwrap();
    let re_se = sampled.re_stderr.as_ref().unwrap();
    let im_se = sampled.im_stderr.as_ref().unwrap();
    for i in 0..grid.len() {
        let tol_re = 5.0 * re_se[i].max(1.0 / shots.count as f64);
        let tol_im = 5.0 * im_se[i].max(1.0 / shots.count as f64);
        assert!((sampled.re[i] - exact.re[i]).abs() <= tol_re, "re at {}", grid[i]);
        assert!((sampled.im[i] - exact.im[i]).abs() <= tol_im, "im at {}", grid[i]);
    }
    let again = generating_function(&rho, &grid, Some(shots), ProtocolOptions::default()).unwrap();
    assert_eq!(sampled, again);
}

#[test]
fn thermal_truncation_stress() {
    let nbar = 1.22;
    let analytic = |k: f64| (-k * k * (2.0 * nbar + 1.0) / 2.0).exp();
    let kappas = [0.5, 1.0, 1.5, 2.0];
    let dev = |rho: &DensityMatrix| {
        kappas
            .iter()
            .map(|k| (closed_form_gf(rho, *k).unwrap() - C64::new(analytic(*k), 0.0)).norm())
            .fold(0.0, f64::max)
    };
    let wide = dev(&thermal_state(40, nbar).unwrap());
    let narrow = dev(&thermal_state_truncated(8, nbar).unwrap());
    assert!(wide < 1e-6, "d = 40: {wide:e}");
    assert!(narrow > 1e-3, "d = 8 unexpectedly accurate: {narrow:e}");
}

#[test]
fn dephasing_during_readout_damps_the_signal() {
    let rho = squeezed(0.2, 30);
    let lambda = 1.0;
    let gamma = 0.4;
    let grid = [0.3];
    let plain = generating_function(&rho, &grid, None, ProtocolOptions::default()).unwrap();
    let noisy = generating_function(&rho, &grid, None, ProtocolOptions { dephasing_rate: gamma }).unwrap();
    let t = grid[0] / (2.0 * lambda);
    let damping = (-2.0 * gamma * t).exp();
    assert!((noisy.re[0] - damping * plain.re[0]).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn characteristic_function_bounds(seed in 0u64..10_000, kappa in -3.0f64..3.0) {
        let rho = random_density(10, 5, seed);
        let g = closed_form_gf(&rho, kappa).unwrap();
        prop_assert!(g.norm() <= 1.0 + 1e-12);
        let mirrored = closed_form_gf(&rho, -kappa).unwrap();
        prop_assert!((mirrored - g.conj()).norm() < 1e-9);
    }
}
