//! Closed-system squeezing: echo law, Bogoliubov transform, RWA.

use nems_squeeze_core::dynamics::{
    measured_kappa, run_schedule, rwa_fidelity, squeeze_resonator, PulseSchedule,
};
use nems_squeeze_core::hilbert::{annihilation, qubit_x_state, HilbertConfig, StateVector};

fn squeeze_error(kappa: f64, kappa_step: f64, sign: f64) -> f64 {
    let d = 40;
    let cfg = HilbertConfig::new(d).unwrap();
    let initial = qubit_x_state(sign).kron(&StateVector::basis(d, 0)).projector();
    let schedule = PulseSchedule::for_kappa(kappa, kappa_step, 5e6).unwrap();
    let traj = run_schedule(&schedule, &initial, &cfg).unwrap();
    traj.last().unwrap().dx_norm / (-sign * kappa).exp() - 1.0
}

#[test]
fn exponential_law_and_second_order_convergence() {
    let coarse = squeeze_error(0.3, 1e-3, 1.0);
    let fine = squeeze_error(0.3, 5e-4, 1.0);
    assert!(coarse.abs() < 0.01, "{coarse:e}");
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
}

#[test]
fn antisqueezing_for_opposite_qubit_state() {
    let d = 40;
    let cfg = HilbertConfig::new(d).unwrap();
    let initial = qubit_x_state(-1.0).kron(&StateVector::basis(d, 0)).projector();
    let schedule = PulseSchedule::for_kappa(0.3, 1e-3, 5e6).unwrap();
    let traj = run_schedule(&schedule, &initial, &cfg).unwrap();
    let k = measured_kappa(traj.last().unwrap().dx_norm);
    assert!((k + 0.3).abs() < 3e-3, "{k}");
}

fn bogoliubov_residual(kappa: f64, compute_dim: usize, block: usize) -> f64 {
    let a = annihilation(compute_dim).unwrap();
    let s = squeeze_resonator(kappa, compute_dim).unwrap();
    let lhs = s.adjoint().dot(&a).dot(&s);
    let rhs = &a.scale_real(kappa.cosh()) - &a.adjoint().scale_real(kappa.sinh());
    (&lhs - &rhs).leading_block(block).max_abs()
}

#[test]
fn bogoliubov_holds_on_padded_computation() {
    for kappa in [0.25, 0.5] {
        let r = bogoliubov_residual(kappa, 160, 36);
        assert!(r < 1e-6, "kappa {kappa}: {r:e}");
    }
}

#[test]
fn bogoliubov_holds_where_truncation_leakage_is_small() {
    let d = 40;
    for kappa in [0.25, 0.5] {
        let s = squeeze_resonator(kappa, d).unwrap();
        let leak = |n: usize| s.get(d - 1, n).norm_sqr() + s.get(d - 2, n).norm_sqr();
        let interior = (1..=d).take_while(|&m| leak(m - 1) <= 1e-7).last().unwrap();
        assert!(interior >= 4, "kappa {kappa}: interior {interior}");
        let r = bogoliubov_residual(kappa, d, interior);
        assert!(r < 1e-6, "kappa {kappa}, block {interior}: {r:e}");
    }
}

#[test]
fn truncated_squeeze_is_dirty_near_the_edge() {
    // Levels close to the cutoff feel the truncation at order one.
    assert!(bogoliubov_residual(0.25, 40, 36) > 1.0);
}

#[test]
fn rwa_fidelity_ladder() {
    let cfg = HilbertConfig::new(20).unwrap();
    let f: Vec<f64> = [0.0, 0.003, 0.01, 0.03]
        .iter()
        .map(|r| rwa_fidelity(*r, 5, &cfg).unwrap().fidelity)
        .collect();
    assert!((f[0] - 1.0).abs() < 1e-9);
    assert!(f[2] >= 0.999, "{}", f[2]);
    assert!(f.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{f:?}");
}
