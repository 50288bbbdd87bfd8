//! Open-system squeezing with resonator damping and qubit decoherence.

use nems_squeeze_core::lindblad::{
    continuous_vs_pulsed, fig2a_experiment, fig2b_sweep, Fig2Config, STEP_CONSISTENCY_TOL,
};

#[test]
fn reference_run_is_structurally_sound_and_turns_around() {
    let c = Fig2Config::paper_defaults();
    let run = fig2a_experiment(&c).unwrap();
    let st = run.outcome.stats;
    assert!(st.max_trace_error <= 1e-8, "{st:?}");
    assert!(st.max_hermiticity <= 1e-9, "{st:?}");
    assert!(st.min_eigenvalue >= -1e-7, "{st:?}");
    assert!(st.max_edge_population <= c.edge_tol);

    let min = run.min_dx_norm();
    assert!(min < 0.95, "{min}");
    let last = run.trajectory().last().unwrap().dx_norm;
    assert!(last > min * (1.0 + STEP_CONSISTENCY_TOL));

    let res = run.min_resonator_state().unwrap();
    assert_eq!(res.dim(), c.fock_dim);
    assert!((res.trace().re - 1.0).abs() < 1e-12);
}

#[test]
fn squeezing_rate_follows_qubit_polarization_early_on() {
    let c = Fig2Config::paper_defaults();
    let run = fig2a_experiment(&c).unwrap();
    let rows = &run.trajectory().rows;
    for k in 1..rows.len() - 1 {
        if rows[k].t > 25e-9 {
            break;
        }
        let slope = (rows[k + 1].dx_norm.ln() - rows[k - 1].dx_norm.ln()) / (rows[k + 1].t - rows[k - 1].t);
        let expected = -c.lambda * rows[k].sx;
        assert!((slope / expected - 1.0).abs() < 0.1, "t = {:e}: {slope:e} vs {expected:e}", rows[k].t);
    }
}

#[test]
fn strong_dephasing_suppresses_squeezing() {
    let mut c = Fig2Config::paper_defaults();
    c.gamma_phi_override = Some(100.0 * c.lambda);
    c.t_final = 40e-9;
    let run = fig2a_experiment(&c).unwrap();
    assert!(run.min_dx_norm() >= 0.95, "{}", run.min_dx_norm());
}

#[test]
fn weaker_dephasing_squeezes_more() {
    let c = Fig2Config::paper_defaults();
    let pts = fig2b_sweep(&c, &[0.3 * c.lambda, 3.0 * c.lambda], 1).unwrap();
    assert!(pts[0].min_dx_norm < pts[1].min_dx_norm, "{pts:?}");
}

#[test]
fn pulsed_echo_matches_continuous_model() {
    let mut c = Fig2Config::paper_defaults();
    c.t_final = 60e-9;
    let cmp = continuous_vs_pulsed(&c, 1e-3).unwrap();
    assert_eq!(cmp.pulsed.rows.len(), cmp.continuous.rows.len());
    assert!(cmp.max_relative_deviation < 1e-4, "{:e}", cmp.max_relative_deviation);
}
