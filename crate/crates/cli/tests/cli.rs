//! End-to-end behaviour of the command-line runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nems-squeeze");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, cmd: &str, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn summary(dir: &Path) -> String {
    fs::read_to_string(dir.join("summary.txt")).unwrap()
}

fn value(dir: &Path, key: &str) -> f64 {
    summary(dir)
        .lines()
        .find_map(|l| l.split_once('=').filter(|(k, _)| k.trim() == key).map(|(_, v)| v.trim().to_owned()))
        .unwrap_or_else(|| panic!("no `{key}` in summary"))
        .parse()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn device_report_on_reference_device() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "device-report", &configs().join("device_paper.ini"), &[]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("Quadratic"));
    let lambda = value(tmp.path(), "abs_lambda_n_rads");
    assert!((lambda / 3.9e6 - 1.0).abs() < 0.15, "{lambda}");
    assert!(stdout.contains("lambda_n_hz"));
    assert!(stdout.contains("Ex_rads"));
}

#[test]
fn half_integer_flux_is_reported_linear() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "device-report", &configs().join("device_linear.ini"), &[]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("Linear"));
}

#[test]
fn missing_key_is_a_config_error_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("device_paper.ini")).unwrap();
    let text: String = text.lines().filter(|l| !l.starts_with("Ic_A")).map(|l| format!("{l}\n")).collect();
    let cfg = write(tmp.path(), "noic.ini", &text);
    let out = run_in(&tmp.path().join("run"), "device-report", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Ic_A"));
}

#[test]
fn malformed_value_reports_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.ini", "[sim]\nunits = angular\nfock_dim = lots\n[squeeze]\nlambda_rads = 5e6\n");
    let out = run_in(&tmp.path().join("run"), "squeeze-ideal", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("bad.ini:3"));
}

#[test]
fn units_key_is_mandatory_for_bare_frequencies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "nounits.ini", "[squeeze]\nlambda = 5e6\nkappa_target = 0.3\nkappa_step = 1e-3\n");
    let out = run_in(&tmp.path().join("run"), "squeeze-ideal", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("units"));
}

#[test]
fn direct_and_device_coupling_conflict() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = fs::read_to_string(configs().join("device_paper.ini")).unwrap();
    text.push_str("\n[squeeze]\nlambda_rads = 5e6\nkappa_target = 0.3\nkappa_step = 1e-3\n");
    let cfg = write(tmp.path(), "both.ini", &text);
    let out = run_in(&tmp.path().join("run"), "squeeze-ideal", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ideal_squeezing_reaches_target() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "squeeze-ideal", &configs().join("squeeze_ideal.ini"), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let k = value(tmp.path(), "kappa_eff");
    assert!((k / 0.3 - 1.0).abs() < 0.01, "{k}");
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1 + 300);
    assert!(csv.starts_with("t_s,dx_norm,"));
}

#[test]
fn opposite_qubit_state_antisqueezes() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("squeeze_ideal.ini"))
        .unwrap()
        .replace("qubit_sign = 1", "qubit_sign = -1");
    let cfg = write(tmp.path(), "anti.ini", &text);
    let out = run_in(&tmp.path().join("run"), "squeeze-ideal", &cfg, &[]);
    assert!(out.status.success());
    let k = value(&tmp.path().join("run"), "kappa_eff");
    assert!((k + 0.3).abs() < 0.003, "{k}");
}

#[test]
fn zero_cycles_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c0.ini", "[sim]\nunits = angular\n[squeeze]\nlambda_rads = 5e6\ncycles = 0\ndt_s = 1e-10\n");
    let out = run_in(&tmp.path().join("run"), "squeeze-ideal", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn truncation_abort_keeps_summary_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "small.ini",
        "[sim]\nunits = angular\nfock_dim = 6\n[squeeze]\nlambda_rads = 5e6\nkappa_target = 1.5\nkappa_step = 1e-2\n",
    );
    let dir = tmp.path().join("run");
    let out = run_in(&dir, "squeeze-ideal", &cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    let s = summary(&dir);
    assert!(s.contains("config.sim.fock_dim = 6"));
    assert!(s.contains("derived.lambda_rads"));
    assert!(s.contains("status = error (exit 3)"));
}

#[test]
fn decoherence_free_limit_matches_ideal_echo() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "free.ini",
        "[sim]\nunits = angular\nfock_dim = 30\nt_final_s = 60e-9\nsample_every_s = 1e-9\nconvergence_check = false\n\
         [squeeze]\nlambda_rads = 5e6\n[decoherence]\nf0_Hz = 250e6\nQ = inf\nT_K = 0.02\nT1_s = inf\nT2_s = inf\n",
    );
    let open = tmp.path().join("open");
    let out = run_in(&open, "squeeze-lindblad", &cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ideal = tmp.path().join("ideal");
    let out = run_in(&ideal, "squeeze-ideal", &configs().join("squeeze_ideal.ini"), &[]);
    assert!(out.status.success());
    let a = value(&open, "final_dx_norm");
    let b = value(&ideal, "final_dx_norm");
    assert!((a / b - 1.0).abs() < 0.01, "{a} vs {b}");
}

#[test]
fn reference_run_squeezes_and_stores_minimum_state() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "squeeze-lindblad", &configs().join("fig2a.ini"), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(value(tmp.path(), "min_dx_norm") < 0.95);
    let s = summary(tmp.path());
    for key in ["derived.nbar", "derived.Nq", "derived.gamma_q", "derived.gamma_phi", "derived.gamma_n"] {
        assert!(s.contains(key), "{key}");
    }
    assert!(s.contains("check.fock_convergence = pass"));
    assert!(s.contains("rises_after_min = true"));
    assert!(tmp.path().join("rho_min.csv").is_file());
}

#[test]
fn single_rate_sweep_gives_single_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "sweep-dephasing", &configs().join("sweep.ini"), &["--rates", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("gamma_phi,min_dx_norm\n"));
    assert!(summary(tmp.path()).contains("check.monotone_in_gamma_phi = pass"));
}

#[test]
fn measure_reference_states() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("measure.ini");
    let vac = tmp.path().join("vac");
    assert!(run_in(&vac, "measure", &cfg, &["--state", "vacuum"]).status.success());
    assert!((value(&vac, "var_x") - 1.0).abs() < 1e-3);
    let sq = tmp.path().join("sq");
    assert!(run_in(&sq, "measure", &cfg, &["--state", "squeezed:0.5"]).status.success());
    assert!((value(&sq, "var_x") - (-1.0f64).exp()).abs() < 2e-3);
    let gf = fs::read_to_string(sq.join("gf.csv")).unwrap();
    assert!(gf.starts_with("kappa,re,im,re_stderr,im_stderr\n"));
    assert_eq!(gf.lines().count(), 6);
}

#[test]
fn sampled_measurement_reports_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "shots.ini", "[sim]\nunits = angular\n[measure]\nshots = 200000\n");
    let dir = tmp.path().join("run");
    let out = run_in(&dir, "measure", &cfg, &["--state", "squeezed:0.3", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gf = fs::read_to_string(dir.join("gf.csv")).unwrap();
    assert!(gf.lines().skip(1).all(|l| !l.ends_with(",,")));
    assert!(summary(&dir).contains("check.var_within_bound = pass"));
}

#[test]
fn unknown_run_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere");
    let out = run(&[
        "measure",
        "--paper-defaults",
        "--state",
        &format!("from-run:{}", missing.display()),
        "--out",
        tmp.path().join("m").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rwa_check_flags_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), "rwa-check", &configs().join("rwa.ini"), &[]);
    assert!(out.status.success());
    let csv = fs::read_to_string(tmp.path().join("rwa.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert_eq!(value(tmp.path(), "threshold_lambda_over_omega"), 0.03);
    assert!(summary(tmp.path()).contains("fidelity_monotone = true"));
}

#[test]
fn config_required_without_paper_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["squeeze-ideal", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}
