//! Subcommand implementations.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nems_squeeze_core::device::{
    classify_bias, control_fields, coupling_magnitude_from_field, lambda_n, thermal_occupation,
    BiasKind, DeviceParams,
};
use nems_squeeze_core::dynamics::{
    measured_kappa, run_schedule_with_policy, squeeze_resonator, PulseKind, PulseSchedule,
};
use nems_squeeze_core::hilbert::{
    quadrature_x, thermal_state, DensityMatrix, HilbertConfig, StateVector, TruncationPolicy,
    qubit_x_state,
};
use nems_squeeze_core::lindblad::{
    fig2a_experiment, fig2b_sweep, Fig2Config, Fig2Rates, STEP_CONSISTENCY_TOL,
};
use nems_squeeze_core::measure::{
    generating_function, moments_from_gf, symmetric_grid, verify_protocol_equivalence,
    ProtocolOptions, Shots, Stencil, DEFAULT_KAPPA_STEP,
};
use nems_squeeze_core::dynamics::rwa_fidelity;
use nems_squeeze_core::trajectory::{fmt_sig12, Trajectory};
use nems_squeeze_core::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{
    read_density_matrix, read_summary_value, write_density_matrix, RunDir, MIN_STATE_FILE,
};
use crate::params::{default_sweep_ratios, Context, LambdaSource};

/// Structural tolerances checked on every open-system run.
pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-9;
pub const MIN_EIGENVALUE_TOL: f64 = -1e-7;
/// Relative agreement of `min Δx̂/Δx̂(0)` between `d` and `d + 10`.
pub const CONVERGENCE_TOL: f64 = 1e-3;
pub const RWA_FIDELITY_THRESHOLD: f64 = 0.999;
pub const DEFAULT_RWA_LADDER: [f64; 6] = [0.0, 0.001, 0.003, 0.01, 0.03, 0.1];

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3.
    Numeric(String),
    /// Exit code 4.
    Check(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Check(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numeric(m) => write!(f, "numerical failure: {m}"),
            Self::Check(m) => write!(f, "consistency check failed: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.0)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Config(format!("output: {e}"))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::TruncationViolation { .. }
            | Error::TruncationTooSmall { .. }
            | Error::NonFinite(_)
            | Error::StepRefinementExhausted { .. }
            | Error::NegativeVariance { .. } => Self::Numeric(msg),
            Error::ProtocolMismatch { .. } | Error::DimensionMismatch { .. } => Self::Check(msg),
            _ => Self::Config(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Options shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub paper_defaults: bool,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: usize,
}

/// An open run: parsed configuration plus the output directory whose
/// summary header has already been written.
pub struct Session {
    pub cfg: RunConfig,
    pub paper_defaults: bool,
    pub seed: u64,
    pub workers: usize,
    pub dir: RunDir,
    checks: Vec<(String, bool)>,
}

impl Session {
    pub fn open(globals: &Globals, command: &str) -> CliResult<Self> {
        let cfg = match &globals.config {
            Some(p) => RunConfig::load(p)?,
            None if globals.paper_defaults => RunConfig::parse("", Path::new("<paper-defaults>"))?,
            None => {
                return Err(CliError::Config(
                    "--config <path> is required unless --paper-defaults is given".into(),
                ))
            }
        };
        let seed = match globals.seed {
            Some(s) => s,
            None => cfg.get::<u64>("sim", "seed")?.unwrap_or(0),
        };
        let out = match &globals.out {
            Some(p) => p.clone(),
            None => match cfg.raw("output", "dir") {
                Some(d) if !d.is_empty() => PathBuf::from(d),
                _ => PathBuf::from("runs").join(command),
            },
        };
        let mut dir = RunDir::create(&out)?;
        let run_id = out
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| command.to_owned());
        dir.comment(&format!("nems-squeeze {command}"))?;
        dir.kv("run_id", &run_id)?;
        dir.kv("command", command)?;
        dir.kv("config_path", cfg.path.display())?;
        dir.kv("paper_defaults", globals.paper_defaults)?;
        dir.kv("seed", seed)?;
        for (k, v) in cfg.echo() {
            dir.kv(&format!("config.{k}"), v)?;
        }
        Ok(Self {
            cfg,
            paper_defaults: globals.paper_defaults,
            seed,
            workers: globals.workers,
            dir,
            checks: Vec::new(),
        })
    }

    pub fn ctx(&self) -> Context<'_> {
        Context::new(&self.cfg, self.paper_defaults)
    }

    fn check(&mut self, name: &str, passed: bool) -> CliResult<()> {
        self.dir.check(name, passed)?;
        self.checks.push((name.to_owned(), passed));
        Ok(())
    }

    /// Writes the overall status line; errors when any check failed.
    fn finish(mut self) -> CliResult<()> {
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n.clone())
            .collect();
        self.dir.kv("status", if failed.is_empty() { "ok" } else { "check_failed" })?;
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Check(failed.join(", ")))
        }
    }

    /// Records an error in the summary before it propagates.
    pub fn fail(&mut self, e: &CliError) {
        let _ = self.dir.kv("status", format!("error (exit {})", e.code()));
        let _ = self.dir.kv("error", e.to_string().replace('\n', " "));
    }
}

fn write_trajectory(dir: &RunDir, name: &str, traj: &Trajectory) -> io::Result<()> {
    let mut f = BufWriter::new(File::create(dir.file(name))?);
    traj.write_csv(&mut f)?;
    f.flush()
}

fn write_device_constants(dir: &mut RunDir, p: &DeviceParams) -> io::Result<()> {
    dir.num("derived.W_m", p.loop_width)?;
    dir.num("derived.flux_quanta", p.flux_quanta())?;
    dir.num("derived.EJ0_rads", p.ej0())?;
    dir.num("derived.dX0_m", p.zero_point())?;
    dir.num("derived.M_kg", p.mass)?;
    Ok(())
}

fn write_lambda(dir: &mut RunDir, l: &LambdaSource) -> io::Result<()> {
    dir.num("derived.lambda_rads", l.value)?;
    if l.from_device {
        dir.num("derived.lambda_n_signed_rads", l.signed)?;
    }
    dir.kv("derived.lambda_source", if l.from_device { "device" } else { "direct" })
}

fn write_rates(dir: &mut RunDir, c: &Fig2Config, r: &Fig2Rates) -> io::Result<()> {
    dir.num("derived.omega0_rads", c.omega0)?;
    dir.num("derived.nbar", r.n_n)?;
    dir.num("derived.Nq", r.n_q)?;
    dir.num("derived.Ez_rads", r.e_z)?;
    dir.num("derived.gamma_n", r.gamma_n)?;
    dir.num("derived.gamma_q", r.gamma_q)?;
    dir.num("derived.gamma_phi", r.gamma_phi)?;
    dir.kv("derived.fock_dim", c.fock_dim)?;
    dir.num("derived.t_final_s", c.t_final)?;
    dir.num("derived.sample_every_s", c.sample_every)?;
    dir.num("derived.edge_tol", c.edge_tol)
}

fn lambda_header(s: &mut Session) -> CliResult<LambdaSource> {
    let ctx = s.ctx();
    let l = ctx.lambda()?;
    let device = if l.from_device { Some(ctx.device()?) } else { None };
    if let Some(p) = device {
        write_device_constants(&mut s.dir, &p)?;
    }
    write_lambda(&mut s.dir, &l)?;
    Ok(l)
}

/// Runs a subcommand body with error recording.
pub fn run<F>(globals: &Globals, command: &str, body: F) -> CliResult<()>
where
    F: FnOnce(&mut Session) -> CliResult<()>,
{
    let mut s = Session::open(globals, command)?;
    match body(&mut s) {
        Ok(()) => s.finish(),
        Err(e) => {
            s.fail(&e);
            Err(e)
        }
    }
}

pub fn device_report(s: &mut Session) -> CliResult<()> {
    let ctx = s.ctx();
    if !ctx.has_device() && !s.paper_defaults {
        return Err(CliError::Config(format!(
            "{}: device-report needs a [device] section",
            s.cfg.path.display()
        )));
    }
    let p = ctx.device()?;
    let units = ctx.units()?;
    let dphi = match s.cfg.get::<f64>("device", "dPhix_Wb")? {
        Some(v) => v,
        None => 0.01 * nems_squeeze_core::device::constants::FLUX_QUANTUM,
    };
    let dng = s.cfg.get::<f64>("device", "dng")?.unwrap_or(0.0);
    write_device_constants(&mut s.dir, &p)?;
    let bias = classify_bias(&p);
    let lambda = lambda_n(&p).ok();
    let oracle = coupling_magnitude_from_field(&p);
    let fields = control_fields(&p, dphi, dng);

    let kind = match bias.kind {
        BiasKind::Linear => "Linear",
        BiasKind::Quadratic => "Quadratic",
        BiasKind::General => "General",
    };
    let mut rows: Vec<(String, String)> = vec![
        ("units".into(), units.name().into()),
        ("flux_bias_phi0".into(), fmt_sig12(bias.flux_bias)),
        ("bias_class".into(), kind.into()),
        ("linear_coefficient_rads".into(), fmt_sig12(bias.linear)),
        ("quadratic_coefficient_rads".into(), fmt_sig12(bias.quadratic)),
        ("coupling_from_field_rads".into(), fmt_sig12(oracle)),
    ];
    match lambda {
        Some(l) => {
            rows.push(("lambda_n_rads".into(), fmt_sig12(l)));
            rows.push(("abs_lambda_n_rads".into(), fmt_sig12(l.abs())));
            rows.push(("lambda_n_hz".into(), fmt_sig12(l / (2.0 * PI))));
        }
        None => rows.push(("lambda_n_rads".into(), "undefined (non-integer bias)".into())),
    }
    rows.push(("dPhix_Wb".into(), fmt_sig12(dphi)));
    rows.push(("Ex_rads".into(), fmt_sig12(fields.e_x)));
    rows.push(("dEz_rads".into(), fmt_sig12(fields.de_z)));
    if let Some(t) = s.cfg.get::<f64>("decoherence", "T_K")? {
        rows.push(("nbar".into(), fmt_sig12(thermal_occupation(p.omega0, t))));
    }

    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut stdout = io::stdout().lock();
    for (k, v) in &rows {
        let _ = writeln!(stdout, "{k:<width$}  {v}");
        s.dir.kv(k, v)?;
    }
    Ok(())
}

pub fn squeeze_ideal(s: &mut Session) -> CliResult<()> {
    let l = lambda_header(s)?;
    let cfg = &s.cfg;
    let sign: f64 = cfg.get("squeeze", "qubit_sign")?.unwrap_or(1.0);
    if sign != 1.0 && sign != -1.0 {
        return Err(cfg.invalid("squeeze", "qubit_sign", "must be +1 or -1").into());
    }
    let fock_dim: usize = cfg.get("sim", "fock_dim")?.unwrap_or(40);
    let cycles = cfg.get::<usize>("squeeze", "cycles")?;
    let dt = cfg.get::<f64>("squeeze", "dt_s")?;
    let kappa_step = cfg.get::<f64>("squeeze", "kappa_step")?;
    let kappa_target = cfg.get::<f64>("squeeze", "kappa_target")?;
    if cycles == Some(0) {
        return Err(cfg.invalid("squeeze", "cycles", "must be at least 1").into());
    }
    let schedule = match (cycles, dt, kappa_target, kappa_step) {
        (Some(n), Some(dt), _, None) => PulseSchedule::new(n, dt, l.value)?,
        (Some(n), None, _, Some(step)) => PulseSchedule::new(n, step / l.value, l.value)?,
        (None, Some(dt), Some(k), None) => PulseSchedule::for_kappa(k, l.value * dt, l.value)?,
        (None, None, Some(k), Some(step)) => PulseSchedule::for_kappa(k, step, l.value)?,
        (None, None, None, None) if s.paper_defaults => PulseSchedule::for_kappa(0.3, 1e-3, l.value)?,
        _ => {
            return Err(CliError::Config(format!(
                "{}: [squeeze] needs cycles with dt_s or kappa_step, or kappa_target with dt_s or kappa_step",
                cfg.path.display()
            )))
        }
    };
    let schedule = match cfg.get::<f64>("squeeze", "pulse_s")? {
        Some(duration) => {
            let detuning = ctx_units(s)?.to_angular(cfg.get("squeeze", "pulse_detuning")?.unwrap_or(0.0));
            schedule.with_pulse(PulseKind::Finite { duration, detuning })?
        }
        None => schedule,
    };
    let hcfg = HilbertConfig::new(fock_dim)?;
    s.dir.kv("derived.fock_dim", fock_dim)?;
    s.dir.kv("derived.cycles", schedule.cycles)?;
    s.dir.num("derived.dt_s", schedule.dt)?;
    s.dir.num("derived.lambda_dt", l.value * schedule.dt)?;
    s.dir.num("derived.kappa_target", sign * schedule.kappa_target)?;
    s.dir.num("derived.duration_s", schedule.duration())?;

    let vacuum = StateVector::basis(fock_dim, 0);
    let initial = qubit_x_state(sign).kron(&vacuum).projector();
    let tol = s.cfg.get("sim", "edge_tol")?.unwrap_or(TruncationPolicy::default().max_population);
    let traj = run_schedule_with_policy(&schedule, &initial, &hcfg, &TruncationPolicy::with_tolerance(tol))?;
    write_trajectory(&s.dir, "trajectory.csv", &traj)?;

    let last = traj.last().expect("schedule has cycles");
    let kappa_eff = measured_kappa(last.dx_norm);
    let target = sign * schedule.kappa_target;
    s.dir.num("final_dx_norm", last.dx_norm)?;
    s.dir.num("kappa_eff", kappa_eff)?;
    s.dir.num("kappa_rel_error", (kappa_eff - target).abs() / target.abs())?;
    s.dir.num("max_edge_population", traj.max_edge_population())?;
    let trace_err = traj.rows.iter().map(|r| (r.trace - 1.0).abs()).fold(0.0, f64::max);
    s.dir.num("max_trace_error", trace_err)?;
    s.check("trace", trace_err <= TRACE_TOL)?;
    Ok(())
}

fn ctx_units(s: &Session) -> CliResult<crate::config::Units> {
    Ok(s.ctx().units()?)
}

fn open_config(s: &mut Session) -> CliResult<Fig2Config> {
    let ctx = s.ctx();
    if !s.paper_defaults && !s.cfg.has_section("decoherence") {
        return Err(CliError::Config(format!(
            "{}: this command needs a [decoherence] section",
            s.cfg.path.display()
        )));
    }
    let c = ctx.fig2()?;
    lambda_header(s)?;
    let rates = c.rates()?;
    write_rates(&mut s.dir, &c, &rates)?;
    Ok(c)
}

pub fn squeeze_lindblad(s: &mut Session) -> CliResult<()> {
    let c = open_config(s)?;
    let convergence: bool = s.cfg.get("sim", "convergence_check")?.unwrap_or(true);
    let run = fig2a_experiment(&c)?;
    let traj = run.trajectory();
    write_trajectory(&s.dir, "trajectory.csv", traj)?;
    let rho_min = run.min_resonator_state()?;
    write_density_matrix(&s.dir.file(MIN_STATE_FILE), &rho_min)?;

    let min = traj.min_dx().expect("trajectory has samples");
    let last = traj.last().expect("trajectory has samples");
    let st = run.outcome.stats;
    s.dir.num("min_dx_norm", min.dx_norm)?;
    s.dir.num("min_dx", min.dx)?;
    s.dir.num("min_var_x", min.dx * min.dx)?;
    s.dir.num("t_min_s", min.t)?;
    s.dir.num("final_dx_norm", last.dx_norm)?;
    s.dir.kv("rises_after_min", last.dx_norm > min.dx_norm * (1.0 + STEP_CONSISTENCY_TOL))?;
    s.dir.num("step_s", run.outcome.step)?;
    s.dir.kv("step_attempts", run.outcome.attempts)?;
    s.dir.num("step_deviation", run.outcome.deviation)?;
    s.dir.num("max_trace_error", st.max_trace_error)?;
    s.dir.num("max_hermiticity", st.max_hermiticity)?;
    s.dir.num("min_eigenvalue", st.min_eigenvalue)?;
    s.dir.num("max_edge_population", st.max_edge_population)?;
    s.check("trace", st.max_trace_error <= TRACE_TOL)?;
    s.check("hermiticity", st.max_hermiticity <= HERMITICITY_TOL)?;
    s.check("positivity", st.min_eigenvalue >= MIN_EIGENVALUE_TOL)?;

    if convergence {
        let mut wide = c.clone();
        wide.fock_dim += 10;
        let other = fig2a_experiment(&wide)?;
        let rel = (other.min_dx_norm() / min.dx_norm - 1.0).abs();
        s.dir.kv("convergence.fock_dim", wide.fock_dim)?;
        s.dir.num("convergence.min_dx_norm", other.min_dx_norm())?;
        s.dir.num("convergence.rel_change", rel)?;
        s.check("fock_convergence", rel <= CONVERGENCE_TOL)?;
    }
    Ok(())
}

pub fn sweep_dephasing(s: &mut Session, cli_rates: Option<Vec<f64>>) -> CliResult<()> {
    let c = open_config(s)?;
    let ratios = match cli_rates {
        Some(r) => r,
        None => s.cfg.get_list("sweep", "gamma_phi_over_lambda")?.unwrap_or_else(default_sweep_ratios),
    };
    if ratios.is_empty() {
        return Err(CliError::Config("dephasing sweep needs at least one rate".into()));
    }
    if let Some(bad) = ratios.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(CliError::Config(format!("dephasing ratio {bad} must be finite and >= 0")));
    }
    let gammas: Vec<f64> = ratios.iter().map(|r| r * c.lambda).collect();
    s.dir.kv(
        "derived.gamma_phi_over_lambda",
        ratios.iter().map(|r| fmt_sig12(*r)).collect::<Vec<_>>().join(","),
    )?;
    let points = fig2b_sweep(&c, &gammas, s.workers)?;

    let mut csv = String::from("gamma_phi,min_dx_norm\n");
    for p in &points {
        csv.push_str(&format!("{},{}\n", fmt_sig12(p.gamma_phi), fmt_sig12(p.min_dx_norm)));
    }
    s.dir.write_text("sweep.csv", &csv)?;
    for (i, p) in points.iter().enumerate() {
        s.dir.num(&format!("sweep.{i}.gamma_phi"), p.gamma_phi)?;
        s.dir.num(&format!("sweep.{i}.min_dx_norm"), p.min_dx_norm)?;
        s.dir.num(&format!("sweep.{i}.t_min_s"), p.t_min)?;
    }
    let mut sorted = points.clone();
    sorted.sort_by(|a, b| a.gamma_phi.total_cmp(&b.gamma_phi));
    let monotone = sorted
        .windows(2)
        .all(|w| w[0].min_dx_norm <= w[1].min_dx_norm * (1.0 + STEP_CONSISTENCY_TOL));
    s.check("monotone_in_gamma_phi", monotone)?;
    Ok(())
}

/// Source of the resonator state handed to the readout.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSource {
    Vacuum,
    Thermal,
    Squeezed(f64),
    FromRun(PathBuf),
}

impl std::str::FromStr for StateSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "vacuum" => return Ok(Self::Vacuum),
            "thermal" => return Ok(Self::Thermal),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("squeezed:") {
            let k: f64 = k.parse().map_err(|e| format!("squeezing `{k}`: {e}"))?;
            return Ok(Self::Squeezed(k));
        }
        if let Some(dir) = s.strip_prefix("from-run:") {
            return Ok(Self::FromRun(PathBuf::from(dir)));
        }
        Err(format!(
            "unknown state `{s}`: expected vacuum, thermal, squeezed:<kappa> or from-run:<dir>"
        ))
    }
}

/// The state and, for stored runs, the variance recorded by that run.
fn resolve_state(s: &mut Session, source: &StateSource) -> CliResult<(DensityMatrix, Option<f64>)> {
    let fock_dim: usize = s.cfg.get("sim", "fock_dim")?.unwrap_or(40);
    match source {
        StateSource::Vacuum => Ok((StateVector::basis(fock_dim, 0).projector(), None)),
        StateSource::Thermal => {
            let nbar = match s.cfg.get::<f64>("measure", "nbar")? {
                Some(n) => n,
                None => {
                    let base = Fig2Config::paper_defaults();
                    let f0 = match s.cfg.get::<f64>("decoherence", "f0_Hz")? {
                        Some(f) => Some(f),
                        None => s.cfg.get::<f64>("device", "f0_Hz")?,
                    };
                    let omega0 = f0.map(|f| 2.0 * PI * f);
                    let temperature = s.cfg.get::<f64>("decoherence", "T_K")?;
                    match (omega0, temperature) {
                        (Some(w), Some(t)) => thermal_occupation(w, t),
                        _ if s.paper_defaults => thermal_occupation(
                            omega0.unwrap_or(base.omega0),
                            temperature.unwrap_or(base.temperature),
                        ),
                        _ => {
                            return Err(CliError::Config(format!(
                                "{}: thermal state needs [measure] nbar or f0_Hz and [decoherence] T_K",
                                s.cfg.path.display()
                            )))
                        }
                    }
                }
            };
            s.dir.num("derived.nbar", nbar)?;
            Ok((thermal_state(fock_dim, nbar)?, None))
        }
        StateSource::Squeezed(k) => {
            let sq = squeeze_resonator(*k, fock_dim)?;
            Ok((StateVector::basis(fock_dim, 0).transformed(&sq).projector(), None))
        }
        StateSource::FromRun(dir) => {
            let path = dir.join(MIN_STATE_FILE);
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "unknown run `{}`: no {MIN_STATE_FILE} found",
                    dir.display()
                )));
            }
            let rho = read_density_matrix(&path).map_err(CliError::Config)?;
            let var = match read_summary_value(dir, "min_var_x") {
                None => None,
                Some(v) => Some(v.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("run `{}` has malformed min_var_x `{v}`", dir.display()))
                })?),
            };
            if let Some(v) = var {
                s.dir.num("source.min_var_x", v)?;
            }
            Ok((rho, var))
        }
    }
}

pub fn measure(s: &mut Session, source: &StateSource) -> CliResult<()> {
    let label = match source {
        StateSource::Vacuum => "vacuum".to_owned(),
        StateSource::Thermal => "thermal".to_owned(),
        StateSource::Squeezed(k) => format!("squeezed:{k}"),
        StateSource::FromRun(d) => format!("from-run:{}", d.display()),
    };
    s.dir.kv("state", &label)?;
    let (rho, source_var) = resolve_state(s, source)?;
    let cfg = &s.cfg;
    let h: f64 = cfg.get("measure", "kappa_step")?.unwrap_or(DEFAULT_KAPPA_STEP);
    if !(h > 0.0 && h.is_finite()) {
        return Err(cfg.invalid("measure", "kappa_step", "must be positive").into());
    }
    let stencil = match cfg.raw("measure", "stencil").unwrap_or("five") {
        "five" => Stencil::FivePoint,
        "three" => Stencil::ThreePoint,
        other => {
            return Err(cfg
                .invalid("measure", "stencil", &format!("expected `five` or `three`, got `{other}`"))
                .into())
        }
    };
    let shots = cfg.get::<u64>("measure", "shots")?.map(|count| Shots { count, seed: s.seed });
    if shots.is_some_and(|sh| sh.count == 0) {
        return Err(cfg.invalid("measure", "shots", "must be positive").into());
    }
    let dephasing_rate = match cfg.get::<f64>("measure", "gamma_meas")? {
        Some(g) => s.ctx().units()?.to_angular(g),
        None => 0.0,
    };
    let options = ProtocolOptions { dephasing_rate };
    s.dir.kv("derived.fock_dim", rho.dim())?;
    s.dir.num("derived.kappa_step", h)?;
    s.dir.kv("derived.stencil", if stencil == Stencil::FivePoint { "five" } else { "three" })?;
    s.dir.kv("derived.shots", shots.map_or("exact".to_owned(), |sh| sh.count.to_string()))?;

    let grid = symmetric_grid(h, 2);
    let curve = generating_function(&rho, &grid, shots, options)?;
    let mut f = BufWriter::new(File::create(s.dir.file("gf.csv"))?);
    curve.write_csv(&mut f)?;
    f.flush()?;

    let est = moments_from_gf(&curve, h, stencil)?;
    s.dir.num("mean_x", est.mean_x)?;
    s.dir.num("mean_x2", est.mean_x2)?;
    s.dir.num("var_x", est.var_x)?;
    s.dir.num("error_bound", est.error_bound)?;

    let x = quadrature_x(rho.dim())?;
    let ex = rho.expect(&x)?.re;
    let oracle = rho.expect(&x.dot(&x))?.re - ex * ex;
    let err = (est.var_x - oracle).abs();
    s.dir.num("oracle_var_x", oracle)?;
    s.dir.num("var_x_abs_error", err)?;
    s.check("var_within_bound", err <= est.error_bound)?;

    if let Some(v) = source_var {
        let e = (est.var_x - v).abs();
        s.dir.num("source_var_abs_error", e)?;
        s.check("source_var_within_bound", e <= est.error_bound)?;
    }

    if dephasing_rate == 0.0 {
        let t_grid: Vec<f64> = grid.iter().filter(|k| **k >= 0.0).map(|k| k / 2.0).collect();
        let check = verify_protocol_equivalence(&rho, 1.0, &t_grid);
        match check {
            Ok(r) => {
                s.dir.num("protocol_max_deviation", r.max_deviation)?;
                s.check("protocol_equivalence", true)?;
            }
            Err(e @ Error::ProtocolMismatch { .. }) => {
                s.check("protocol_equivalence", false)?;
                return Err(e.into());
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

pub fn rwa_check(s: &mut Session) -> CliResult<()> {
    let ladder = s.cfg.get_list("rwa", "lambda_over_omega")?.unwrap_or_else(|| DEFAULT_RWA_LADDER.to_vec());
    if ladder.is_empty() {
        return Err(CliError::Config("rwa ladder is empty".into()));
    }
    let periods: usize = s.cfg.get("rwa", "periods")?.unwrap_or(5);
    if periods == 0 {
        return Err(s.cfg.invalid("rwa", "periods", "must be at least 1").into());
    }
    let fock_dim: usize = s.cfg.get("sim", "fock_dim")?.unwrap_or(20);
    let hcfg = HilbertConfig::new(fock_dim)?;
    s.dir.kv("derived.fock_dim", fock_dim)?;
    s.dir.kv("derived.periods", periods)?;
    s.dir.num("derived.Ez_over_omega0", 2.0)?;

    let mut csv = String::from("lambda_over_omega,fidelity\n");
    let mut results = Vec::with_capacity(ladder.len());
    let mut stdout = io::stdout().lock();
    let _ = writeln!(stdout, "{:>18}  {:>20}", "lambda/omega0", "fidelity");
    for &r in &ladder {
        let check = rwa_fidelity(r, periods, &hcfg)?;
        let _ = writeln!(stdout, "{:>18}  {:>20}", fmt_sig12(r), fmt_sig12(check.fidelity));
        csv.push_str(&format!("{},{}\n", fmt_sig12(r), fmt_sig12(check.fidelity)));
        results.push((r, check.fidelity));
    }
    s.dir.write_text("rwa.csv", &csv)?;
    for (i, (r, f)) in results.iter().enumerate() {
        s.dir.num(&format!("rwa.{i}.lambda_over_omega"), *r)?;
        s.dir.num(&format!("rwa.{i}.fidelity"), *f)?;
    }
    let mut sorted = results.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    match sorted.iter().find(|(_, f)| *f < RWA_FIDELITY_THRESHOLD) {
        Some((r, _)) => {
            let _ = writeln!(stdout, "fidelity drops below {RWA_FIDELITY_THRESHOLD} at lambda/omega0 = {r}");
            s.dir.num("threshold_lambda_over_omega", *r)?;
        }
        None => {
            let _ = writeln!(stdout, "fidelity stays above {RWA_FIDELITY_THRESHOLD} over the ladder");
            s.dir.kv("threshold_lambda_over_omega", "none")?;
        }
    }
    let monotone = sorted.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    s.dir.kv("fidelity_monotone", monotone)?;
    Ok(())
}
