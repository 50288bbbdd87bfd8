//! Master-equation evolution of the resonator/qubit density matrix.
//!
//! The generator is
//! `dρ/dt = -i[H, ρ] + Σ_k L(A_k, γ_k, N_k) ρ` with the thermal dissipator
//! `L(A, γ, N)ρ = (γ(N+1)/2)(2AρA† - A†Aρ - ρA†A) + (γN/2)(2A†ρA - AA†ρ - ρAA†)`.
//! Integration is fixed-step RK4 with an end-state step-doubling check.

mod fig2;

pub use fig2::{
    continuous_vs_pulsed, fig2a_experiment, fig2b_sweep, lab_frame_uncertainty, pulsed_experiment,
    Fig2Config, Fig2Rates, Fig2Run, PulsedComparison, SweepPoint, DEFAULT_OPEN_EDGE_TOL,
};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hilbert::{
    DensityMatrix, HilbertConfig, OperatorMatrix, SparseOperator, TruncationPolicy, C64,
};
use crate::trajectory::{Sampler, Trajectory, TrajectoryRow};

/// Relative tolerance of the step-doubling comparison.
pub const STEP_CONSISTENCY_TOL: f64 = 1e-6;

/// Maximum number of step halvings after the first comparison.
pub const MAX_REFINEMENTS: usize = 3;

/// Default step is `1/(STEP_DIVISOR · max(ν, γ_max))`.
pub const STEP_DIVISOR: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub struct LindbladChannel {
    pub collapse: OperatorMatrix,
    pub rate: f64,
    pub nbar: f64,
}

impl LindbladChannel {
    pub fn new(collapse: OperatorMatrix, rate: f64, nbar: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("channel rate {rate} must be finite and >= 0")));
        }
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(Error::InvalidParameter(format!("channel nbar {nbar} must be finite and >= 0")));
        }
        Ok(Self { collapse, rate, nbar })
    }

    /// Effective jump operators `(A, γ(N+1))` and `(A†, γN)`.
    fn jumps(&self) -> Vec<(OperatorMatrix, f64)> {
        let mut out = Vec::with_capacity(2);
        if self.rate > 0.0 {
            out.push((self.collapse.clone(), self.rate * (self.nbar + 1.0)));
            if self.nbar > 0.0 {
                out.push((self.collapse.adjoint(), self.rate * self.nbar));
            }
        }
        out
    }

    /// Largest effective jump rate.
    pub fn max_rate(&self) -> f64 {
        self.rate * (self.nbar + 1.0)
    }
}

#[derive(Clone, Debug)]
pub struct MasterEqProblem {
    pub cfg: HilbertConfig,
    pub hamiltonian: OperatorMatrix,
    pub channels: Vec<LindbladChannel>,
    pub initial: DensityMatrix,
    pub t_final: f64,
    pub sample_every: f64,
    pub observables: Vec<(String, OperatorMatrix)>,
    pub policy: TruncationPolicy,
    /// Characteristic coherent frequency used for the default step; when
    /// absent the 1-norm of the Hamiltonian is used.
    pub frequency_scale: Option<f64>,
    /// Explicit base step, overriding the default rule.
    pub step: Option<f64>,
    /// Stop once `dx_norm` exceeds its running minimum by this relative amount.
    pub stop_after_rise: Option<f64>,
}

impl MasterEqProblem {
    pub fn new(
        cfg: HilbertConfig,
        hamiltonian: OperatorMatrix,
        channels: Vec<LindbladChannel>,
        initial: DensityMatrix,
        t_final: f64,
        sample_every: f64,
    ) -> Result<Self> {
        let p = Self {
            cfg,
            hamiltonian,
            channels,
            initial,
            t_final,
            sample_every,
            observables: Vec::new(),
            policy: TruncationPolicy::default(),
            frequency_scale: None,
            step: None,
            stop_after_rise: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cfg.dim();
        let dims = std::iter::once(self.hamiltonian.dim())
            .chain(std::iter::once(self.initial.dim()))
            .chain(self.channels.iter().map(|c| c.collapse.dim()))
            .chain(self.observables.iter().map(|(_, o)| o.dim()));
        for found in dims {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_final = {} must be positive", self.t_final)));
        }
        if !(self.sample_every > 0.0 && self.sample_every <= self.t_final) {
            return Err(Error::InvalidParameter(format!(
                "sample_every = {} must lie in (0, t_final]",
                self.sample_every
            )));
        }
        if self.hamiltonian.hermitian_residue() > 1e-10 * (1.0 + self.hamiltonian.max_abs()) {
            return Err(Error::InvalidParameter("Hamiltonian is not Hermitian".into()));
        }
        Ok(())
    }

    pub fn with_observables(mut self, observables: Vec<(String, OperatorMatrix)>) -> Result<Self> {
        self.observables = observables;
        self.validate()?;
        Ok(self)
    }

    pub fn with_policy(mut self, policy: TruncationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_frequency_scale(mut self, nu: f64) -> Self {
        self.frequency_scale = Some(nu);
        self
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.step = Some(h);
        self
    }

    pub fn with_stop_after_rise(mut self, rise: f64) -> Self {
        self.stop_after_rise = Some(rise);
        self
    }

    /// `h = min(1/(50ν), 1/(50γ_max))` unless an explicit step is set.
    pub fn default_step(&self) -> f64 {
        if let Some(h) = self.step {
            return h;
        }
        let nu = self.frequency_scale.unwrap_or_else(|| self.hamiltonian.norm_one());
        let gamma = self.channels.iter().map(LindbladChannel::max_rate).fold(0.0, f64::max);
        let rate = nu.abs().max(gamma);
        if rate > 0.0 {
            1.0 / (STEP_DIVISOR * rate)
        } else {
            self.sample_every
        }
    }

    fn sample_count(&self) -> usize {
        ((self.t_final / self.sample_every).round() as usize).max(1)
    }
}

/// Precompiled generator in the form `-i(H_eff ρ - ρ H_eff†) + Σ c_k A_k ρ A_k†`
/// with `H_eff = H - (i/2) Σ c_k A_k†A_k`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    h_eff: SparseOperator,
    h_eff_adj: SparseOperator,
    jumps: Vec<(SparseOperator, f64)>,
}

impl Liouvillian {
    pub fn compile(hamiltonian: &OperatorMatrix, channels: &[LindbladChannel]) -> Result<Self> {
        let n = hamiltonian.dim();
        let mut h_eff = hamiltonian.clone();
        let mut jumps = Vec::new();
        for ch in channels {
            if ch.collapse.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: ch.collapse.dim(),
                });
            }
            for (a, c) in ch.jumps() {
                let ada = a.adjoint().dot(&a);
                h_eff = &h_eff - &ada.scale(C64::new(0.0, c / 2.0));
                jumps.push((SparseOperator::from_dense(&a), c));
            }
        }
        Ok(Self {
            h_eff_adj: SparseOperator::from_dense(&h_eff.adjoint()),
            h_eff: SparseOperator::from_dense(&h_eff),
            jumps,
        })
    }

    pub fn dim(&self) -> usize {
        self.h_eff.dim()
    }

    pub fn apply_into(&self, rho: &Array2<C64>, out: &mut Array2<C64>) {
        out.fill(C64::new(0.0, 0.0));
        self.h_eff.left_mul_acc(rho, C64::new(0.0, -1.0), out);
        self.h_eff_adj.right_mul_acc(rho, C64::new(0.0, 1.0), out);
        for (a, c) in &self.jumps {
            a.sandwich_acc(rho, C64::new(*c, 0.0), out);
        }
    }

    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros(rho.raw_dim());
        self.apply_into(rho, &mut out);
        out
    }
}

/// `dρ/dt` for the problem's Hamiltonian and channels.
pub fn liouvillian_apply(rho: &DensityMatrix, problem: &MasterEqProblem) -> Result<OperatorMatrix> {
    if rho.dim() != problem.hamiltonian.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.hamiltonian.dim(),
            found: rho.dim(),
        });
    }
    let l = Liouvillian::compile(&problem.hamiltonian, &problem.channels)?;
    OperatorMatrix::from_array(l.apply(rho.as_operator().as_array()))
}

/// Structural extremes seen over a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunStats {
    pub max_trace_error: f64,
    pub max_hermiticity: f64,
    pub min_eigenvalue: f64,
    pub max_edge_population: f64,
}

#[derive(Clone, Debug)]
pub struct IntegrationOutcome {
    pub trajectory: Trajectory,
    pub final_state: DensityMatrix,
    /// State at the sample with the smallest `dx_norm`.
    pub min_dx_state: DensityMatrix,
    /// Step of the returned (finer) run.
    pub step: f64,
    /// Number of coarse/fine comparisons performed.
    pub attempts: usize,
    /// Largest relative end-state deviation in the accepted comparison.
    pub deviation: f64,
    pub stats: RunStats,
}

struct FixedRun {
    trajectory: Trajectory,
    final_state: DensityMatrix,
    min_dx_state: DensityMatrix,
    stats: RunStats,
}

fn rk4_step(l: &Liouvillian, rho: &mut Array2<C64>, h: f64, bufs: &mut [Array2<C64>; 5]) {
    let [k1, k2, k3, k4, tmp] = bufs;
    let half = C64::new(h / 2.0, 0.0);
    let full = C64::new(h, 0.0);
    l.apply_into(rho, k1);
    tmp.assign(rho);
    tmp.scaled_add(half, k1);
    l.apply_into(tmp, k2);
    tmp.assign(rho);
    tmp.scaled_add(half, k2);
    l.apply_into(tmp, k3);
    tmp.assign(rho);
    tmp.scaled_add(full, k3);
    l.apply_into(tmp, k4);
    let w = C64::new(h / 6.0, 0.0);
    ndarray::Zip::from(rho)
        .and(&*k1)
        .and(&*k2)
        .and(&*k3)
        .and(&*k4)
        .for_each(|r, &a, &b, &c, &d| *r += w * (a + 2.0 * b + 2.0 * c + d));
}

fn observe(
    sampler: &Sampler,
    problem: &MasterEqProblem,
    rho: &Array2<C64>,
    index: usize,
    t: f64,
    dx0: Option<f64>,
) -> Result<(TrajectoryRow, DensityMatrix)> {
    let op = OperatorMatrix::from_array(rho.clone())?;
    if !op.is_finite() {
        return Err(Error::NonFinite("density matrix during integration"));
    }
    let state = DensityMatrix::from_evolved(op);
    problem.policy.check(&problem.cfg, &state, index, t)?;
    Ok((sampler.sample(t, &state, dx0)?, state))
}

fn run_fixed(
    problem: &MasterEqProblem,
    l: &Liouvillian,
    steps_per_sample: usize,
    samples: usize,
    stop_after_rise: Option<f64>,
) -> Result<FixedRun> {
    let h = problem.sample_every / steps_per_sample as f64;
    let sampler = Sampler::new(problem.cfg)
        .with_observables(problem.observables.iter().map(|(_, o)| o.clone()).collect());
    let mut rho = problem.initial.as_operator().as_array().clone();
    let zeros = || Array2::<C64>::zeros(rho.raw_dim());
    let mut bufs = [zeros(), zeros(), zeros(), zeros(), zeros()];

    let (first, state0) = observe(&sampler, problem, &rho, 0, 0.0, None)?;
    let dx0 = first.dx;
    let mut stats = RunStats {
        max_trace_error: 0.0,
        max_hermiticity: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_edge_population: 0.0,
    };
    let record = |row: &TrajectoryRow, stats: &mut RunStats| {
        stats.max_trace_error = stats.max_trace_error.max((row.trace - 1.0).abs());
        stats.max_hermiticity = stats.max_hermiticity.max(row.hermiticity);
        stats.min_eigenvalue = stats.min_eigenvalue.min(row.min_eig.unwrap_or(f64::INFINITY));
        stats.max_edge_population = stats.max_edge_population.max(row.edge_population);
    };
    record(&first, &mut stats);
    let mut min_dx = first.dx_norm;
    let mut min_state = state0.clone();
    let mut last_state = state0;
    let mut rows = vec![first];

    for k in 1..=samples {
        for _ in 0..steps_per_sample {
            rk4_step(l, &mut rho, h, &mut bufs);
        }
        let t = k as f64 * problem.sample_every;
        let (row, state) = observe(&sampler, problem, &rho, k, t, Some(dx0))?;
        record(&row, &mut stats);
        let stop = stop_after_rise.is_some_and(|r| row.dx_norm > min_dx * (1.0 + r));
        if row.dx_norm < min_dx {
            min_dx = row.dx_norm;
            min_state = state.clone();
        }
        rows.push(row);
        last_state = state;
        if stop {
            break;
        }
    }
    Ok(FixedRun {
        trajectory: Trajectory {
            observable_names: problem.observables.iter().map(|(n, _)| n.clone()).collect(),
            rows,
        },
        final_state: last_state,
        min_dx_state: min_state,
        stats,
    })
}

fn row_values(r: &TrajectoryRow) -> Vec<f64> {
    let mut v = vec![r.dx_norm, r.exp_x, r.exp_x2, r.sx, r.sy, r.sz, r.nbar, r.trace, r.purity];
    v.extend_from_slice(&r.extra);
    v
}

/// Largest relative difference between two end rows.
fn end_deviation(a: &TrajectoryRow, b: &TrajectoryRow) -> f64 {
    row_values(a)
        .iter()
        .zip(row_values(b))
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Integrates the master equation. Each attempt compares a run at step `h`
/// against one at `h/2`; the finer run is returned once their end states
/// agree within [`STEP_CONSISTENCY_TOL`].
pub fn integrate(problem: &MasterEqProblem) -> Result<IntegrationOutcome> {
    problem.validate()?;
    let l = Liouvillian::compile(&problem.hamiltonian, &problem.channels)?;
    let h0 = problem.default_step();
    let mut steps = ((problem.sample_every / h0).ceil() as usize).max(1);
    let coarse = run_fixed(problem, &l, steps, problem.sample_count(), problem.stop_after_rise)?;
    let samples = coarse.trajectory.rows.len() - 1;
    let mut coarse = coarse;
    let mut deviation = f64::INFINITY;
    for attempt in 1..=MAX_REFINEMENTS + 1 {
        steps *= 2;
        let fine = run_fixed(problem, &l, steps, samples, None)?;
        deviation = end_deviation(
            coarse.trajectory.last().expect("nonempty"),
            fine.trajectory.last().expect("nonempty"),
        );
        log::debug!("step {:e}: end deviation {deviation:e}", problem.sample_every / steps as f64);
        if deviation < STEP_CONSISTENCY_TOL {
            return Ok(IntegrationOutcome {
                trajectory: fine.trajectory,
                final_state: fine.final_state,
                min_dx_state: fine.min_dx_state,
                step: problem.sample_every / steps as f64,
                attempts: attempt,
                deviation,
                stats: fine.stats,
            });
        }
        coarse = fine;
    }
    Err(Error::StepRefinementExhausted {
        deviation,
        attempts: MAX_REFINEMENTS + 1,
    })
}

/// `(γ_q, γ_φ)` reproducing longitudinal rate `1/T₁` and transverse rate
/// `1/T₂` for channels `(σ⁻, γ_q, N_q)` and `(σ_z, γ_φ, N_q)`.
pub fn rates_from_t1t2(t1: f64, t2: f64, nq: f64) -> Result<(f64, f64)> {
    if !(t1 > 0.0) || !(t2 > 0.0) {
        return Err(Error::Unphysical(format!("T1 = {t1}, T2 = {t2} must be positive")));
    }
    if !(nq >= 0.0 && nq.is_finite()) {
        return Err(Error::Unphysical(format!("thermal occupation {nq} must be >= 0")));
    }
    if t2 > 2.0 * t1 {
        return Err(Error::Unphysical(format!("T2 = {t2} exceeds 2 T1 = {}", 2.0 * t1)));
    }
    let m = 2.0 * nq + 1.0;
    let gamma_q = 1.0 / (t1 * m);
    let gamma_phi = ((1.0 / t2 - 0.5 / t1) / (2.0 * m)).max(0.0);
    Ok((gamma_q, gamma_phi))
}
