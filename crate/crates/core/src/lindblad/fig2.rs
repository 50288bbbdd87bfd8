//! Decoherence experiments: squeezing under resonator damping, qubit
//! relaxation and qubit dephasing, plus the dephasing-rate sweep.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{integrate, rates_from_t1t2, IntegrationOutcome, Liouvillian, LindbladChannel, MasterEqProblem};
use crate::device::thermal_occupation;
use crate::dynamics::{effective_squeeze_hamiltonian, rwa_hamiltonian};
use crate::error::{Error, Result};
use crate::hilbert::{
    position_uncertainty, qubit_x_state, thermal_state, DensityMatrix, HilbertConfig,
    OperatorMatrix, Pauli, TruncationPolicy, C64,
};
use crate::trajectory::{Sampler, Trajectory};

/// Edge-population tolerance for open-system runs.
pub const DEFAULT_OPEN_EDGE_TOL: f64 = 5e-3;

/// Relative rise after the minimum at which sweep runs stop.
pub const SWEEP_STOP_RISE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Config {
    pub fock_dim: usize,
    /// rad/s
    pub omega0: f64,
    pub quality: f64,
    /// K
    pub temperature: f64,
    /// rad/s
    pub lambda: f64,
    pub t1: f64,
    pub t2: f64,
    /// Qubit splitting; `2ω₀` when absent.
    pub e_z: Option<f64>,
    pub nq_override: Option<f64>,
    /// Replaces the dephasing rate derived from `T₁`, `T₂`.
    pub gamma_phi_override: Option<f64>,
    /// Sign of the initial `σ_x` eigenstate.
    pub qubit_sign: f64,
    pub t_final: f64,
    pub sample_every: f64,
    pub edge_tol: f64,
    pub stop_after_rise: Option<f64>,
    pub step: Option<f64>,
}

impl Fig2Config {
    /// 250 MHz resonator, Q = 10⁴, 20 mK, λ = 5×10⁶ rad/s, T₁ = 1 μs, T₂ = 100 ns.
    pub fn paper_defaults() -> Self {
        Self {
            fock_dim: 30,
            omega0: 2.0 * PI * 250e6,
            quality: 1e4,
            temperature: 0.02,
            lambda: 5e6,
            t1: 1e-6,
            t2: 100e-9,
            e_z: None,
            nq_override: None,
            gamma_phi_override: None,
            qubit_sign: 1.0,
            t_final: 150e-9,
            sample_every: 1e-9,
            edge_tol: DEFAULT_OPEN_EDGE_TOL,
            stop_after_rise: None,
            step: None,
        }
    }

    pub fn rates(&self) -> Result<Fig2Rates> {
        for (name, v) in [
            ("omega0", self.omega0),
            ("quality", self.quality),
            ("t1", self.t1),
            ("t2", self.t2),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::InvalidParameter("temperature must be >= 0".into()));
        }
        let e_z = self.e_z.unwrap_or(2.0 * self.omega0);
        let n_q = self
            .nq_override
            .unwrap_or_else(|| thermal_occupation(e_z, self.temperature));
        let (gamma_q, derived_phi) = rates_from_t1t2(self.t1, self.t2, n_q)?;
        let gamma_phi = self.gamma_phi_override.unwrap_or(derived_phi);
        if !(gamma_phi >= 0.0 && gamma_phi.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma_phi = {gamma_phi} must be >= 0")));
        }
        Ok(Fig2Rates {
            gamma_n: self.omega0 / self.quality,
            n_n: thermal_occupation(self.omega0, self.temperature),
            gamma_q,
            gamma_phi,
            n_q,
            e_z,
        })
    }

    fn channels(&self, cfg: &HilbertConfig, r: &Fig2Rates) -> Result<Vec<LindbladChannel>> {
        Ok(vec![
            LindbladChannel::new(cfg.a(), r.gamma_n, r.n_n)?,
            LindbladChannel::new(cfg.sigma(Pauli::Minus), r.gamma_q, r.n_q)?,
            LindbladChannel::new(cfg.sigma(Pauli::Z), r.gamma_phi, r.n_q)?,
        ])
    }

    fn initial_state(&self, r: &Fig2Rates) -> Result<DensityMatrix> {
        let res = thermal_state(self.fock_dim, r.n_n)?;
        Ok(qubit_x_state(self.qubit_sign).projector().kron(&res))
    }

    pub fn problem(&self) -> Result<MasterEqProblem> {
        let cfg = HilbertConfig::new(self.fock_dim)?;
        let rates = self.rates()?;
        let h = effective_squeeze_hamiltonian(&cfg, self.lambda);
        let mut p = MasterEqProblem::new(
            cfg,
            h,
            self.channels(&cfg, &rates)?,
            self.initial_state(&rates)?,
            self.t_final,
            self.sample_every,
        )?
        .with_policy(TruncationPolicy::with_tolerance(self.edge_tol))
        .with_frequency_scale(self.lambda);
        p.stop_after_rise = self.stop_after_rise;
        p.step = self.step;
        Ok(p)
    }
}

/// Channel parameters derived from a [`Fig2Config`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fig2Rates {
    pub gamma_n: f64,
    pub n_n: f64,
    pub gamma_q: f64,
    pub gamma_phi: f64,
    pub n_q: f64,
    pub e_z: f64,
}

#[derive(Clone, Debug)]
pub struct Fig2Run {
    pub rates: Fig2Rates,
    pub outcome: IntegrationOutcome,
}

impl Fig2Run {
    pub fn trajectory(&self) -> &Trajectory {
        &self.outcome.trajectory
    }

    pub fn min_dx_norm(&self) -> f64 {
        self.trajectory().min_dx().map_or(f64::NAN, |r| r.dx_norm)
    }

    pub fn t_min(&self) -> f64 {
        self.trajectory().min_dx().map_or(f64::NAN, |r| r.t)
    }

    /// Resonator state at the uncertainty minimum.
    pub fn min_resonator_state(&self) -> Result<DensityMatrix> {
        self.outcome.min_dx_state.trace_out_leading(2)
    }
}

pub fn fig2a_experiment(cfg: &Fig2Config) -> Result<Fig2Run> {
    let rates = cfg.rates()?;
    let problem = cfg.problem()?;
    log::info!(
        "fig2a: d = {}, lambda = {:e}, gamma_phi = {:e}, h0 = {:e}",
        cfg.fock_dim,
        cfg.lambda,
        rates.gamma_phi,
        problem.default_step()
    );
    Ok(Fig2Run {
        rates,
        outcome: integrate(&problem)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub gamma_phi: f64,
    pub min_dx_norm: f64,
    pub t_min: f64,
    pub max_edge_population: f64,
}

/// Minimum normalized uncertainty per dephasing rate, in input order.
/// `workers = 0` uses the global thread pool.
pub fn fig2b_sweep(cfg: &Fig2Config, gamma_phi: &[f64], workers: usize) -> Result<Vec<SweepPoint>> {
    if gamma_phi.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let run_one = |g: &f64| -> Result<SweepPoint> {
        let mut c = cfg.clone();
        c.gamma_phi_override = Some(*g);
        c.stop_after_rise.get_or_insert(SWEEP_STOP_RISE);
        let run = fig2a_experiment(&c)?;
        Ok(SweepPoint {
            gamma_phi: *g,
            min_dx_norm: run.min_dx_norm(),
            t_min: run.t_min(),
            max_edge_population: run.outcome.stats.max_edge_population,
        })
    };
    if workers == 1 {
        return gamma_phi.iter().map(run_one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| gamma_phi.par_iter().map(run_one).collect())
}

/// Pulsed protocol with dissipation: intervals of `H_RWA(2λ)` plus the
/// channels, separated by instantaneous σ_x pulses. One cycle of duration
/// `2Δt` squeezes by `2λΔt`, matching the continuous model at rate `λ`.
/// `kappa_step` bounds `2λΔt`; the realized step is chosen so that an
/// integer number of cycles fits each sample interval.
pub fn pulsed_experiment(cfg: &Fig2Config, kappa_step: f64) -> Result<Trajectory> {
    if !(kappa_step > 0.0) {
        return Err(Error::InvalidParameter("kappa_step must be positive".into()));
    }
    let hcfg = HilbertConfig::new(cfg.fock_dim)?;
    let rates = cfg.rates()?;
    let lambda_r = 2.0 * cfg.lambda;
    let cycles_per_sample = (cfg.sample_every * lambda_r / (2.0 * kappa_step)).ceil().max(1.0) as usize;
    let dt = cfg.sample_every / (2.0 * cycles_per_sample as f64);
    let channels = cfg.channels(&hcfg, &rates)?;
    let gamma = channels.iter().map(LindbladChannel::max_rate).fold(0.0, f64::max);
    let h_max = 1.0 / (super::STEP_DIVISOR * lambda_r.max(gamma));
    let substeps = ((dt / h_max).ceil() as usize).max(1);
    let h = dt / substeps as f64;
    let l = Liouvillian::compile(&rwa_hamiltonian(&hcfg, lambda_r), &channels)?;
    let policy = TruncationPolicy::with_tolerance(cfg.edge_tol);

    let sx = hcfg.sigma(Pauli::X);
    let sampler = Sampler::new(hcfg).with_eigen_probe(false);
    let init = cfg.initial_state(&rates)?;
    let first = sampler.sample(0.0, &init, None)?;
    let dx0 = first.dx;
    let mut rows = vec![first];
    let mut rho = init.as_operator().as_array().clone();
    let zeros = || ndarray::Array2::<C64>::zeros(rho.raw_dim());
    let mut bufs = [zeros(), zeros(), zeros(), zeros(), zeros()];
    let flip = |r: &ndarray::Array2<C64>| sx.as_array().dot(r).dot(sx.as_array());

    let samples = ((cfg.t_final / cfg.sample_every).round() as usize).max(1);
    for k in 1..=samples {
        for _ in 0..cycles_per_sample {
            for _ in 0..2 {
                rho = flip(&rho);
                for _ in 0..substeps {
                    super::rk4_step(&l, &mut rho, h, &mut bufs);
                }
            }
        }
        let t = k as f64 * cfg.sample_every;
        let op = OperatorMatrix::from_array(rho.clone())?;
        if !op.is_finite() {
            return Err(Error::NonFinite("pulsed density matrix"));
        }
        let state = DensityMatrix::from_evolved(op);
        policy.check(&hcfg, &state, k, t)?;
        rows.push(sampler.sample(t, &state, Some(dx0))?);
    }
    Ok(Trajectory {
        observable_names: Vec::new(),
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct PulsedComparison {
    pub continuous: Trajectory,
    pub pulsed: Trajectory,
    /// Largest `|Δx̂_pulsed/Δx̂_cont - 1|` over the common samples.
    pub max_relative_deviation: f64,
}

pub fn continuous_vs_pulsed(cfg: &Fig2Config, kappa_step: f64) -> Result<PulsedComparison> {
    let continuous = fig2a_experiment(cfg)?.outcome.trajectory;
    let pulsed = pulsed_experiment(cfg, kappa_step)?;
    let max_relative_deviation = continuous
        .rows
        .iter()
        .zip(&pulsed.rows)
        .map(|(c, p)| (p.dx_norm / c.dx_norm - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(PulsedComparison {
        continuous,
        pulsed,
        max_relative_deviation,
    })
}

/// Uncertainty of the lab-frame quadrature `a e^{-iθ} + a† e^{iθ}`, `θ = ω₀t`.
pub fn lab_frame_uncertainty(rho: &DensityMatrix, cfg: &HilbertConfig, theta: f64) -> Result<f64> {
    let a = cfg.a().scale(C64::from_polar(1.0, -theta));
    let x = &a + &a.adjoint();
    position_uncertainty(rho, &x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_rates() {
        let r = Fig2Config::paper_defaults().rates().unwrap();
        assert!((r.n_n - 1.2165).abs() < 1e-3);
        assert!((r.gamma_n - 2.0 * PI * 250e6 / 1e4).abs() < 1e-6);
        let m = 2.0 * r.n_q + 1.0;
        assert!((r.gamma_q * m - 1e6).abs() < 1e-3);
        assert!((2.0 * r.gamma_phi * m - (1e7 - 5e5)).abs() < 1e-3);
    }

    #[test]
    fn decoherence_free_limit_is_ideal_squeezing() {
        let mut c = Fig2Config::paper_defaults();
        c.quality = 1e300;
        c.t1 = 1.0;
        c.t2 = 2.0;
        c.gamma_phi_override = Some(0.0);
        c.t_final = 0.5 / c.lambda;
        c.sample_every = c.t_final / 10.0;
        c.fock_dim = 40;
        c.edge_tol = 1e-3;
        let run = fig2a_experiment(&c).unwrap();
        for r in &run.outcome.trajectory.rows {
            let want = (-c.lambda * r.t).exp();
            assert!((r.dx_norm / want - 1.0).abs() < 1e-2, "{} vs {want}", r.dx_norm);
        }
    }

    #[test]
    fn lab_frame_rotates_quadrature() {
        let cfg = HilbertConfig::new(30).unwrap();
        let s = crate::dynamics::squeeze_operator(0.4, &cfg).unwrap();
        let rho = qubit_x_state(1.0)
            .kron(&crate::hilbert::StateVector::basis(30, 0))
            .projector()
            .transformed(&s);
        let dx = lab_frame_uncertainty(&rho, &cfg, 0.0).unwrap();
        let dp = lab_frame_uncertainty(&rho, &cfg, PI / 2.0).unwrap();
        assert!((dx - (-0.4f64).exp()).abs() < 1e-6);
        assert!((dp - 0.4f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn empty_sweep_rejected() {
        assert_eq!(fig2b_sweep(&Fig2Config::paper_defaults(), &[], 1).unwrap_err(), Error::EmptyGrid);
    }
}
