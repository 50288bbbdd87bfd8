//! Spin-echo squeezing protocol.

use super::{build_hamiltonian, pi_pulse_x, rwa_hamiltonian, squeeze_generator, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::hilbert::{
    matrix_exp, unitary_propagator, DensityMatrix, HilbertConfig, OperatorMatrix, Pauli,
    TruncationPolicy,
};
use crate::trajectory::{Sampler, Trajectory};

/// How the π pulse between intervals is realized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseKind {
    /// Ideal instantaneous `σ_x`.
    PiX,
    /// Square pulse of the given duration with `E_x = π/duration`, applied
    /// together with the squeezing interaction and a qubit detuning (rad/s).
    Finite { duration: f64, detuning: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    pub cycles: usize,
    pub dt: f64,
    pub pulse: PulseKind,
    pub lambda: f64,
    pub kappa_target: f64,
}

impl PulseSchedule {
    pub fn new(cycles: usize, dt: f64, lambda: f64) -> Result<Self> {
        if cycles == 0 {
            return Err(Error::InvalidParameter("schedule needs at least one cycle".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("interval dt = {dt} must be positive")));
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("schedule lambda"));
        }
        Ok(Self {
            cycles,
            dt,
            pulse: PulseKind::PiX,
            lambda,
            kappa_target: lambda * cycles as f64 * dt,
        })
    }

    /// Schedule with `λΔt = kappa_step` repeated until `κ` reaches `kappa`.
    pub fn for_kappa(kappa: f64, kappa_step: f64, lambda: f64) -> Result<Self> {
        if !(kappa_step > 0.0) || !(kappa > 0.0) || !(lambda > 0.0) {
            return Err(Error::InvalidParameter(
                "kappa, kappa_step and lambda must be positive".into(),
            ));
        }
        let cycles = (kappa / kappa_step).round().max(1.0) as usize;
        Self::new(cycles, kappa_step / lambda, lambda)
    }

    pub fn with_pulse(mut self, pulse: PulseKind) -> Result<Self> {
        if let PulseKind::Finite { duration, detuning } = pulse {
            if !(duration > 0.0 && duration.is_finite()) || !detuning.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "finite pulse needs positive duration, got {duration}"
                )));
            }
        }
        self.pulse = pulse;
        Ok(self)
    }

    /// Real time spanned by the schedule, pulses included.
    pub fn duration(&self) -> f64 {
        let pulse = match self.pulse {
            PulseKind::PiX => 0.0,
            PulseKind::Finite { duration, .. } => duration,
        };
        2.0 * self.cycles as f64 * (self.dt + pulse)
    }
}

/// `exp(-iH_R Δt) σ_x exp(-iH_R Δt) σ_x` with the RWA Hamiltonian.
pub fn echo_cycle(lambda: f64, dt: f64, cfg: &HilbertConfig) -> OperatorMatrix {
    let u = unitary_propagator(&rwa_hamiltonian(cfg, lambda), dt);
    let sx = pi_pulse_x(cfg);
    u.dot(&sx).dot(&u).dot(&sx)
}

/// `exp{(λΔt/2)(a² - a†²) σ_x}`, the generator one echo cycle approximates.
pub fn ideal_echo_generator(lambda: f64, dt: f64, cfg: &HilbertConfig) -> Result<OperatorMatrix> {
    let gen = squeeze_generator(cfg)
        .dot(&cfg.sigma(Pauli::X))
        .scale_real(lambda * dt / 2.0);
    matrix_exp(&gen)
}

/// `-ln(Δx̂/Δx̂(0))`.
pub fn measured_kappa(dx_norm: f64) -> f64 {
    -dx_norm.ln()
}

fn pulse_unitary(schedule: &PulseSchedule, cfg: &HilbertConfig) -> Result<OperatorMatrix> {
    match schedule.pulse {
        PulseKind::PiX => Ok(pi_pulse_x(cfg)),
        PulseKind::Finite { duration, detuning } => {
            let e_x = std::f64::consts::PI / duration;
            let control = build_hamiltonian(&HamiltonianSpec::qubit_control(detuning, e_x), cfg)?
                .into_static()
                .expect("qubit control is static");
            let h = &control + &rwa_hamiltonian(cfg, schedule.lambda);
            Ok(unitary_propagator(&h, duration))
        }
    }
}

/// Closed-system evolution over the pulse schedule, sampled after every
/// cycle under the default truncation policy.
pub fn run_schedule(
    schedule: &PulseSchedule,
    initial: &DensityMatrix,
    cfg: &HilbertConfig,
) -> Result<Trajectory> {
    run_schedule_with_policy(schedule, initial, cfg, &TruncationPolicy::default())
}

pub fn run_schedule_with_policy(
    schedule: &PulseSchedule,
    initial: &DensityMatrix,
    cfg: &HilbertConfig,
    policy: &TruncationPolicy,
) -> Result<Trajectory> {
    if initial.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            found: initial.dim(),
        });
    }
    let u = unitary_propagator(&rwa_hamiltonian(cfg, schedule.lambda), schedule.dt);
    let p = pulse_unitary(schedule, cfg)?;
    let cycle = u.dot(&p).dot(&u).dot(&p);
    let cycle_adj = cycle.adjoint();
    let period = schedule.duration() / schedule.cycles as f64;

    let sampler = Sampler::new(*cfg).with_eigen_probe(false);
    let mut rows = Vec::with_capacity(schedule.cycles + 1);
    policy.check(cfg, initial, 0, 0.0)?;
    let first = sampler.sample(0.0, initial, None)?;
    let dx0 = first.dx;
    rows.push(first);

    let mut rho = initial.as_operator().clone();
    for step in 1..=schedule.cycles {
        rho = cycle.dot(&rho).dot(&cycle_adj);
        let t = step as f64 * period;
        let state = DensityMatrix::from_evolved(rho.clone());
        if !state.as_operator().is_finite() {
            return Err(Error::NonFinite("closed-system state"));
        }
        policy.check(cfg, &state, step, t)?;
        rows.push(sampler.sample(t, &state, Some(dx0))?);
    }
    Ok(Trajectory {
        observable_names: Vec::new(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{qubit_x_state, StateVector};

    fn initial(cfg: &HilbertConfig, sign: f64) -> DensityMatrix {
        qubit_x_state(sign)
            .kron(&StateVector::basis(cfg.fock_dim, 0))
            .projector()
    }

    #[test]
    fn schedule_validation() {
        assert!(PulseSchedule::new(0, 1.0, 1.0).is_err());
        assert!(PulseSchedule::new(1, 0.0, 1.0).is_err());
        let s = PulseSchedule::for_kappa(0.3, 1e-3, 2.0).unwrap();
        assert_eq!(s.cycles, 300);
        assert!((s.kappa_target - 0.3).abs() < 1e-12);
        assert!(s
            .clone()
            .with_pulse(PulseKind::Finite {
                duration: -1.0,
                detuning: 0.0
            })
            .is_err());
    }

    #[test]
    fn short_cycle_is_near_identity() {
        let cfg = HilbertConfig::new(10).unwrap();
        let lambda = 1.0;
        let d1 = echo_cycle(lambda, 1e-3, &cfg).max_abs_diff(&cfg.identity());
        let d2 = echo_cycle(lambda, 5e-4, &cfg).max_abs_diff(&cfg.identity());
        assert!(d1 < 0.05);
        assert!((d1 / d2 - 2.0).abs() < 0.1, "{}", d1 / d2);
    }

    #[test]
    fn echo_error_is_second_order() {
        let cfg = HilbertConfig::new(16).unwrap();
        let lambda = 1.0;
        let err = |dt: f64| {
            echo_cycle(lambda, dt, &cfg).max_abs_diff(&ideal_echo_generator(lambda, dt, &cfg).unwrap())
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn zero_coupling_keeps_uncertainty() {
        let cfg = HilbertConfig::new(12).unwrap();
        let s = PulseSchedule::new(20, 1e-3, 0.0).unwrap();
        let traj = run_schedule(&s, &initial(&cfg, 1.0), &cfg).unwrap();
        for r in &traj.rows {
            assert!((r.dx_norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn squeezing_and_antisqueezing_follow_exponential() {
        let cfg = HilbertConfig::new(40).unwrap();
        let s = PulseSchedule::for_kappa(0.3, 1e-3, 1.0).unwrap();
        for (sign, expected) in [(1.0, (-0.3f64).exp()), (-1.0, 0.3f64.exp())] {
            let traj = run_schedule(&s, &initial(&cfg, sign), &cfg).unwrap();
            let last = traj.last().unwrap();
            assert!(
                (last.dx_norm / expected - 1.0).abs() < 5e-3,
                "sign {sign}: {} vs {expected}",
                last.dx_norm
            );
            assert!((last.trace - 1.0).abs() < 1e-8);
            assert!((last.sx - sign).abs() < 1e-6);
        }
    }

    #[test]
    fn long_schedule_preserves_trace() {
        let cfg = HilbertConfig::new(20).unwrap();
        let s = PulseSchedule::new(1000, 1e-4, 1.0).unwrap();
        let traj = run_schedule(&s, &initial(&cfg, 1.0), &cfg).unwrap();
        assert_eq!(traj.rows.len(), 1001);
        for r in &traj.rows {
            assert!((r.trace - 1.0).abs() < 1e-8);
            assert!((r.purity - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn truncation_violation_reports_step() {
        let cfg = HilbertConfig::new(8).unwrap();
        let s = PulseSchedule::for_kappa(2.0, 1e-2, 1.0).unwrap();
        match run_schedule(&s, &initial(&cfg, 1.0), &cfg) {
            Err(Error::TruncationViolation { step, .. }) => assert!(step > 0),
            other => panic!("expected truncation violation, got {other:?}"),
        }
    }

    #[test]
    fn finite_pulse_approaches_ideal() {
        let cfg = HilbertConfig::new(20).unwrap();
        let ideal = PulseSchedule::for_kappa(0.2, 1e-2, 1.0).unwrap();
        let finite = ideal
            .clone()
            .with_pulse(PulseKind::Finite {
                duration: 1e-5,
                detuning: 0.0,
            })
            .unwrap();
        let a = run_schedule(&ideal, &initial(&cfg, 1.0), &cfg).unwrap();
        let b = run_schedule(&finite, &initial(&cfg, 1.0), &cfg).unwrap();
        let da = a.last().unwrap().dx_norm;
        let db = b.last().unwrap().dx_norm;
        assert!((da - db).abs() < 1e-3, "{da} vs {db}");
    }
}
