//! Exact rotating-frame evolution and its comparison with the RWA.

use std::f64::consts::PI;

use super::{bare_hamiltonian, echo_cycle, lab_coupling, pi_pulse_x};
use crate::error::{Error, Result};
use crate::hilbert::{
    matrix_exp, qubit_x_state, HilbertConfig, OperatorMatrix, StateVector, C64,
};

/// Resolution of the time-ordered integration, in steps per resonator period.
pub const STEPS_PER_PERIOD: usize = 100;

/// `H_R(t) = U₀†(t)(H_lab - H₀)U₀(t)` with `H₀ = E_z σ_z/2 + ω₀ a†a`.
#[derive(Clone, Debug)]
pub struct RotatingFrameHamiltonian {
    coupling: OperatorMatrix,
    energies: Vec<f64>,
    pub e_z: f64,
    pub omega0: f64,
    pub lambda: f64,
}

impl RotatingFrameHamiltonian {
    pub fn new(cfg: &HilbertConfig, e_z: f64, omega0: f64, lambda: f64) -> Self {
        let bare = bare_hamiltonian(cfg, e_z, omega0);
        let energies = (0..cfg.dim()).map(|i| bare.get(i, i).re).collect();
        Self {
            coupling: lab_coupling(cfg, lambda),
            energies,
            e_z,
            omega0,
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn at(&self, t: f64) -> OperatorMatrix {
        let e = &self.energies;
        let v = &self.coupling;
        OperatorMatrix::from_fn(self.dim(), |j, k| {
            v.get(j, k) * C64::new(0.0, (e[j] - e[k]) * t).exp()
        })
    }

    /// Fourth-order Magnus propagation from `t0` to `t1` in `steps` steps.
    pub fn propagate(&self, psi: &StateVector, t0: f64, t1: f64, steps: usize) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        if steps == 0 || !(t1 >= t0) {
            return Err(Error::InvalidParameter("propagation needs t1 >= t0 and steps > 0".into()));
        }
        let h = (t1 - t0) / steps as f64;
        let offset = h * 3f64.sqrt() / 6.0;
        let mut out = psi.clone();
        for n in 0..steps {
            let mid = t0 + (n as f64 + 0.5) * h;
            let h1 = self.at(mid - offset);
            let h2 = self.at(mid + offset);
            let first = (&h1 + &h2).scale(C64::new(0.0, -h / 2.0));
            let second = h2.commutator(&h1).scale_real(-3f64.sqrt() / 12.0 * h * h);
            out = out.transformed(&matrix_exp(&(&first + &second))?);
        }
        Ok(out)
    }
}

/// Average of `H_R(t)` over `[0, period)` with a periodic trapezoid rule.
pub fn time_averaged(h: &RotatingFrameHamiltonian, period: f64, samples: usize) -> OperatorMatrix {
    let mut acc = OperatorMatrix::zeros(h.dim());
    for k in 0..samples {
        acc += &h.at(period * k as f64 / samples as f64);
    }
    acc.scale_real(1.0 / samples as f64)
}

/// One echo cycle under the exact rotating-frame Hamiltonian. `dt` should be
/// a whole number of resonator periods so that the σ_x pulses coincide with
/// their lab-frame form.
pub fn exact_echo_state(
    h: &RotatingFrameHamiltonian,
    psi: &StateVector,
    dt: f64,
    steps_per_interval: usize,
    cfg: &HilbertConfig,
) -> Result<StateVector> {
    let sx = pi_pulse_x(cfg);
    let s = psi.transformed(&sx);
    let s = h.propagate(&s, 0.0, dt, steps_per_interval)?;
    let s = s.transformed(&sx);
    h.propagate(&s, dt, 2.0 * dt, steps_per_interval)
}

pub fn rwa_echo_state(lambda: f64, psi: &StateVector, dt: f64, cfg: &HilbertConfig) -> StateVector {
    psi.transformed(&echo_cycle(lambda, dt, cfg))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RwaCheck {
    pub lambda_over_omega: f64,
    pub dt: f64,
    pub steps_per_interval: usize,
    pub fidelity: f64,
}

/// Fidelity between exact and RWA evolution over one echo cycle starting from
/// `|σ_x=+1⟩ ⊗ |0⟩`, at `E_z = 2ω₀`, with each interval lasting `periods`
/// resonator periods. Frequencies are in units of `ω₀`.
pub fn rwa_fidelity(lambda_over_omega: f64, periods: usize, cfg: &HilbertConfig) -> Result<RwaCheck> {
    if periods == 0 || !lambda_over_omega.is_finite() {
        return Err(Error::InvalidParameter("rwa check needs periods > 0 and finite λ/ω₀".into()));
    }
    let omega0 = 1.0;
    let h = RotatingFrameHamiltonian::new(cfg, 2.0 * omega0, omega0, lambda_over_omega);
    let dt = periods as f64 * 2.0 * PI / omega0;
    let steps = periods * STEPS_PER_PERIOD;
    let psi = qubit_x_state(1.0).kron(&StateVector::basis(cfg.fock_dim, 0));
    let exact = exact_echo_state(&h, &psi, dt, steps, cfg)?;
    let approx = rwa_echo_state(lambda_over_omega, &psi, dt, cfg);
    Ok(RwaCheck {
        lambda_over_omega,
        dt,
        steps_per_interval: steps,
        fidelity: exact.fidelity(&approx),
    })
}
