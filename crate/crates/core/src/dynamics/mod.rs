//! Hamiltonians of the coupled resonator/qubit system, closed-system
//! evolution, the squeezing operator and the spin-echo pulse protocol.

mod echo;
mod rwa;

pub use echo::{
    echo_cycle, ideal_echo_generator, measured_kappa, run_schedule, run_schedule_with_policy, PulseKind,
    PulseSchedule,
};
pub use rwa::{
    exact_echo_state, rwa_echo_state, rwa_fidelity, time_averaged, RotatingFrameHamiltonian,
    RwaCheck,
};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hilbert::{
    matrix_exp, unitary_propagator, DensityMatrix, HilbertConfig, OperatorMatrix, Pauli,
    StateVector, I,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// `E_z σ_z/2 + ω₀ a†a - (λ/2)(a + a†)² σ_y`
    Lab,
    /// Lab Hamiltonian in the frame of `E_z σ_z/2 + ω₀ a†a`, time dependent.
    RotatingExact,
    /// `i(λ/2)(a² σ⁺ - a†² σ⁻)`
    RotatingRwa,
    /// `δE_z σ_z/2 + E_x σ_x/2`
    QubitControl,
    /// `iλ(a² - a†²) σ_x / 2`
    EffectiveSqueeze,
}

impl HamiltonianKind {
    fn required(self) -> &'static [&'static str] {
        match self {
            Self::Lab | Self::RotatingExact => &["E_z", "omega0", "lambda"],
            Self::RotatingRwa | Self::EffectiveSqueeze => &["lambda"],
            Self::QubitControl => &["dE_z", "E_x"],
        }
    }
}

/// A Hamiltonian family plus its named angular-frequency coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub params: BTreeMap<String, f64>,
}

impl HamiltonianSpec {
    pub fn new(kind: HamiltonianKind) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_owned(), value);
        self
    }

    pub fn lab(e_z: f64, omega0: f64, lambda: f64) -> Self {
        Self::new(HamiltonianKind::Lab)
            .with("E_z", e_z)
            .with("omega0", omega0)
            .with("lambda", lambda)
    }

    pub fn rotating_exact(e_z: f64, omega0: f64, lambda: f64) -> Self {
        Self::new(HamiltonianKind::RotatingExact)
            .with("E_z", e_z)
            .with("omega0", omega0)
            .with("lambda", lambda)
    }

    pub fn rwa(lambda: f64) -> Self {
        Self::new(HamiltonianKind::RotatingRwa).with("lambda", lambda)
    }

    pub fn qubit_control(de_z: f64, e_x: f64) -> Self {
        Self::new(HamiltonianKind::QubitControl)
            .with("dE_z", de_z)
            .with("E_x", e_x)
    }

    pub fn effective_squeeze(lambda: f64) -> Self {
        Self::new(HamiltonianKind::EffectiveSqueeze).with("lambda", lambda)
    }

    fn get(&self, name: &str) -> Result<f64> {
        let v = *self
            .params
            .get(name)
            .ok_or_else(|| Error::MissingParameter(name.to_owned()))?;
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
        }
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        for name in self.kind.required() {
            self.get(name)?;
        }
        Ok(())
    }
}

/// A built Hamiltonian: a fixed matrix or a rotating-frame function of time.
#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Static(OperatorMatrix),
    RotatingFrame(RotatingFrameHamiltonian),
}

impl Hamiltonian {
    pub fn at(&self, t: f64) -> OperatorMatrix {
        match self {
            Self::Static(h) => h.clone(),
            Self::RotatingFrame(h) => h.at(t),
        }
    }

    pub fn into_static(self) -> Option<OperatorMatrix> {
        match self {
            Self::Static(h) => Some(h),
            Self::RotatingFrame(_) => None,
        }
    }
}

pub fn build_hamiltonian(spec: &HamiltonianSpec, cfg: &HilbertConfig) -> Result<Hamiltonian> {
    spec.validate()?;
    let h = match spec.kind {
        HamiltonianKind::Lab => lab_hamiltonian(
            cfg,
            spec.get("E_z")?,
            spec.get("omega0")?,
            spec.get("lambda")?,
        ),
        HamiltonianKind::RotatingExact => {
            return Ok(Hamiltonian::RotatingFrame(RotatingFrameHamiltonian::new(
                cfg,
                spec.get("E_z")?,
                spec.get("omega0")?,
                spec.get("lambda")?,
            )))
        }
        HamiltonianKind::RotatingRwa => rwa_hamiltonian(cfg, spec.get("lambda")?),
        HamiltonianKind::QubitControl => {
            let sz = cfg.sigma(Pauli::Z);
            let sx = cfg.sigma(Pauli::X);
            &sz.scale_real(spec.get("dE_z")? / 2.0) + &sx.scale_real(spec.get("E_x")? / 2.0)
        }
        HamiltonianKind::EffectiveSqueeze => effective_squeeze_hamiltonian(cfg, spec.get("lambda")?),
    };
    Ok(Hamiltonian::Static(h))
}

/// Uncoupled part `E_z σ_z/2 + ω₀ a†a`.
pub(crate) fn bare_hamiltonian(cfg: &HilbertConfig, e_z: f64, omega0: f64) -> OperatorMatrix {
    &cfg.sigma(Pauli::Z).scale_real(e_z / 2.0) + &cfg.number().scale_real(omega0)
}

/// `-(λ/2)(a + a†)² σ_y`
pub(crate) fn lab_coupling(cfg: &HilbertConfig, lambda: f64) -> OperatorMatrix {
    let x = cfg.x();
    x.dot(&x).dot(&cfg.sigma(Pauli::Y)).scale_real(-lambda / 2.0)
}

fn lab_hamiltonian(cfg: &HilbertConfig, e_z: f64, omega0: f64, lambda: f64) -> OperatorMatrix {
    &bare_hamiltonian(cfg, e_z, omega0) + &lab_coupling(cfg, lambda)
}

pub(crate) fn rwa_hamiltonian(cfg: &HilbertConfig, lambda: f64) -> OperatorMatrix {
    let a = cfg.a();
    let ad = a.adjoint();
    let raise = a.dot(&a).dot(&cfg.sigma(Pauli::Plus));
    let lower = ad.dot(&ad).dot(&cfg.sigma(Pauli::Minus));
    (&raise - &lower).scale(I * (lambda / 2.0))
}

/// `K = a² - a†²` on the composite space.
pub(crate) fn squeeze_generator(cfg: &HilbertConfig) -> OperatorMatrix {
    let a = cfg.a();
    let ad = a.adjoint();
    &a.dot(&a) - &ad.dot(&ad)
}

pub(crate) fn effective_squeeze_hamiltonian(cfg: &HilbertConfig, lambda: f64) -> OperatorMatrix {
    squeeze_generator(cfg)
        .dot(&cfg.sigma(Pauli::X))
        .scale(I * (lambda / 2.0))
}

/// States that can be propagated by a unitary.
pub trait Evolve: Sized {
    fn dim(&self) -> usize;
    fn propagated(&self, unitary: &OperatorMatrix) -> Self;
}

impl Evolve for StateVector {
    fn dim(&self) -> usize {
        StateVector::dim(self)
    }
    fn propagated(&self, unitary: &OperatorMatrix) -> Self {
        self.transformed(unitary)
    }
}

impl Evolve for DensityMatrix {
    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }
    fn propagated(&self, unitary: &OperatorMatrix) -> Self {
        self.transformed(unitary)
    }
}

/// Applies `exp(-iHt)` to a pure or mixed state.
pub fn evolve<S: Evolve>(state: &S, h: &OperatorMatrix, t: f64) -> Result<S> {
    if state.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: h.dim(),
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "evolution time {t} must be finite and nonnegative"
        )));
    }
    if h.hermitian_residue() > 1e-10 * (1.0 + h.max_abs()) {
        return Err(Error::InvalidParameter("Hamiltonian is not Hermitian".into()));
    }
    Ok(state.propagated(&unitary_propagator(h, t)))
}

/// Resonator-only squeezing operator `S(κ) = exp{κ(a² - a†²)/2}` on `d` levels.
pub fn squeeze_resonator(kappa: f64, d: usize) -> Result<OperatorMatrix> {
    let a = crate::hilbert::annihilation(d)?;
    let ad = a.adjoint();
    let gen = (&a.dot(&a) - &ad.dot(&ad)).scale_real(kappa / 2.0);
    matrix_exp(&gen)
}

/// `I₂ ⊗ S(κ)` on the composite space.
pub fn squeeze_operator(kappa: f64, cfg: &HilbertConfig) -> Result<OperatorMatrix> {
    Ok(cfg.embed_resonator(&squeeze_resonator(kappa, cfg.fock_dim)?))
}

/// Applies `σ_x ⊗ I` to the composite index layout without a matrix product.
pub(crate) fn pi_pulse_x(cfg: &HilbertConfig) -> OperatorMatrix {
    cfg.sigma(Pauli::X)
}
