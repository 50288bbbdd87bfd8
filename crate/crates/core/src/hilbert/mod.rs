//! Operator algebra on a qubit tensored with a truncated Fock space.
//!
//! Tensor order is fixed as qubit ⊗ resonator everywhere: composite index
//! `q * fock_dim + n` for qubit level `q` (0 ↔ σ_z = +1) and Fock level `n`.

mod expm;
mod operator;
mod state;

pub use expm::{expm_eig, expm_taylor, matrix_exp, unitary_propagator, TAYLOR_ORDER};
pub use operator::{OperatorMatrix, SparseOperator};
pub use state::{DensityMatrix, StateVector, STATE_TOL};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Tail weight allowed beyond the truncation for thermal states.
pub const THERMAL_TAIL_TOL: f64 = 1e-6;

/// Number of top Fock levels watched by the truncation monitor.
pub const EDGE_LEVELS: usize = 2;

/// Default population allowed in the top [`EDGE_LEVELS`] Fock levels.
pub const DEFAULT_EDGE_TOL: f64 = 1e-5;

/// Truncation adequacy rule: the top `levels` Fock states may hold at most
/// `max_population` at any monitored time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub levels: usize,
    pub max_population: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            levels: EDGE_LEVELS,
            max_population: DEFAULT_EDGE_TOL,
        }
    }
}

impl TruncationPolicy {
    pub fn with_tolerance(max_population: f64) -> Self {
        Self {
            max_population,
            ..Self::default()
        }
    }

    /// Returns the edge population, or a violation error tagged with `step` and `time`.
    pub fn check(&self, cfg: &HilbertConfig, rho: &DensityMatrix, step: usize, time: f64) -> Result<f64> {
        let population = cfg.edge_population(rho, self.levels);
        if population > self.max_population || !population.is_finite() {
            return Err(Error::TruncationViolation {
                step,
                time,
                population,
                limit: self.max_population,
            });
        }
        Ok(population)
    }
}

/// Truncation of the resonator and layout of the composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertConfig {
    pub fock_dim: usize,
    pub qubit_first: bool,
}

impl HilbertConfig {
    pub fn new(fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidDimension { fock_dim });
        }
        Ok(Self {
            fock_dim,
            qubit_first: true,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.fock_dim
    }

    /// `I₂ ⊗ op`
    pub fn embed_resonator(&self, op: &OperatorMatrix) -> OperatorMatrix {
        tensor(&OperatorMatrix::identity(2), op)
    }

    /// `op ⊗ I_d`
    pub fn embed_qubit(&self, op: &OperatorMatrix) -> OperatorMatrix {
        tensor(op, &OperatorMatrix::identity(self.fock_dim))
    }

    pub fn a(&self) -> OperatorMatrix {
        self.embed_resonator(&ladder(self.fock_dim))
    }

    pub fn a_dag(&self) -> OperatorMatrix {
        self.a().adjoint()
    }

    pub fn x(&self) -> OperatorMatrix {
        self.embed_resonator(&ladder_x(self.fock_dim))
    }

    pub fn number(&self) -> OperatorMatrix {
        self.embed_resonator(&number(self.fock_dim))
    }

    pub fn sigma(&self, axis: Pauli) -> OperatorMatrix {
        self.embed_qubit(&pauli(axis))
    }

    pub fn identity(&self) -> OperatorMatrix {
        OperatorMatrix::identity(self.dim())
    }

    /// Population held by the top `levels` Fock states (summed over the qubit).
    pub fn edge_population(&self, rho: &DensityMatrix, levels: usize) -> f64 {
        let d = self.fock_dim;
        let a = rho.as_operator().as_array();
        (0..2)
            .flat_map(|q| (d.saturating_sub(levels)..d).map(move |n| q * d + n))
            .map(|k| a[(k, k)].re)
            .sum()
    }
}

/// Single-qubit operator selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

pub fn pauli(axis: Pauli) -> OperatorMatrix {
    let o = ZERO;
    let l = ONE;
    match axis {
        Pauli::X => OperatorMatrix::from_rows(2, &[o, l, l, o]),
        Pauli::Y => OperatorMatrix::from_rows(2, &[o, -I, I, o]),
        Pauli::Z => OperatorMatrix::from_rows(2, &[l, o, o, -l]),
        Pauli::Plus => OperatorMatrix::from_rows(2, &[o, l, o, o]),
        Pauli::Minus => OperatorMatrix::from_rows(2, &[o, o, l, o]),
    }
}

/// Annihilation operator on `d` Fock levels: `⟨m|a|n⟩ = √n δ_{m,n-1}`.
pub fn annihilation(d: usize) -> Result<OperatorMatrix> {
    HilbertConfig::new(d)?;
    Ok(ladder(d))
}

/// Dimensionless position quadrature `a + a†`.
pub fn quadrature_x(d: usize) -> Result<OperatorMatrix> {
    HilbertConfig::new(d)?;
    Ok(ladder_x(d))
}

fn ladder(d: usize) -> OperatorMatrix {
    OperatorMatrix::from_fn(d, |m, n| {
        if n == m + 1 {
            C64::new((n as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

fn ladder_x(d: usize) -> OperatorMatrix {
    let a = ladder(d);
    &a + &a.adjoint()
}

pub(crate) fn number(d: usize) -> OperatorMatrix {
    let values: Vec<C64> = (0..d).map(|n| C64::new(n as f64, 0.0)).collect();
    OperatorMatrix::diagonal(&values)
}

/// Kronecker product, left factor outermost.
pub fn tensor(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    a.kron(b)
}

/// `Tr(ρA)`
pub fn expect(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<C64> {
    rho.expect(op)
}

/// Smallest truncation keeping the thermal tail weight `qᵈ` below [`THERMAL_TAIL_TOL`].
pub fn thermal_min_dim(nbar: f64) -> usize {
    if nbar <= 0.0 {
        return 2;
    }
    let q = nbar / (1.0 + nbar);
    let d = (THERMAL_TAIL_TOL.ln() / q.ln()).floor() as usize + 1;
    d.max(2)
}

/// Thermal resonator state with mean occupation `nbar`.
///
/// Errors if the weight beyond the truncation is not below [`THERMAL_TAIL_TOL`].
pub fn thermal_state(d: usize, nbar: f64) -> Result<DensityMatrix> {
    HilbertConfig::new(d)?;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "thermal occupation {nbar} must be finite and nonnegative"
        )));
    }
    let required = thermal_min_dim(nbar);
    if d < required {
        return Err(Error::TruncationTooSmall { given: d, required });
    }
    thermal_state_truncated(d, nbar)
}

/// Thermal distribution restricted to `d` levels and renormalized, without the tail check.
pub fn thermal_state_truncated(d: usize, nbar: f64) -> Result<DensityMatrix> {
    HilbertConfig::new(d)?;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "thermal occupation {nbar} must be finite and nonnegative"
        )));
    }
    let q = nbar / (1.0 + nbar);
    let weights: Vec<f64> = (0..d).map(|n| q.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    let diag: Vec<C64> = weights.iter().map(|w| C64::new(w / total, 0.0)).collect();
    Ok(DensityMatrix::from_evolved(OperatorMatrix::diagonal(&diag)))
}

/// Qubit eigenstate of σ_x with eigenvalue `sign` (±1).
pub fn qubit_x_state(sign: f64) -> StateVector {
    let s = if sign >= 0.0 { 1.0 } else { -1.0 };
    let r = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::new(ndarray::arr1(&[C64::new(r, 0.0), C64::new(s * r, 0.0)]))
        .expect("unit norm")
}

/// Position uncertainty `sqrt(⟨x̂²⟩ - ⟨x̂⟩²)` of a state, in zero-point units.
pub fn position_uncertainty(rho: &DensityMatrix, x: &OperatorMatrix) -> Result<f64> {
    let ex = rho.expect(x)?.re;
    let ex2 = rho.expect(&x.dot(x))?.re;
    Ok((ex2 - ex * ex).max(0.0).sqrt())
}
