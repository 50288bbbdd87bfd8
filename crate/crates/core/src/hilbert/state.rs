use ndarray::Array1;

use super::operator::OperatorMatrix;
use super::C64;
use crate::error::{Error, Result};

/// Tolerance applied to the trace, Hermiticity and positivity checks at construction.
pub const STATE_TOL: f64 = 1e-9;

/// Normalized pure-state amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Array1<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite("state vector"));
        }
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(amplitudes: Array1<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("cannot normalize zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.mapv(|z| z / norm),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn expect(&self, op: &OperatorMatrix) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        let applied = op.apply(self);
        Ok(self
            .amplitudes
            .iter()
            .zip(applied.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `U|ψ⟩` without re-checking the norm.
    pub fn transformed(&self, unitary: &OperatorMatrix) -> Self {
        Self {
            amplitudes: unitary.apply(self),
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut amplitudes = Array1::zeros(self.dim() * other.dim());
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                amplitudes[i * other.dim() + j] = a * b;
            }
        }
        Self { amplitudes }
    }

    pub fn projector(&self) -> DensityMatrix {
        let n = self.dim();
        let op = OperatorMatrix::from_fn(n, |i, j| self.amplitudes[i] * self.amplitudes[j].conj());
        DensityMatrix { op }
    }
}

/// Unit-trace, Hermitian, positive-semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: OperatorMatrix,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and the minimum eigenvalue within [`STATE_TOL`].
    pub fn new(op: OperatorMatrix) -> Result<Self> {
        if !op.is_finite() {
            return Err(Error::NonFinite("density matrix"));
        }
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let herm = op.hermitian_residue();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity residue {herm:.3e} exceeds {STATE_TOL:.0e}"
            )));
        }
        let rho = Self { op };
        let min = rho.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:.3e} is negative"
            )));
        }
        Ok(rho)
    }

    /// Wraps an operator produced by trusted evolution without validation.
    pub(crate) fn from_evolved(op: OperatorMatrix) -> Self {
        Self { op }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn into_operator(self) -> OperatorMatrix {
        self.op
    }

    pub fn trace(&self) -> C64 {
        self.op.trace()
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        let a = self.op.as_array();
        a.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (values, _) = self.op.eigh();
        values.first().copied().unwrap_or(0.0)
    }

    /// `Tr(ρA)`
    pub fn expect(&self, op: &OperatorMatrix) -> Result<C64> {
        self.op.check_same_dim(op)?;
        let r = self.op.as_array();
        let a = op.as_array();
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += r[(i, k)] * a[(k, i)];
            }
        }
        Ok(acc)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            op: self.op.kron(&other.op),
        }
    }

    /// `U ρ U†`
    pub fn transformed(&self, unitary: &OperatorMatrix) -> Self {
        Self {
            op: unitary.dot(&self.op).dot(&unitary.adjoint()),
        }
    }

    /// Traces out the leading factor of dimension `outer`, keeping the trailing one.
    pub fn trace_out_leading(&self, outer: usize) -> Result<Self> {
        let n = self.dim();
        if outer == 0 || !n.is_multiple_of(outer) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: outer,
            });
        }
        let inner = n / outer;
        let a = self.op.as_array();
        let op = OperatorMatrix::from_fn(inner, |i, j| {
            (0..outer).map(|q| a[(q * inner + i, q * inner + j)]).sum()
        });
        Ok(Self { op })
    }

    /// Traces out the trailing factor of dimension `inner`, keeping the leading one.
    pub fn trace_out_trailing(&self, inner: usize) -> Result<Self> {
        let n = self.dim();
        if inner == 0 || !n.is_multiple_of(inner) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: inner,
            });
        }
        let outer = n / inner;
        let a = self.op.as_array();
        let op = OperatorMatrix::from_fn(outer, |p, q| {
            (0..inner).map(|m| a[(p * inner + m, q * inner + m)]).sum()
        });
        Ok(Self { op })
    }
}
