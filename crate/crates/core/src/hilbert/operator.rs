use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{linalg::kron, Array1, Array2};

use super::state::StateVector;
use super::C64;
use crate::error::{Error, Result};

/// Dense complex square matrix acting on a (composite) Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    data: Array2<C64>,
}

impl OperatorMatrix {
    pub fn from_array(data: Array2<C64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: cols,
            });
        }
        Ok(Self { data })
    }

    /// Row-major construction; panics if `entries.len()` is not a square number.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "expected {dim}x{dim} entries");
        let data = Array2::from_shape_vec((dim, dim), entries.to_vec())
            .expect("shape checked above");
        Self { data }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            data: Array2::from_shape_fn((dim, dim), |(i, j)| f(i, j)),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: Array2::eye(dim),
        }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self {
            data: Array2::from_diag(&Array1::from(values.to_vec())),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<C64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.t().mapv(|z| z.conj()),
        }
    }

    pub fn dot(&self, rhs: &Self) -> Self {
        Self {
            data: self.data.dot(&rhs.data),
        }
    }

    pub fn try_dot(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(self.dot(rhs))
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        Self {
            data: kron(&self.data, &rhs.data),
        }
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.dot(rhs) - &rhs.dot(self)
    }

    pub fn anticommutator(&self, rhs: &Self) -> Self {
        &self.dot(rhs) + &rhs.dot(self)
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            data: self.data.mapv(|z| z * factor),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn apply(&self, state: &StateVector) -> Array1<C64> {
        self.data.dot(state.amplitudes())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Max-entry modulus of `A - A†`.
    pub fn hermitian_residue(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Max-entry modulus of `A + A†`.
    pub fn anti_hermitian_residue(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] + self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Leading `size × size` block.
    pub fn leading_block(&self, size: usize) -> Self {
        Self {
            data: self.data.slice(ndarray::s![..size, ..size]).to_owned(),
        }
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        self.data
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
    /// unitary whose columns are the eigenvectors. Only the Hermitian part is used.
    pub fn eigh(&self) -> (Vec<f64>, OperatorMatrix) {
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |i, j| {
            (self.data[(i, j)] + self.data[(j, i)].conj()) * 0.5
        });
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = Self::from_fn(n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    /// `V diag(f(λ)) V†` for Hermitian `self`.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> C64) -> Self {
        let (values, v) = self.eigh();
        let n = self.dim();
        let fv: Vec<C64> = values.iter().map(|&x| f(x)).collect();
        let mut scaled = v.data.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] *= fv[j];
            }
        }
        Self {
            data: scaled.dot(&v.data.t().mapv(|z| z.conj())),
        }
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        self.dot(rhs)
    }
}

impl Mul<&OperatorMatrix> for C64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale(self)
    }
}

impl Mul<&OperatorMatrix> for f64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale_real(self)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&OperatorMatrix> for OperatorMatrix {
    fn add_assign(&mut self, rhs: &OperatorMatrix) {
        self.data += &rhs.data;
    }
}

/// Operator stored as its nonzero entries, for cheap products with dense matrices.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    pub fn from_dense(op: &OperatorMatrix) -> Self {
        let entries = op
            .data
            .indexed_iter()
            .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
            .map(|((i, j), &z)| (i, j, z))
            .collect();
        Self {
            dim: op.dim(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `out += factor · A ρ`
    pub fn left_mul_acc(&self, rho: &Array2<C64>, factor: C64, out: &mut Array2<C64>) {
        for &(i, k, v) in &self.entries {
            let c = factor * v;
            let src = rho.row(k);
            let mut dst = out.row_mut(i);
            dst.zip_mut_with(&src, |d, s| *d += c * s);
        }
    }

    /// `out += factor · ρ A`
    pub fn right_mul_acc(&self, rho: &Array2<C64>, factor: C64, out: &mut Array2<C64>) {
        for &(k, j, v) in &self.entries {
            let c = factor * v;
            let src = rho.column(k);
            let mut dst = out.column_mut(j);
            dst.zip_mut_with(&src, |d, s| *d += c * s);
        }
    }

    /// `out += factor · A ρ A†`
    pub fn sandwich_acc(&self, rho: &Array2<C64>, factor: C64, out: &mut Array2<C64>) {
        for &(i, k, v) in &self.entries {
            let cv = factor * v;
            for &(j, l, w) in &self.entries {
                out[(i, j)] += cv * rho[(k, l)] * w.conj();
            }
        }
    }
}
