//! Matrix exponential.
//!
//! Two independent routes: scaling-and-squaring with a fixed-order Taylor
//! series for arbitrary input, and an eigendecomposition path for Hermitian
//! or anti-Hermitian input. [`matrix_exp`] dispatches between them.

use super::operator::OperatorMatrix;
use super::C64;
use crate::error::{Error, Result};

/// Taylor order used after scaling.
pub const TAYLOR_ORDER: usize = 18;

/// Scaled 1-norm target before the series is evaluated.
const SCALED_NORM: f64 = 0.5;

/// Relative residue below which input is treated as (anti-)Hermitian.
const STRUCTURE_TOL: f64 = 1e-13;

pub fn matrix_exp(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix_exp input"));
    }
    let scale = 1.0 + a.max_abs();
    if a.hermitian_residue() <= STRUCTURE_TOL * scale {
        return Ok(a.hermitian_function(|x| C64::new(x.exp(), 0.0)));
    }
    if a.anti_hermitian_residue() <= STRUCTURE_TOL * scale {
        return Ok(expm_anti_hermitian(a));
    }
    expm_taylor(a)
}

/// `exp(A)` for anti-Hermitian `A = iK` through the eigenvectors of `K`.
fn expm_anti_hermitian(a: &OperatorMatrix) -> OperatorMatrix {
    let k = a.scale(C64::new(0.0, -1.0));
    k.hermitian_function(|x| C64::new(0.0, x).exp())
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn unitary_propagator(h: &OperatorMatrix, t: f64) -> OperatorMatrix {
    h.hermitian_function(|x| C64::new(0.0, -x * t).exp())
}

/// Eigendecomposition route; the input must be Hermitian or anti-Hermitian.
pub fn expm_eig(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix_exp input"));
    }
    let herm = a.hermitian_residue();
    let anti = a.anti_hermitian_residue();
    if herm <= anti {
        Ok(a.hermitian_function(|x| C64::new(x.exp(), 0.0)))
    } else {
        Ok(expm_anti_hermitian(a))
    }
}

/// Scaling and squaring with a degree-[`TAYLOR_ORDER`] Taylor polynomial.
pub fn expm_taylor(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix_exp input"));
    }
    let norm = a.norm_one();
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(squarings as i32));

    let n = a.dim();
    let mut result = OperatorMatrix::identity(n);
    let mut term = OperatorMatrix::identity(n);
    for k in 1..=TAYLOR_ORDER {
        term = term.dot(&scaled).scale_real(1.0 / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    if !result.is_finite() {
        return Err(Error::NonFinite("matrix_exp result"));
    }
    Ok(result)
}
