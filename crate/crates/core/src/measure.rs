//! Generating-function readout of the resonator position.
//!
//! A probe qubit prepared in `σ_z = +1` couples through `λ x̂ σ_x` for a time
//! `t`, then passes through `H exp{i(π/4) n·σ}` with `n = (0, -cos η, sin η)`.
//! Its polarization equals `Re{e^{iη} g(κ)}` with `g(κ) = Tr(ρ e^{iκx̂})` and
//! `κ = 2λt` in `x̂` units. Moments follow from finite differences of `g`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::hilbert::{pauli, quadrature_x, tensor, DensityMatrix, OperatorMatrix, Pauli, C64};
use crate::trajectory::fmt_sig12;

/// Agreement required between gate-level and closed-form polarizations.
pub const EQUIVALENCE_TOL: f64 = 1e-9;

/// Default finite-difference step in `x̂` units.
pub const DEFAULT_KAPPA_STEP: f64 = 0.05;

/// Exact header of `gf.csv`.
pub const GF_HEADER: &str = "kappa,re,im,re_stderr,im_stderr";

const GRID_MATCH_TOL: f64 = 1e-12;

/// Optional imperfections during the coupling interval.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProtocolOptions {
    /// Dephasing rate of the probe qubit in the `σ_x` pointer basis (rad/s).
    /// Branch coherence decays as `exp(-2Γt)`.
    pub dephasing_rate: f64,
}

fn qubit_gate(eta: f64) -> OperatorMatrix {
    let h = OperatorMatrix::from_rows(
        2,
        &[
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(-FRAC_1_SQRT_2, 0.0),
        ],
    );
    // exp{iθ n·σ} = cos θ + i sin θ (n·σ), θ = π/4, n = (0, -cos η, sin η)
    let (ny, nz) = (-eta.cos(), eta.sin());
    let (c, s) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
    let i = C64::new(0.0, 1.0);
    let rot = OperatorMatrix::from_rows(
        2,
        &[
            C64::new(c, 0.0) + i * s * nz,
            i * s * C64::new(0.0, -ny),
            i * s * C64::new(0.0, ny),
            C64::new(c, 0.0) - i * s * nz,
        ],
    );
    h.dot(&rot)
}

/// Gate-level simulation of the readout. A negative `lambda` realizes
/// negative `κ`.
pub fn protocol_polarization(
    rho_res: &DensityMatrix,
    lambda: f64,
    t: f64,
    eta: f64,
    options: ProtocolOptions,
) -> Result<f64> {
    if !(t >= 0.0) || !lambda.is_finite() || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "protocol needs t >= 0 and finite λ, η (t = {t}, λ = {lambda}, η = {eta})"
        )));
    }
    let d = rho_res.dim();
    let x = quadrature_x(d)?;
    let phase = lambda * t;
    // exp(-iφ x̂ σ_x) = P₊ ⊗ e^{-iφx̂} + P₋ ⊗ e^{iφx̂}
    let plus = x.hermitian_function(|v| C64::new(0.0, -phase * v).exp());
    let minus = x.hermitian_function(|v| C64::new(0.0, phase * v).exp());
    let half = C64::new(0.5, 0.0);
    let p_plus = OperatorMatrix::from_rows(2, &[half, half, half, half]);
    let p_minus = OperatorMatrix::from_rows(2, &[half, -half, -half, half]);
    let coupling = &tensor(&p_plus, &plus) + &tensor(&p_minus, &minus);

    let up = OperatorMatrix::diagonal(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let joint = tensor(&up, rho_res.as_operator());
    let mut rho = coupling.dot(&joint).dot(&coupling.adjoint());
    if options.dephasing_rate > 0.0 {
        let p = 0.5 * (1.0 - (-2.0 * options.dephasing_rate * t).exp());
        let sx = tensor(&pauli(Pauli::X), &OperatorMatrix::identity(d));
        rho = &rho.scale_real(1.0 - p) + &sx.dot(&rho).dot(&sx).scale_real(p);
    }
    let gate = tensor(&qubit_gate(eta), &OperatorMatrix::identity(d));
    let out = gate.dot(&rho).dot(&gate.adjoint());
    let sz = tensor(&pauli(Pauli::Z), &OperatorMatrix::identity(d));
    Ok(out.dot(&sz).trace().re)
}

/// `Tr(ρ e^{iκx̂})` by direct matrix exponential.
pub fn closed_form_gf(rho_res: &DensityMatrix, kappa: f64) -> Result<C64> {
    let x = quadrature_x(rho_res.dim())?;
    let e = x.hermitian_function(|v| C64::new(0.0, kappa * v).exp());
    rho_res.expect(&e)
}

/// Binomial readout: `M` shots and a base seed mixed with the point index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shots {
    pub count: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GFCurve {
    pub kappas: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub shots: Option<u64>,
    pub re_stderr: Option<Vec<f64>>,
    pub im_stderr: Option<Vec<f64>>,
}

impl GFCurve {
    pub fn len(&self) -> usize {
        self.kappas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappas.is_empty()
    }

    pub fn index_of(&self, kappa: f64) -> Option<usize> {
        self.kappas
            .iter()
            .position(|k| (k - kappa).abs() <= GRID_MATCH_TOL * (1.0 + kappa.abs()))
    }

    pub fn value(&self, i: usize) -> C64 {
        C64::new(self.re[i], self.im[i])
    }

    fn stderr(&self, i: usize) -> (f64, f64) {
        (
            self.re_stderr.as_ref().map_or(0.0, |s| s[i]),
            self.im_stderr.as_ref().map_or(0.0, |s| s[i]),
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{GF_HEADER}")?;
        for i in 0..self.len() {
            let (rs, is) = match (&self.re_stderr, &self.im_stderr) {
                (Some(r), Some(m)) => (fmt_sig12(r[i]), fmt_sig12(m[i])),
                _ => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{},{},{rs},{is}",
                fmt_sig12(self.kappas[i]),
                fmt_sig12(self.re[i]),
                fmt_sig12(self.im[i])
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ASCII output")
    }
}

/// `{0, ±h, ±2h, …, ±n h}` in ascending order.
pub fn symmetric_grid(step: f64, points_per_side: usize) -> Vec<f64> {
    let n = points_per_side as i64;
    (-n..=n).map(|k| k as f64 * step).collect()
}

fn sample_polarization(p: f64, m: u64, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let prob = ((1.0 + p) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(m, prob)
        .map_err(|e| Error::InvalidParameter(format!("binomial readout: {e}")))?
        .sample(rng);
    let est = 2.0 * k as f64 / m as f64 - 1.0;
    Ok((est, ((1.0 - est * est).max(0.0) / m as f64).sqrt()))
}

/// Runs the readout at `η = 0` and `η = π/2` for every grid point.
pub fn generating_function(
    rho_res: &DensityMatrix,
    kappa_grid: &[f64],
    shots: Option<Shots>,
    options: ProtocolOptions,
) -> Result<GFCurve> {
    if kappa_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(s) = shots {
        if s.count == 0 {
            return Err(Error::InvalidParameter("shot count must be positive".into()));
        }
    }
    let lambda = 1.0;
    let mut re = Vec::with_capacity(kappa_grid.len());
    let mut im = Vec::with_capacity(kappa_grid.len());
    let mut re_err = Vec::new();
    let mut im_err = Vec::new();
    for (idx, &kappa) in kappa_grid.iter().enumerate() {
        let t = kappa.abs() / (2.0 * lambda);
        let sign = if kappa < 0.0 { -lambda } else { lambda };
        let p0 = protocol_polarization(rho_res, sign, t, 0.0, options)?;
        let p1 = protocol_polarization(rho_res, sign, t, FRAC_PI_2, options)?;
        match shots {
            None => {
                re.push(p0);
                im.push(-p1);
            }
            Some(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ idx as u64);
                let (r, rs) = sample_polarization(p0, s.count, &mut rng)?;
                let (q, qs) = sample_polarization(p1, s.count, &mut rng)?;
                re.push(r);
                im.push(-q);
                re_err.push(rs);
                im_err.push(qs);
            }
        }
    }
    let sampled = shots.is_some();
    Ok(GFCurve {
        kappas: kappa_grid.to_vec(),
        re,
        im,
        shots: shots.map(|s| s.count),
        re_stderr: sampled.then_some(re_err),
        im_stderr: sampled.then_some(im_err),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    /// Central differences on `{0, ±h}`; `±2h` feeds the error estimate.
    ThreePoint,
    /// Fourth-order central differences on `{0, ±h, ±2h}`.
    FivePoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub mean_x: f64,
    pub mean_x2: f64,
    pub var_x: f64,
    pub fd_step: f64,
    pub error_bound: f64,
    pub stencil: Stencil,
}

struct Estimate {
    mean: f64,
    x2: f64,
    mean_noise: f64,
    x2_noise: f64,
}

fn three_point(c: &GFCurve, idx: &[usize; 5], h: f64) -> Estimate {
    let [m1, z, p1] = [idx[1], idx[2], idx[3]];
    let (r0, _) = c.stderr(z);
    let (rm, im_m) = c.stderr(m1);
    let (rp, im_p) = c.stderr(p1);
    Estimate {
        mean: (c.im[p1] - c.im[m1]) / (2.0 * h),
        x2: -(c.re[p1] - 2.0 * c.re[z] + c.re[m1]) / (h * h),
        mean_noise: (im_p.powi(2) + im_m.powi(2)).sqrt() / (2.0 * h),
        x2_noise: (rp.powi(2) + 4.0 * r0.powi(2) + rm.powi(2)).sqrt() / (h * h),
    }
}

fn three_point_wide(c: &GFCurve, idx: &[usize; 5], h: f64) -> (f64, f64) {
    let [m2, _, z, _, p2] = *idx;
    (
        (c.im[p2] - c.im[m2]) / (4.0 * h),
        -(c.re[p2] - 2.0 * c.re[z] + c.re[m2]) / (4.0 * h * h),
    )
}

fn five_point(c: &GFCurve, idx: &[usize; 5], h: f64) -> Estimate {
    let [m2, m1, z, p1, p2] = *idx;
    let s: Vec<(f64, f64)> = idx.iter().map(|&i| c.stderr(i)).collect();
    let mean = (c.im[m2] - 8.0 * c.im[m1] + 8.0 * c.im[p1] - c.im[p2]) / (12.0 * h);
    let x2 = -(-c.re[p2] + 16.0 * c.re[p1] - 30.0 * c.re[z] + 16.0 * c.re[m1] - c.re[m2])
        / (12.0 * h * h);
    let mean_noise =
        (s[0].1.powi(2) + 64.0 * s[1].1.powi(2) + 64.0 * s[3].1.powi(2) + s[4].1.powi(2)).sqrt()
            / (12.0 * h);
    let x2_noise = (s[0].0.powi(2)
        + 256.0 * s[1].0.powi(2)
        + 900.0 * s[2].0.powi(2)
        + 256.0 * s[3].0.powi(2)
        + s[4].0.powi(2))
    .sqrt()
        / (12.0 * h * h);
    Estimate {
        mean,
        x2,
        mean_noise,
        x2_noise,
    }
}

/// Position mean and variance (in `x̂` units) from a measured curve.
/// The error bound adds the truncation estimate to three propagated
/// standard errors.
pub fn moments_from_gf(curve: &GFCurve, h: f64, stencil: Stencil) -> Result<MomentEstimate> {
    if curve.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut idx = [0usize; 5];
    for (slot, k) in idx.iter_mut().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
        let kappa = k * h;
        *slot = curve.index_of(kappa).ok_or(Error::MissingStencil { kappa })?;
    }
    let fine = three_point(curve, &idx, h);
    let (wide_mean, wide_x2) = three_point_wide(curve, &idx, h);
    let (est, trunc_mean, trunc_x2) = match stencil {
        Stencil::ThreePoint => {
            let tm = (wide_mean - fine.mean).abs() / 3.0;
            let tx = (wide_x2 - fine.x2).abs() / 3.0;
            (fine, tm, tx)
        }
        Stencil::FivePoint => {
            let five = five_point(curve, &idx, h);
            let tm = (five.mean - fine.mean).abs();
            let tx = (five.x2 - fine.x2).abs();
            (five, tm, tx)
        }
    };
    let var = est.x2 - est.mean * est.mean;
    let trunc = trunc_x2 + 2.0 * est.mean.abs() * trunc_mean;
    let noise = est.x2_noise + 2.0 * est.mean.abs() * est.mean_noise;
    let error_bound = trunc + 3.0 * noise;
    if var < -error_bound {
        return Err(Error::NegativeVariance {
            var,
            bound: error_bound,
        });
    }
    Ok(MomentEstimate {
        mean_x: est.mean,
        mean_x2: est.x2,
        var_x: var,
        fd_step: h,
        error_bound,
        stencil,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub points: usize,
    pub max_deviation: f64,
}

/// Checks the gate-level readout against `Tr(ρ Re{e^{iη} e^{iκx̂}})` at
/// `κ = 2λt` for each `t` and both `η`.
pub fn verify_protocol_equivalence(
    rho_res: &DensityMatrix,
    lambda: f64,
    t_grid: &[f64],
) -> Result<EquivalenceReport> {
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut offending = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for &t in t_grid {
        let g = closed_form_gf(rho_res, 2.0 * lambda * t)?;
        for eta in [0.0, FRAC_PI_2] {
            let expected = (C64::from_polar(1.0, eta) * g).re;
            let got = protocol_polarization(rho_res, lambda, t, eta, ProtocolOptions::default())?;
            let dev = (got - expected).abs();
            max_deviation = max_deviation.max(dev);
            if dev > EQUIVALENCE_TOL {
                offending.push((t, eta));
            }
        }
    }
    if !offending.is_empty() {
        return Err(Error::ProtocolMismatch {
            offending,
            max_deviation,
        });
    }
    Ok(EquivalenceReport {
        points: 2 * t_grid.len(),
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::squeeze_resonator;
    use crate::hilbert::{thermal_state, StateVector};

    fn vacuum(d: usize) -> DensityMatrix {
        StateVector::basis(d, 0).projector()
    }

    #[test]
    fn zero_time_polarizations() {
        let rho = vacuum(10);
        let o = ProtocolOptions::default();
        assert!((protocol_polarization(&rho, 1.0, 0.0, 0.0, o).unwrap() - 1.0).abs() < 1e-14);
        assert!(protocol_polarization(&rho, 1.0, 0.0, FRAC_PI_2, o).unwrap().abs() < 1e-14);
    }

    #[test]
    fn vacuum_gaussian_at_unit_kappa() {
        let rho = vacuum(40);
        let p = protocol_polarization(&rho, 1.0, 0.5, 0.0, ProtocolOptions::default()).unwrap();
        assert!((p - (-0.5f64).exp()).abs() < 1e-9);
        assert!((p - 0.60653066).abs() < 1e-8);
    }

    #[test]
    fn dephasing_damps_signal() {
        let rho = vacuum(30);
        let t = 0.4;
        let rate = 0.3;
        let clean = protocol_polarization(&rho, 1.0, t, 0.0, ProtocolOptions::default()).unwrap();
        let noisy = protocol_polarization(&rho, 1.0, t, 0.0, ProtocolOptions { dephasing_rate: rate })
            .unwrap();
        assert!((noisy - clean * (-2.0 * rate * t).exp()).abs() < 1e-12);
    }

    #[test]
    fn curve_is_conjugate_symmetric_and_bounded() {
        let s = squeeze_resonator(0.3, 30).unwrap();
        let rho = StateVector::basis(30, 1).projector().transformed(&s);
        let grid = symmetric_grid(0.1, 6);
        let c = generating_function(&rho, &grid, None, ProtocolOptions::default()).unwrap();
        let n = c.len();
        for i in 0..n {
            let j = n - 1 - i;
            assert!((c.re[i] - c.re[j]).abs() < 1e-9);
            assert!((c.im[i] + c.im[j]).abs() < 1e-9);
            assert!(c.value(i).norm() <= 1.0 + 1e-12);
        }
        let z = c.index_of(0.0).unwrap();
        assert!((c.re[z] - 1.0).abs() < 1e-12 && c.im[z].abs() < 1e-12);
    }

    #[test]
    fn exact_moments_for_reference_states() {
        let grid = symmetric_grid(DEFAULT_KAPPA_STEP, 2);
        let cases = [
            (vacuum(40), 1.0, 1e-3),
            (
                vacuum(40).transformed(&squeeze_resonator(0.5, 40).unwrap()),
                (-1.0f64).exp(),
                2e-3,
            ),
            (thermal_state(40, 1.22).unwrap(), 2.0 * 1.22 + 1.0, 5e-3),
        ];
        for (rho, want, tol) in cases {
            let c = generating_function(&rho, &grid, None, ProtocolOptions::default()).unwrap();
            let m = moments_from_gf(&c, DEFAULT_KAPPA_STEP, Stencil::FivePoint).unwrap();
            assert!((m.var_x - want).abs() < tol, "{} vs {want}", m.var_x);
            assert!((m.var_x - want).abs() <= m.error_bound);
        }
    }

    #[test]
    fn missing_stencil_point() {
        let c = generating_function(&vacuum(8), &[-0.05, 0.0, 0.05], None, ProtocolOptions::default())
            .unwrap();
        assert!(matches!(
            moments_from_gf(&c, 0.05, Stencil::ThreePoint),
            Err(Error::MissingStencil { .. })
        ));
        assert_eq!(
            generating_function(&vacuum(8), &[], None, ProtocolOptions::default()).unwrap_err(),
            Error::EmptyGrid
        );
    }

    #[test]
    fn sampled_curve_is_seeded() {
        let rho = thermal_state(30, 0.5).unwrap();
        let grid = symmetric_grid(0.1, 2);
        let shots = Some(Shots { count: 1000, seed: 7 });
        let a = generating_function(&rho, &grid, shots, ProtocolOptions::default()).unwrap();
        let b = generating_function(&rho, &grid, shots, ProtocolOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.re_stderr.is_some());
        assert_eq!(a.to_csv_string().lines().next(), Some(GF_HEADER));
        let exact = generating_function(&rho, &grid, None, ProtocolOptions::default()).unwrap();
        assert!(exact.to_csv_string().lines().nth(1).unwrap().ends_with(",,"));
    }
}
