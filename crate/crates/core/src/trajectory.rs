//! Time series of expectation values and its CSV form.

use std::io::{self, Write};

use crate::error::Result;
use crate::hilbert::{DensityMatrix, HilbertConfig, OperatorMatrix, Pauli, EDGE_LEVELS};

/// Exact header of `trajectory.csv`.
pub const TRAJECTORY_HEADER: &str = "t_s,dx_norm,exp_x,exp_x2,sx,sy,sz,nbar,trace,purity";

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    /// Δx̂(t)/Δx̂(0)
    pub dx_norm: f64,
    pub dx: f64,
    pub exp_x: f64,
    pub exp_x2: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub nbar: f64,
    pub trace: f64,
    pub purity: f64,
    /// Smallest eigenvalue of ρ, when probed.
    pub min_eig: Option<f64>,
    pub hermiticity: f64,
    pub edge_population: f64,
    /// Expectation values of caller-supplied observables, in order.
    pub extra: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub observable_names: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn first(&self) -> Option<&TrajectoryRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// Index of the sample with the smallest normalized uncertainty.
    pub fn argmin_dx(&self) -> Option<usize> {
        self.rows
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.dx_norm.total_cmp(&b.1.dx_norm))
            .map(|(i, _)| i)
    }

    pub fn min_dx(&self) -> Option<&TrajectoryRow> {
        self.argmin_dx().map(|i| &self.rows[i])
    }

    pub fn max_edge_population(&self) -> f64 {
        self.rows.iter().map(|r| r.edge_population).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        for r in &self.rows {
            let cols = [
                r.t, r.dx_norm, r.exp_x, r.exp_x2, r.sx, r.sy, r.sz, r.nbar, r.trace, r.purity,
            ];
            let line: Vec<String> = cols.iter().map(|v| fmt_sig12(*v)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ASCII output")
    }
}

/// Decimal scientific notation with 12 significant digits.
pub fn fmt_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Precomputed observables for sampling composite-space states.
#[derive(Clone, Debug)]
pub struct Sampler {
    cfg: HilbertConfig,
    x: OperatorMatrix,
    x2: OperatorMatrix,
    sx: OperatorMatrix,
    sy: OperatorMatrix,
    sz: OperatorMatrix,
    number: OperatorMatrix,
    extra: Vec<OperatorMatrix>,
    probe_eigenvalues: bool,
}

impl Sampler {
    pub fn new(cfg: HilbertConfig) -> Self {
        let x = cfg.x();
        let x2 = x.dot(&x);
        Self {
            cfg,
            x,
            x2,
            sx: cfg.sigma(Pauli::X),
            sy: cfg.sigma(Pauli::Y),
            sz: cfg.sigma(Pauli::Z),
            number: cfg.number(),
            extra: Vec::new(),
            probe_eigenvalues: true,
        }
    }

    pub fn with_observables(mut self, extra: Vec<OperatorMatrix>) -> Self {
        self.extra = extra;
        self
    }

    pub fn with_eigen_probe(mut self, probe: bool) -> Self {
        self.probe_eigenvalues = probe;
        self
    }

    pub fn config(&self) -> HilbertConfig {
        self.cfg
    }

    /// Measures `rho` at time `t`; `dx0` normalizes the uncertainty (pass `None`
    /// for the first sample, which then normalizes to itself).
    pub fn sample(&self, t: f64, rho: &DensityMatrix, dx0: Option<f64>) -> Result<TrajectoryRow> {
        let exp_x = rho.expect(&self.x)?.re;
        let exp_x2 = rho.expect(&self.x2)?.re;
        let dx = (exp_x2 - exp_x * exp_x).max(0.0).sqrt();
        let norm = dx0.unwrap_or(dx);
        let extra = self
            .extra
            .iter()
            .map(|op| rho.expect(op).map(|z| z.re))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrajectoryRow {
            t,
            dx_norm: if norm > 0.0 { dx / norm } else { f64::NAN },
            dx,
            exp_x,
            exp_x2,
            sx: rho.expect(&self.sx)?.re,
            sy: rho.expect(&self.sy)?.re,
            sz: rho.expect(&self.sz)?.re,
            nbar: rho.expect(&self.number)?.re,
            trace: rho.trace().re,
            purity: rho.purity(),
            min_eig: self.probe_eigenvalues.then(|| rho.min_eigenvalue()),
            hermiticity: rho.as_operator().hermitian_residue(),
            edge_population: self.cfg.edge_population(rho, EDGE_LEVELS),
            extra,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig12(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig12(-2.5e-7), "-2.50000000000e-7");
        assert_eq!(fmt_sig12(std::f64::consts::PI), "3.14159265359e0");
    }

    #[test]
    fn csv_header_is_exact() {
        let csv = Trajectory::default().to_csv_string();
        assert_eq!(csv, "t_s,dx_norm,exp_x,exp_x2,sx,sy,sz,nbar,trace,purity\n");
    }
}
