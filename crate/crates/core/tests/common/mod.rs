#![allow(dead_code)]

use nems_squeeze_core::hilbert::{DensityMatrix, OperatorMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random mixed state of a `d`-level oscillator supported on the lowest
/// `support` levels: `GG†/Tr(GG†)` with Gaussian `G`.
pub fn random_density(d: usize, support: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 {
        // Box-Muller
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    };
    let g = OperatorMatrix::from_fn(d, |i, j| {
        if i < support && j < support {
            C64::new(normal(), normal())
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let rho = g.dot(&g.adjoint());
    let tr = rho.trace().re;
    DensityMatrix::new(rho.scale_real(1.0 / tr)).expect("valid random state")
}
