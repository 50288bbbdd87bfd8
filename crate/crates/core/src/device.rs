//! SQUID/resonator device model: Josephson energies as a function of the
//! resonator displacement, flux-bias classification and coupling constants.
//!
//! All energies returned here are already divided by ħ (rad/s).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Exact SI values (2019 redefinition).
pub mod constants {
    use std::f64::consts::PI;

    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const HBAR: f64 = PLANCK / (2.0 * PI);
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Φ₀ = h / 2e
    pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
}

use constants::{BOLTZMANN, ELEMENTARY_CHARGE, FLUX_QUANTUM, HBAR};

/// Tolerance for recognising exact integer / half-integer bias points.
pub const BIAS_POINT_TOL: f64 = 1e-9;

/// Tolerance between `BWL/Φ₀` and the declared integer index `n`.
pub const FLUX_INDEX_TOL: f64 = 1e-6;

/// Physical and geometric parameters of the resonator-SQUID device (SI units).
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceParams {
    /// Magnetic field, T.
    pub b_field: f64,
    /// SQUID loop width W, m.
    pub loop_width: f64,
    /// SQUID loop length L, m.
    pub loop_length: f64,
    /// Resonator length l, m.
    pub resonator_length: f64,
    /// Junction critical current, A.
    pub critical_current: f64,
    /// Resonator mass, kg.
    pub mass: f64,
    /// Resonator angular frequency ω₀, rad/s.
    pub omega0: f64,
    /// Flux-quantum index of the SQUID bias.
    pub n: i64,
    /// Flux-quantum index of the big-loop bias.
    pub m: i64,
    /// Total island capacitance, F.
    pub island_capacitance: f64,
    /// Dimensionless gate charge n_g.
    pub gate_charge: f64,
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("loop_width", self.loop_width),
            ("loop_length", self.loop_length),
            ("resonator_length", self.resonator_length),
            ("critical_current", self.critical_current),
            ("mass", self.mass),
            ("omega0", self.omega0),
            ("island_capacitance", self.island_capacitance),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        if !(self.b_field >= 0.0 && self.b_field.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "b_field must be finite and nonnegative, got {}",
                self.b_field
            )));
        }
        if !self.gate_charge.is_finite() {
            return Err(Error::InvalidParameter("gate_charge must be finite".into()));
        }
        Ok(())
    }

    /// Mass giving the requested zero-point amplitude `√(ħ/2Mω₀)` at the current ω₀.
    pub fn with_zero_point(mut self, zero_point: f64) -> Self {
        self.mass = HBAR / (2.0 * self.omega0 * zero_point * zero_point);
        self
    }

    /// Loop width placing `BWL` exactly at `n` flux quanta for the current B and L.
    pub fn with_width_for_index(mut self) -> Self {
        self.loop_width = self.n as f64 * FLUX_QUANTUM / (self.b_field * self.loop_length);
        self
    }

    pub fn loop_area(&self) -> f64 {
        self.loop_width * self.loop_length
    }

    /// Equilibrium flux bias `Φₑ⁰ = BWL`, Wb.
    pub fn flux_bias(&self) -> f64 {
        self.b_field * self.loop_area()
    }

    /// `Φₑ⁰ / Φ₀`
    pub fn flux_quanta(&self) -> f64 {
        self.flux_bias() / FLUX_QUANTUM
    }

    /// Single-junction Josephson energy `E_J⁰ = I_c Φ₀ / 2π`, J.
    pub fn josephson_energy_joule(&self) -> f64 {
        self.critical_current * FLUX_QUANTUM / (2.0 * PI)
    }

    /// `E_J⁰ / ħ`, rad/s.
    pub fn ej0(&self) -> f64 {
        self.josephson_energy_joule() / HBAR
    }

    /// Zero-point amplitude `δX₀ = √(ħ / 2Mω₀)`, m.
    pub fn zero_point(&self) -> f64 {
        (HBAR / (2.0 * self.mass * self.omega0)).sqrt()
    }

    /// Flux phase per unit displacement, `πBl/Φ₀`, rad/m.
    pub fn phase_per_meter(&self) -> f64 {
        PI * self.b_field * self.resonator_length / FLUX_QUANTUM
    }
}

fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `cos(π f + offset)` with `f` reduced modulo 2 first.
fn cos_flux(flux_quanta: f64, offset: f64) -> f64 {
    (PI * flux_quanta.rem_euclid(2.0) + offset).cos()
}

/// Josephson energy of the single SQUID,
/// `E_J = -2E_J⁰ cos(πΦₑ⁰/Φ₀ + πBlX/Φ₀) cos φ`, rad/s.
pub fn josephson_energy(params: &DeviceParams, displacement: f64, phi: f64) -> f64 {
    if displacement.abs() > params.loop_width / 10.0 {
        log::warn!(
            "displacement {displacement:e} m exceeds W/10; small-displacement model is stretched"
        );
    }
    let arg_offset = params.phase_per_meter() * displacement;
    -2.0 * params.ej0() * cos_flux(params.flux_quanta(), arg_offset) * phi.cos()
}

/// Lowest-order quadratic form at an integer bias,
/// `-(-1)ⁿ 2E_J⁰ {1 - (πnl/WL)² X²/2} cos φ`, rad/s.
pub fn josephson_energy_quadratic(params: &DeviceParams, displacement: f64, phi: f64) -> f64 {
    let k = PI * params.n as f64 * params.resonator_length / params.loop_area();
    -parity(params.n)
        * 2.0
        * params.ej0()
        * (1.0 - 0.5 * (k * displacement).powi(2))
        * phi.cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasKind {
    Linear,
    Quadratic,
    General,
}

/// Classified flux-bias point.
///
/// `linear` and `quadratic` are the Taylor coefficients of the Josephson
/// energy in the dimensionless quadrature at φ = 0:
/// `E_J(x̂) ≈ E_J(0) + linear·x̂ + quadratic·x̂²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasClass {
    pub kind: BiasKind,
    /// Flux bias in units of Φ₀.
    pub flux_bias: f64,
    /// Headline coupling: the linear coefficient at half-integer bias,
    /// λₙ at integer bias, the linear coefficient otherwise.
    pub coefficient: f64,
    pub linear: f64,
    pub quadratic: f64,
}

pub fn classify_bias(params: &DeviceParams) -> BiasClass {
    let f = params.flux_quanta();
    let eps = params.phase_per_meter() * params.zero_point();
    let ej0 = params.ej0();

    let nearest = f.round();
    if (f - nearest).abs() <= BIAS_POINT_TOL {
        let n = nearest as i64;
        let quadratic = parity(n) * ej0 * eps * eps;
        return BiasClass {
            kind: BiasKind::Quadratic,
            flux_bias: f,
            coefficient: -quadratic,
            linear: 0.0,
            quadratic,
        };
    }
    let lower = f.floor();
    if (f - lower - 0.5).abs() <= BIAS_POINT_TOL {
        let n = lower as i64;
        let linear = parity(n) * 2.0 * ej0 * eps;
        return BiasClass {
            kind: BiasKind::Linear,
            flux_bias: f,
            coefficient: linear,
            linear,
            quadratic: 0.0,
        };
    }
    let s = (PI * f.rem_euclid(2.0)).sin();
    let c = (PI * f.rem_euclid(2.0)).cos();
    let linear = 2.0 * ej0 * eps * s;
    BiasClass {
        kind: BiasKind::General,
        flux_bias: f,
        coefficient: linear,
        linear,
        quadratic: ej0 * eps * eps * c,
    }
}

/// Quadratic coupling `λₙ = -(-1)ⁿ E_J⁰ (π n l δX₀ / WL)²`, rad/s.
pub fn lambda_n(params: &DeviceParams) -> Result<f64> {
    let f = params.flux_quanta();
    if (f - params.n as f64).abs() > FLUX_INDEX_TOL {
        return Err(Error::NonIntegerFlux {
            flux_quanta: f,
            n: params.n,
        });
    }
    let k = PI * params.n as f64 * params.resonator_length * params.zero_point() / params.loop_area();
    Ok(-parity(params.n) * params.ej0() * k * k)
}

/// `E_J⁰ (πBlδX₀/Φ₀)²`, the magnitude of λₙ written through the field, rad/s.
pub fn coupling_magnitude_from_field(params: &DeviceParams) -> f64 {
    let k = params.phase_per_meter() * params.zero_point();
    params.ej0() * k * k
}

/// Josephson energy of the two-SQUID charge-qubit circuit at SQUID bias ±nΦ₀,
/// `-(-1)ⁿ 4E_J⁰ cos(πΦ_x/Φ₀) cos φ + (-1)ⁿ E_J⁰ (πnl/WL)² X² cos φ_l`, rad/s.
///
/// `big_loop_flux` is in Wb.
pub fn two_squid_energy(
    params: &DeviceParams,
    displacement: f64,
    phi: f64,
    phi_l: f64,
    big_loop_flux: f64,
) -> f64 {
    let self_term = two_squid_self_energy(params, phi, big_loop_flux);
    self_term + two_squid_coupling_coefficient(params) * displacement.powi(2) * phi_l.cos()
}

/// First (self-energy) term of [`two_squid_energy`].
pub fn two_squid_self_energy(params: &DeviceParams, phi: f64, big_loop_flux: f64) -> f64 {
    let fx = big_loop_flux / FLUX_QUANTUM;
    -parity(params.n) * 4.0 * params.ej0() * cos_flux(fx, 0.0) * phi.cos()
}

/// Coefficient of `X² cos φ_l` in [`two_squid_energy`], rad/(s·m²).
pub fn two_squid_coupling_coefficient(params: &DeviceParams) -> f64 {
    let k = PI * params.n as f64 * params.resonator_length / params.loop_area();
    parity(params.n) * params.ej0() * k * k
}

/// Qubit control fields at the decoupled bias point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlFields {
    /// `E_x = 4E_J⁰ π δΦ_x / Φ₀`, rad/s.
    pub e_x: f64,
    /// `δE_z = (2n_g - 1)(2e)² / 2C_t`, rad/s, evaluated at `n_g + dng`.
    pub de_z: f64,
}

/// `flux_amplitude` in Wb, `dng` is added to the device gate charge.
pub fn control_fields(params: &DeviceParams, flux_amplitude: f64, dng: f64) -> ControlFields {
    let reduced = PI * flux_amplitude / FLUX_QUANTUM;
    if reduced.abs() > 0.1 {
        log::warn!("πδΦ_x/Φ₀ = {reduced:.3} is not small; first-order control model is stretched");
    }
    ControlFields {
        e_x: 4.0 * params.ej0() * reduced,
        de_z: charging_splitting(params.gate_charge + dng, params.island_capacitance),
    }
}

/// `E_z = (2n_g - 1)(2e)² / 2C_t / ħ`, rad/s.
pub fn charging_splitting(gate_charge: f64, capacitance: f64) -> f64 {
    (2.0 * gate_charge - 1.0) * (2.0 * ELEMENTARY_CHARGE).powi(2) / (2.0 * capacitance) / HBAR
}

/// Bose–Einstein occupation `1/(exp(ħω/k_BT) - 1)`; zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (BOLTZMANN * temperature)).exp_m1()
}
