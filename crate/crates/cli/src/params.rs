//! Translation of configuration sections into simulator parameters.

use std::f64::consts::PI;

use nems_squeeze_core::device::{lambda_n, DeviceParams};
use nems_squeeze_core::lindblad::Fig2Config;

use crate::config::{ConfigError, ConfigResult, RunConfig, Units};

/// Device values used by `--paper-defaults`. `n` and `L_m` are assumptions;
/// the loop width follows from them and the field.
pub const REFERENCE_DEVICE: &[(&str, f64)] = &[
    ("B_tesla", 0.2),
    ("l_m", 30e-6),
    ("dX0_m", 5e-13),
    ("Ic_A", 60e-9),
    ("f0_Hz", 250e6),
    ("n", 10000.0),
    ("L_m", 30e-6),
    ("Ct_F", 1e-15),
    ("ng", 0.5),
];

/// Bare-frequency inputs with optional paper defaults.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub paper_defaults: bool,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig, paper_defaults: bool) -> Self {
        Self { cfg, paper_defaults }
    }

    /// The `units` key, defaulting to angular only under `--paper-defaults`.
    pub fn units(&self) -> ConfigResult<Units> {
        match self.cfg.units()? {
            Some(u) => Ok(u),
            None if self.paper_defaults => Ok(Units::Angular),
            None => Err(ConfigError(format!(
                "{}: [sim] missing required key `units` (angular or cyclic)",
                self.cfg.path.display()
            ))),
        }
    }

    fn device_value(&self, key: &str) -> ConfigResult<Option<f64>> {
        if let Some(v) = self.cfg.get::<f64>("device", key)? {
            return Ok(Some(v));
        }
        if self.paper_defaults {
            return Ok(REFERENCE_DEVICE.iter().find(|(k, _)| *k == key).map(|(_, v)| *v));
        }
        Ok(None)
    }

    fn device_required(&self, key: &str) -> ConfigResult<f64> {
        self.device_value(key)?.ok_or_else(|| {
            ConfigError(format!(
                "{}: [device] missing required key `{key}`",
                self.cfg.path.display()
            ))
        })
    }

    pub fn has_device(&self) -> bool {
        self.cfg.has_section("device")
    }

    pub fn device(&self) -> ConfigResult<DeviceParams> {
        let mass = self.device_value("M_kg")?;
        let zero_point = self.device_value("dX0_m")?;
        if self.cfg.has("device", "M_kg") && self.cfg.has("device", "dX0_m") {
            return Err(self.cfg.invalid("device", "dX0_m", "give either M_kg or dX0_m, not both"));
        }
        let width = self.device_value("W_m")?;
        let n = self.device_value("n")?;
        if width.is_none() && n.is_none() {
            return Err(ConfigError(format!(
                "{}: [device] needs `W_m` or the flux index `n`",
                self.cfg.path.display()
            )));
        }
        let index = |key: &str, v: f64| -> ConfigResult<i64> {
            if v.fract() != 0.0 {
                return Err(self.cfg.invalid("device", key, "must be an integer"));
            }
            Ok(v as i64)
        };
        let mut p = DeviceParams {
            b_field: self.device_required("B_tesla")?,
            loop_width: width.unwrap_or(1.0),
            loop_length: self.device_required("L_m")?,
            resonator_length: self.device_required("l_m")?,
            critical_current: self.device_required("Ic_A")?,
            mass: mass.unwrap_or(1.0),
            omega0: 2.0 * PI * self.device_required("f0_Hz")?,
            n: index("n", n.unwrap_or(0.0))?,
            m: index("m", self.device_value("m")?.unwrap_or(0.0))?,
            island_capacitance: self.device_required("Ct_F")?,
            gate_charge: self.device_value("ng")?.unwrap_or(0.5),
        };
        match (mass, zero_point) {
            (Some(_), None) => {}
            (None, Some(z)) => p = p.with_zero_point(z),
            _ => {
                return Err(ConfigError(format!(
                    "{}: [device] needs `M_kg` or `dX0_m`",
                    self.cfg.path.display()
                )))
            }
        }
        if width.is_none() {
            if p.b_field <= 0.0 {
                return Err(self.cfg.invalid("device", "B_tesla", "must be positive to infer W_m from n"));
            }
            p = p.with_width_for_index();
        } else if n.is_none() {
            p.n = p.flux_quanta().round() as i64;
        }
        p.validate().map_err(|e| ConfigError(format!("{}: [device] {e}", self.cfg.path.display())))?;
        Ok(p)
    }

    /// λ in rad/s, given directly in `[squeeze]` or derived from `[device]`.
    pub fn lambda(&self) -> ConfigResult<LambdaSource> {
        let bare = self.cfg.get::<f64>("squeeze", "lambda")?;
        let rads = self.cfg.get::<f64>("squeeze", "lambda_rads")?;
        if bare.is_some() && rads.is_some() {
            return Err(self.cfg.invalid("squeeze", "lambda_rads", "give either lambda or lambda_rads"));
        }
        let direct = match (bare, rads) {
            (Some(v), None) => Some(self.units()?.to_angular(v)),
            (None, Some(v)) => Some(v),
            _ => None,
        };
        match (direct, self.has_device()) {
            (Some(_), true) => Err(ConfigError(format!(
                "{}: coupling is ambiguous: [squeeze] gives lambda and [device] defines it too",
                self.cfg.path.display()
            ))),
            (Some(v), false) => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(self.cfg.invalid("squeeze", "lambda", "must be positive"));
                }
                Ok(LambdaSource { value: v, signed: v, from_device: false })
            }
            (None, true) => {
                let p = self.device()?;
                let l = lambda_n(&p).map_err(|e| ConfigError(format!("{}: [device] {e}", self.cfg.path.display())))?;
                Ok(LambdaSource { value: l.abs(), signed: l, from_device: true })
            }
            (None, false) if self.paper_defaults => {
                let d = Fig2Config::paper_defaults().lambda;
                Ok(LambdaSource { value: d, signed: d, from_device: false })
            }
            (None, false) => Err(ConfigError(format!(
                "{}: no coupling: set [squeeze] lambda (with [sim] units) or lambda_rads, or a [device] section",
                self.cfg.path.display()
            ))),
        }
    }

    fn dec_or<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> ConfigResult<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.cfg.get::<T>("decoherence", key)? {
            Some(v) => Ok(v),
            None => match default {
                Some(d) if self.paper_defaults => Ok(d),
                _ => Err(ConfigError(format!(
                    "{}: [decoherence] missing required key `{key}`",
                    self.cfg.path.display()
                ))),
            },
        }
    }

    pub fn fig2(&self) -> ConfigResult<Fig2Config> {
        let base = Fig2Config::paper_defaults();
        let mut c = base.clone();
        let units = self.units()?;
        c.lambda = self.lambda()?.value;
        c.omega0 = match (
            self.cfg.get::<f64>("decoherence", "f0_Hz")?,
            self.cfg.get::<f64>("device", "f0_Hz")?,
        ) {
            (Some(a), Some(b)) if a != b => {
                return Err(self.cfg.invalid("decoherence", "f0_Hz", "differs from [device] f0_Hz"))
            }
            (Some(f), _) | (None, Some(f)) => 2.0 * PI * f,
            (None, None) if self.paper_defaults => base.omega0,
            (None, None) => {
                return Err(ConfigError(format!(
                    "{}: [decoherence] missing required key `f0_Hz`",
                    self.cfg.path.display()
                )))
            }
        };
        c.quality = self.dec_or("Q", Some(base.quality))?;
        c.temperature = self.dec_or("T_K", Some(base.temperature))?;
        c.t1 = self.dec_or("T1_s", Some(base.t1))?;
        c.t2 = self.dec_or("T2_s", Some(base.t2))?;
        c.nq_override = self.cfg.get("decoherence", "Nq_override")?;
        c.gamma_phi_override = self
            .cfg
            .get::<f64>("decoherence", "gamma_phi")?
            .map(|g| units.to_angular(g));
        let sign: f64 = self.cfg.get("squeeze", "qubit_sign")?.unwrap_or(1.0);
        if sign != 1.0 && sign != -1.0 {
            return Err(self.cfg.invalid("squeeze", "qubit_sign", "must be +1 or -1"));
        }
        c.qubit_sign = sign;
        c.fock_dim = self.cfg.get("sim", "fock_dim")?.unwrap_or(base.fock_dim);
        c.t_final = match self.cfg.get::<f64>("sim", "t_final_s")? {
            Some(t) => t,
            None if self.paper_defaults => base.t_final,
            None => {
                return Err(ConfigError(format!(
                    "{}: [sim] missing required key `t_final_s`",
                    self.cfg.path.display()
                )))
            }
        };
        c.sample_every = self
            .cfg
            .get("sim", "sample_every_s")?
            .unwrap_or(if self.paper_defaults { base.sample_every } else { c.t_final / 150.0 });
        c.step = self.cfg.get("sim", "step_s")?;
        c.edge_tol = self.cfg.get("sim", "edge_tol")?.unwrap_or(base.edge_tol);
        c.stop_after_rise = self.cfg.get("sim", "stop_after_rise")?;
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaSource {
    /// Magnitude used by the simulations, rad/s.
    pub value: f64,
    /// λₙ with its sign when derived from the device.
    pub signed: f64,
    pub from_device: bool,
}

/// `10^(-1 + k/2)` for k = 0..4: 0.1λ to 10λ in half decades.
pub fn default_sweep_ratios() -> Vec<f64> {
    (0..5).map(|k| 10f64.powf(-1.0 + 0.5 * k as f64)).collect()
}
