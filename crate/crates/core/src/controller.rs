//! Discrete PD controller and closed-loop analysis.
//!
//! The analysis functions treat `kp` and `kd` as torque gains acting
//! directly on the rod:
//!
//! ```text
//! H(s) = l1 / ((m·l²/3)·s² + (kd + c)·s + kp ± m·g·l2)
//! ```
//!
//! The simulated loop converts the controller's force command to torque
//! through the actuation arm, so its equivalent torque gains are
//! `kp·l1/output_scale` and `kd·l1/output_scale` (see
//! [`PdGains::as_torque_gains`]).

use num_complex::Complex64;

use crate::dynamics::{GravityModel, PendulumParams};
use crate::error::{ensure_finite, invalid, numeric, Result};
use crate::tf::{quadratic_roots, TransferFunction};

/// Proportional and derivative gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
}

impl PdGains {
    pub fn new(kp: f64, kd: f64) -> Result<Self> {
        ensure_finite("kp", kp)?;
        ensure_finite("kd", kd)?;
        Ok(Self { kp, kd })
    }

    /// Torque gains equivalent to this force-command controller acting at
    /// moment arm `l1` behind an output divisor `output_scale`, ignoring
    /// actuator saturation.
    pub fn as_torque_gains(&self, l1: f64, output_scale: f64) -> PdGains {
        PdGains {
            kp: self.kp * l1 / output_scale,
            kd: self.kd * l1 / output_scale,
        }
    }
}

/// How the proportional term is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlLaw {
    /// `F = −(kp·(θ − θset) + kd·θ̇)/scale`, derivative on measurement.
    #[default]
    Tracking,
    /// The published pseudocode verbatim, operator precedence included:
    /// `F = −kp·Δθ − kd·(Δθ/dt)/10` with `Δθ` the change since the last
    /// sample. The setpoint is ignored and only the derivative term is
    /// divided by `output_scale`.
    Literal,
}

/// State carried between control ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub set_angle: f64,
    /// Previous measurement; `None` before the first tick.
    pub last_angle: Option<f64>,
    /// Control period, s.
    pub dt: f64,
    pub output_scale: f64,
    pub law: ControlLaw,
}

impl ControllerState {
    pub fn new(set_angle: f64, dt: f64) -> Result<Self> {
        let s = Self {
            set_angle,
            last_angle: None,
            dt,
            output_scale: 10.0,
            law: ControlLaw::Tracking,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_output_scale(mut self, output_scale: f64) -> Result<Self> {
        self.output_scale = output_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_law(mut self, law: ControlLaw) -> Self {
        self.law = law;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("set_angle", self.set_angle)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("control period must be positive"));
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(invalid("output scale must be positive"));
        }
        Ok(())
    }
}

/// One controller tick. Returns the force command and the updated state.
/// The first tick seeds `last_angle`, so its derivative term is zero.
pub fn control_step(
    gains: &PdGains,
    state: &ControllerState,
    measured_angle: f64,
) -> Result<(f64, ControllerState)> {
    if !measured_angle.is_finite() {
        return Err(numeric(format!("measured angle is {measured_angle}")));
    }
    let last = state.last_angle.unwrap_or(measured_angle);
    let delta = measured_angle - last;
    let rate = delta / state.dt;
    let force = match state.law {
        ControlLaw::Tracking => {
            let error = measured_angle - state.set_angle;
            -(gains.kp * error + gains.kd * rate) / state.output_scale
        }
        ControlLaw::Literal => -gains.kp * delta - gains.kd * rate / state.output_scale,
    };
    if !force.is_finite() {
        return Err(numeric("controller produced a non-finite force"));
    }
    let next = ControllerState {
        last_angle: Some(measured_angle),
        ..*state
    };
    Ok((force, next))
}

fn closed_loop_den(params: &PendulumParams, gains: &PdGains) -> [f64; 3] {
    let gravity = match params.gravity {
        GravityModel::Restoring => params.gravity_torque(),
        GravityModel::Toppling => -params.gravity_torque(),
    };
    [params.inertia(), gains.kd + params.c_damp, gains.kp + gravity]
}

/// Closed-loop transfer function from external force to angle.
pub fn closed_loop_tf(params: &PendulumParams, gains: &PdGains) -> Result<TransferFunction> {
    params.validate()?;
    TransferFunction::new(vec![params.l1], closed_loop_den(params, gains).to_vec())
}

/// Both roots of the closed-loop characteristic polynomial.
pub fn closed_loop_poles(params: &PendulumParams, gains: &PdGains) -> [Complex64; 2] {
    let [a, b, c] = closed_loop_den(params, gains);
    quadratic_roots(a, b, c)
}

/// Complex (underdamped) closed-loop poles with positive damping: the
/// discriminant `kd² − (4·m·l²/3)·(kp + m·g·l2)` is negative and `kd > 0`.
pub fn is_underdamped(params: &PendulumParams, gains: &PdGains) -> bool {
    let [a, b, c] = closed_loop_den(params, gains);
    b * b - 4.0 * a * c < 0.0 && b > 0.0
}

/// Both closed-loop poles strictly in the left half-plane. For a quadratic
/// with positive leading coefficient this holds exactly when every
/// coefficient is positive.
pub fn is_stable(params: &PendulumParams, gains: &PdGains) -> bool {
    let [a, b, c] = closed_loop_den(params, gains);
    a > 0.0 && b > 0.0 && c > 0.0
}

/// `ζ = (kd + c) / (2·√((m·l²/3)·(kp ± m·g·l2)))`; `None` when the
/// closed-loop stiffness is not positive.
pub fn damping_ratio(params: &PendulumParams, gains: &PdGains) -> Option<f64> {
    let [a, b, c] = closed_loop_den(params, gains);
    (c > 0.0).then(|| b / (2.0 * (a * c).sqrt()))
}

/// Stability over a rectangular gain grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMap {
    pub kp_axis: Vec<f64>,
    pub kd_axis: Vec<f64>,
    /// Row-major: `stable[i * kd_axis.len() + j]` is the cell at
    /// `(kp_axis[i], kd_axis[j])`.
    pub stable: Vec<bool>,
}

impl StabilityMap {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.stable[i * self.kd_axis.len() + j]
    }

    /// `kp,kd,stable` rows with a header line, LF terminated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kp,kd,stable\n");
        for (i, kp) in self.kp_axis.iter().enumerate() {
            for (j, kd) in self.kd_axis.iter().enumerate() {
                out.push_str(&format!("{kp},{kd},{}\n", u8::from(self.get(i, j))));
            }
        }
        out
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluates [`is_stable`] on an `n × n` grid spanning both ranges
/// (inclusive).
pub fn stability_region(
    params: &PendulumParams,
    kp_range: (f64, f64),
    kd_range: (f64, f64),
    grid_n: usize,
) -> Result<StabilityMap> {
    params.validate()?;
    if grid_n < 2 {
        return Err(invalid("grid_n must be at least 2"));
    }
    for (name, (lo, hi)) in [("kp", kp_range), ("kd", kd_range)] {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(invalid(format!("{name} range must be finite and non-empty")));
        }
    }
    let kp_axis = linspace(kp_range.0, kp_range.1, grid_n);
    let kd_axis = linspace(kd_range.0, kd_range.1, grid_n);
    let stable = kp_axis
        .iter()
        .flat_map(|&kp| {
            kd_axis
                .iter()
                .map(move |&kd| is_stable(params, &PdGains { kp, kd }))
        })
        .collect();
    Ok(StabilityMap {
        kp_axis,
        kd_axis,
        stable,
    })
}
