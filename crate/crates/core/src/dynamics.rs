//! Single-rod pendulum plant.
//!
//! The rod pivots at one end. Torque balance about the pivot:
//!
//! ```text
//! (m·l²/3)·θ̈ = F·l1 ∓ m·g·l2·sin θ − c·θ̇ + m·a_h·l2·cos θ
//! ```
//!
//! where the sign of the gravity term depends on [`GravityModel`] and
//! `a_h` is a horizontal pivot acceleration supplied by the base. The full
//! `sin θ` is kept during integration; only [`linearize`] uses the
//! small-angle form.

use num_complex::Complex64;

use crate::error::{ensure_finite, invalid, numeric, Result};
use crate::tf::TransferFunction;

/// Largest integration step accepted by [`step`].
pub const MAX_STEP: f64 = 0.01;

/// Direction of the gravity torque about the pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GravityModel {
    /// `−m·g·l2·sin θ`: gravity pulls the rod back toward θ = 0. This gives
    /// the purely imaginary open-loop pole pair.
    #[default]
    Restoring,
    /// `+m·g·l2·sin θ`: the upright rod topples without control.
    Toppling,
}

impl GravityModel {
    fn sign(self) -> f64 {
        match self {
            GravityModel::Restoring => 1.0,
            GravityModel::Toppling => -1.0,
        }
    }
}

/// Plant constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    /// Rod mass, kg.
    pub m: f64,
    /// Rod length, m.
    pub l: f64,
    /// Moment arm of the actuation force, m.
    pub l1: f64,
    /// Moment arm of gravity, m. Normally `l / 2`.
    pub l2: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Viscous damping at the pivot, N·m·s/rad.
    pub c_damp: f64,
    pub gravity: GravityModel,
}

impl PendulumParams {
    /// Uniform rod with `l2 = l/2`, no damping and restoring gravity.
    pub fn new(m: f64, l: f64, l1: f64, g: f64) -> Result<Self> {
        let p = Self {
            m,
            l,
            l1,
            l2: l / 2.0,
            g,
            c_damp: 0.0,
            gravity: GravityModel::Restoring,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_damping(mut self, c_damp: f64) -> Result<Self> {
        self.c_damp = c_damp;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gravity(mut self, gravity: GravityModel) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("l", self.l),
            ("l1", self.l1),
            ("l2", self.l2),
            ("g", self.g),
            ("c_damp", self.c_damp),
        ] {
            ensure_finite(name, v)?;
        }
        if self.m <= 0.0 {
            return Err(invalid("mass must be positive"));
        }
        if self.l <= 0.0 {
            return Err(invalid("rod length must be positive"));
        }
        if !(self.l1 > 0.0 && self.l1 <= self.l) {
            return Err(invalid("actuation arm l1 must satisfy 0 < l1 <= l"));
        }
        if !(self.l2 > 0.0 && self.l2 <= self.l) {
            return Err(invalid("gravity arm l2 must satisfy 0 < l2 <= l"));
        }
        if self.g <= 0.0 {
            return Err(invalid("gravity must be positive"));
        }
        if self.c_damp < 0.0 {
            return Err(invalid("damping must be non-negative"));
        }
        Ok(())
    }

    /// Moment of inertia about the pivot, `m·l²/3`.
    pub fn inertia(&self) -> f64 {
        self.m * self.l * self.l / 3.0
    }

    /// Peak gravity torque `m·g·l2`.
    pub fn gravity_torque(&self) -> f64 {
        self.m * self.g * self.l2
    }
}

/// Instantaneous plant state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PendulumState {
    /// Angle from vertical, rad, counter-clockwise positive.
    pub theta: f64,
    /// Angular velocity, rad/s.
    pub omega: f64,
    /// Simulation time, s.
    pub t: f64,
}

impl PendulumState {
    pub fn at_rest(theta: f64) -> Self {
        Self {
            theta,
            omega: 0.0,
            t: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.omega.is_finite() && self.t.is_finite()
    }
}

/// Base motion seen by the pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excitation {
    /// Effective gravity (nominal gravity plus vertical base acceleration).
    pub g_eff: f64,
    /// Horizontal pivot acceleration in the plane of swing, m/s².
    pub horizontal_accel: f64,
}

impl Excitation {
    /// A still base.
    pub fn still(params: &PendulumParams) -> Self {
        Self {
            g_eff: params.g,
            horizontal_accel: 0.0,
        }
    }
}

fn accel(p: &PendulumParams, theta: f64, omega: f64, force: f64, ex: &Excitation) -> f64 {
    let torque = force * p.l1 - p.gravity.sign() * p.m * ex.g_eff * p.l2 * theta.sin()
        - p.c_damp * omega
        + p.m * ex.horizontal_accel * p.l2 * theta.cos();
    torque / p.inertia()
}

/// Angular acceleration for a still base.
pub fn angular_acceleration(
    params: &PendulumParams,
    state: &PendulumState,
    force: f64,
) -> Result<f64> {
    angular_acceleration_excited(params, state, force, &Excitation::still(params))
}

/// Angular acceleration including base excitation.
pub fn angular_acceleration_excited(
    params: &PendulumParams,
    state: &PendulumState,
    force: f64,
    excitation: &Excitation,
) -> Result<f64> {
    if !state.is_finite() || !force.is_finite() {
        return Err(invalid("state and force must be finite"));
    }
    if !(excitation.g_eff.is_finite() && excitation.horizontal_accel.is_finite()) {
        return Err(invalid("excitation must be finite"));
    }
    Ok(accel(params, state.theta, state.omega, force, excitation))
}

/// Advances the plant by `dt` with the force held constant over the step
/// (classical RK4).
pub fn step(
    params: &PendulumParams,
    state: &PendulumState,
    force: f64,
    dt: f64,
) -> Result<PendulumState> {
    let ex = Excitation::still(params);
    step_excited(params, state, force, dt, |_| ex)
}

/// RK4 step with a time-varying base excitation evaluated at the stage times
/// `t`, `t + dt/2` and `t + dt`. The force is zero-order held.
pub fn step_excited<E>(
    params: &PendulumParams,
    state: &PendulumState,
    force: f64,
    dt: f64,
    excitation: E,
) -> Result<PendulumState>
where
    E: Fn(f64) -> Excitation,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    if dt > MAX_STEP {
        return Err(invalid(format!(
            "time step {dt} s exceeds the {MAX_STEP} s accuracy bound"
        )));
    }
    if !state.is_finite() || !force.is_finite() {
        return Err(invalid("state and force must be finite"));
    }

    let (th, om, t) = (state.theta, state.omega, state.t);
    let half = 0.5 * dt;
    let ex0 = excitation(t);
    let ex_mid = excitation(t + half);
    let ex1 = excitation(t + dt);

    let k1_th = om;
    let k1_om = accel(params, th, om, force, &ex0);
    let k2_th = om + half * k1_om;
    let k2_om = accel(params, th + half * k1_th, k2_th, force, &ex_mid);
    let k3_th = om + half * k2_om;
    let k3_om = accel(params, th + half * k2_th, k3_th, force, &ex_mid);
    let k4_th = om + dt * k3_om;
    let k4_om = accel(params, th + dt * k3_th, k4_th, force, &ex1);

    let next = PendulumState {
        theta: th + dt / 6.0 * (k1_th + 2.0 * k2_th + 2.0 * k3_th + k4_th),
        omega: om + dt / 6.0 * (k1_om + 2.0 * k2_om + 2.0 * k3_om + k4_om),
        t: t + dt,
    };
    if !next.is_finite() {
        return Err(numeric(format!("pendulum state became non-finite at t = {}", next.t)));
    }
    Ok(next)
}

/// Small-angle transfer function from actuation force to angle:
/// `l1 / ((m·l²/3)·s² + c·s ± m·g·l2)`.
pub fn linearize(params: &PendulumParams) -> Result<TransferFunction> {
    params.validate()?;
    TransferFunction::new(
        vec![params.l1],
        vec![
            params.inertia(),
            params.c_damp,
            params.gravity.sign() * params.gravity_torque(),
        ],
    )
}

/// Open-loop poles of the undamped plant: `±j·√(3g/(2l))` for restoring
/// gravity (with `l2 = l/2`), a real pair for toppling gravity.
///
/// A damped plant is rejected; use `linearize(params)?.poles()` instead.
pub fn natural_poles(params: &PendulumParams) -> Result<[Complex64; 2]> {
    params.validate()?;
    if params.c_damp != 0.0 {
        return Err(invalid(
            "natural_poles requires c_damp = 0; use linearize(..).poles() for a damped plant",
        ));
    }
    let w = (params.gravity_torque() / params.inertia()).sqrt();
    Ok(match params.gravity {
        GravityModel::Restoring => [Complex64::new(0.0, w), Complex64::new(0.0, -w)],
        GravityModel::Toppling => [Complex64::new(w, 0.0), Complex64::new(-w, 0.0)],
    })
}

/// Mechanical energy `(1/6)·m·l²·ω² ∓ m·g·l2·cos θ` on a still base.
pub fn energy(params: &PendulumParams, state: &PendulumState) -> f64 {
    0.5 * params.inertia() * state.omega * state.omega
        - params.gravity.sign() * params.gravity_torque() * state.theta.cos()
}
