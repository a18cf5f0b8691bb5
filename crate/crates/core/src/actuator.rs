//! Averaged PWM / H-bridge drive.
//!
//! The bridge output is `V_ref · duty` with the sign of the duty selecting
//! the bridge diagonal. PWM ripple is not modelled.

use crate::error::{ensure_finite, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    /// Bridge supply voltage, V.
    pub v_ref: f64,
    /// Force produced per volt across the motor, N/V.
    pub force_per_volt: f64,
    /// Duty magnitude cap.
    pub max_duty: f64,
    /// Duty magnitudes below this produce no force.
    pub deadband: f64,
}

impl MotorParams {
    pub fn new(v_ref: f64, force_per_volt: f64) -> Result<Self> {
        let p = Self {
            v_ref,
            force_per_volt,
            max_duty: 1.0,
            deadband: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("v_ref", self.v_ref)?;
        ensure_finite("force_per_volt", self.force_per_volt)?;
        if self.v_ref <= 0.0 {
            return Err(invalid("v_ref must be positive"));
        }
        if self.force_per_volt <= 0.0 {
            return Err(invalid("force_per_volt must be positive"));
        }
        if !(self.max_duty > 0.0 && self.max_duty <= 1.0) {
            return Err(invalid("max_duty must lie in (0, 1]"));
        }
        if !(self.deadband >= 0.0 && self.deadband < self.max_duty) {
            return Err(invalid("deadband must lie in [0, max_duty)"));
        }
        Ok(())
    }

    /// Largest force magnitude the bridge can deliver.
    pub fn max_force(&self) -> f64 {
        self.v_ref * self.force_per_volt * self.max_duty
    }
}

/// `V_out = V_ref · duty`.
pub fn duty_to_voltage(duty: f64, v_ref: f64) -> Result<f64> {
    if !duty.is_finite() || duty.abs() > 1.0 {
        return Err(invalid(format!("duty {duty} outside [-1, 1]")));
    }
    Ok(v_ref * duty)
}

/// Duty command for a requested force, clamped to `±max_duty`.
pub fn force_to_duty(force: f64, mp: &MotorParams) -> f64 {
    let duty = force / (mp.force_per_volt * mp.v_ref);
    duty.clamp(-mp.max_duty, mp.max_duty)
}

/// Force actually delivered for a duty command; zero inside the deadband.
pub fn applied_force(duty: f64, mp: &MotorParams) -> Result<f64> {
    if duty.abs() < mp.deadband {
        return Ok(0.0);
    }
    Ok(duty_to_voltage(duty, mp.v_ref)? * mp.force_per_volt)
}
