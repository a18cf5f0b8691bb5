//! Base vibration and how it reaches the pendulum and the beam.

use std::f64::consts::PI;

use crate::dynamics::Excitation;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum VibrationKind {
    #[default]
    None,
    /// Up-down base motion; modulates effective gravity.
    Vertical,
    /// Front-back motion in the plane of swing.
    Longitudinal,
    /// Left-right motion out of the plane of swing.
    Lateral,
}

impl VibrationKind {
    pub const ALL: [VibrationKind; 4] = [
        VibrationKind::None,
        VibrationKind::Vertical,
        VibrationKind::Longitudinal,
        VibrationKind::Lateral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VibrationKind::None => "none",
            VibrationKind::Vertical => "vertical",
            VibrationKind::Longitudinal => "longitudinal",
            VibrationKind::Lateral => "lateral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Sinusoidal base acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VibrationProfile {
    pub kind: VibrationKind,
    /// Peak acceleration, m/s².
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
}

impl VibrationProfile {
    pub fn none() -> Self {
        Self {
            kind: VibrationKind::None,
            amplitude: 0.0,
            frequency: 1.0,
        }
    }

    pub fn new(kind: VibrationKind, amplitude: f64, frequency: f64) -> Result<Self> {
        let p = Self {
            kind,
            amplitude,
            frequency,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("vibration amplitude must be non-negative"));
        }
        if self.kind != VibrationKind::None && !(self.frequency > 0.0 && self.frequency.is_finite())
        {
            return Err(invalid("vibration frequency must be positive"));
        }
        Ok(())
    }
}

/// Disturbances at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub g_eff: f64,
    pub horizontal_accel: f64,
    /// Out-of-plane beam pointing error, rad.
    pub lateral_pointing: f64,
}

impl Coupling {
    pub fn excitation(&self) -> Excitation {
        Excitation {
            g_eff: self.g_eff,
            horizontal_accel: self.horizontal_accel,
        }
    }
}

/// Disturbances produced by `profile` at time `t` for nominal gravity `g`.
///
/// Lateral motion tilts the apparent vertical out of the swing plane by
/// `atan(a(t)/g)`; the beam follows that tilt and the pendulum cannot
/// correct it.
pub fn base_coupling(profile: &VibrationProfile, g: f64, t: f64) -> Coupling {
    let a = profile.amplitude * (2.0 * PI * profile.frequency * t).sin();
    let mut c = Coupling {
        g_eff: g,
        horizontal_accel: 0.0,
        lateral_pointing: 0.0,
    };
    match profile.kind {
        VibrationKind::None => {}
        VibrationKind::Vertical => c.g_eff = g + a,
        VibrationKind::Longitudinal => c.horizontal_accel = a,
        VibrationKind::Lateral => c.lateral_pointing = (a / g).atan(),
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 9.8;

    #[test]
    fn none_is_still() {
        let p = VibrationProfile::none();
        for t in [0.0, 0.3, 17.1] {
            let c = base_coupling(&p, G, t);
            assert_eq!((c.g_eff, c.horizontal_accel, c.lateral_pointing), (G, 0.0, 0.0));
        }
    }

    #[test]
    fn vertical_peaks_at_quarter_period() {
        let p = VibrationProfile::new(VibrationKind::Vertical, 1.5, 2.0).unwrap();
        let c = base_coupling(&p, G, 0.125);
        assert!((c.g_eff - (G + 1.5)).abs() < 1e-12);
        assert_eq!(c.horizontal_accel, 0.0);
    }

    #[test]
    fn lateral_has_no_in_plane_torque() {
        let p = VibrationProfile::new(VibrationKind::Lateral, 2.0, 3.0).unwrap();
        for i in 0..100 {
            let c = base_coupling(&p, G, i as f64 * 0.013);
            assert_eq!(c.g_eff, G);
            assert_eq!(c.horizontal_accel, 0.0);
        }
        let peak = base_coupling(&p, G, 1.0 / 12.0).lateral_pointing;
        assert!((peak - (2.0 / G).atan()).abs() < 1e-12);
    }

    #[test]
    fn longitudinal_is_periodic() {
        let p = VibrationProfile::new(VibrationKind::Longitudinal, 3.0, 1.25).unwrap();
        let a = base_coupling(&p, G, 0.31).horizontal_accel;
        let b = base_coupling(&p, G, 0.31 + 0.8).horizontal_accel;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn profile_validation() {
        assert!(VibrationProfile::new(VibrationKind::Vertical, -1.0, 1.0).is_err());
        assert!(VibrationProfile::new(VibrationKind::Vertical, 1.0, 0.0).is_err());
        assert!(VibrationProfile::new(VibrationKind::None, 0.0, 0.0).is_ok());
        assert_eq!(VibrationKind::parse("lateral"), Some(VibrationKind::Lateral));
        assert_eq!(VibrationKind::parse("sideways"), None);
    }
}
