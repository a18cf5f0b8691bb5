//! Flat `section.key = value` experiment description.
//!
//! Values are stored in the units named by their keys (degrees, ohms,
//! farads, ...) so that a rendered snapshot parses back bit for bit.
//! [`ExperimentConfig::scenario`] converts to the SI values used by the
//! simulator.

use std::path::PathBuf;

use crate::actuator::MotorParams;
use crate::controller::{ControlLaw, PdGains};
use crate::dynamics::{GravityModel, PendulumParams};
use crate::error::{Error, Result};
use crate::scenario::{
    AudioSource, AudioThresholds, ScenarioConfig, StabilityThresholds, VibrationKind,
    VibrationProfile,
};
use crate::signal_chain::{
    AmplifierSpec, ChannelSpec, FilterDesign, HighPassStage, NoiseSpec, Prewarp, RcStage,
    Transconductance,
};

/// A value that can appear on the right of `=`.
pub trait ConfigValue: Sized {
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let v: f64 = s.parse().map_err(|_| format!("expected a number, got `{s}`"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("expected a finite number, got `{s}`"))
        }
    }
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl ConfigValue for u64 {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|_| format!("expected an unsigned integer, got `{s}`"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for usize {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|_| format!("expected an unsigned integer, got `{s}`"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for bool {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        match s {
            "true" | "on" => Ok(true),
            "false" | "off" => Ok(false),
            _ => Err(format!("expected true or false, got `{s}`")),
        }
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for String {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        Ok(s.to_string())
    }
    fn render(&self) -> String {
        self.clone()
    }
}

impl ConfigValue for Vec<f64> {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|p| f64::parse_value(p.trim())).collect()
    }
    fn render(&self) -> String {
        self.iter().map(f64::render).collect::<Vec<_>>().join(",")
    }
}

macro_rules! keyword_value {
    ($ty:ty { $($word:literal => $variant:expr),* $(,)? }) => {
        impl ConfigValue for $ty {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($word => Ok($variant),)*
                    _ => Err(format!(
                        "expected one of {}, got `{s}`",
                        [$($word),*].join(", ")
                    )),
                }
            }
            fn render(&self) -> String {
                $(if *self == $variant { return $word.to_string(); })*
                unreachable!()
            }
        }
    };
}

keyword_value!(GravityModel { "restoring" => GravityModel::Restoring, "toppling" => GravityModel::Toppling });
keyword_value!(ControlLaw { "tracking" => ControlLaw::Tracking, "literal" => ControlLaw::Literal });
keyword_value!(Prewarp {
    "none" => Prewarp::None,
    "corner" => Prewarp::SectionCorner,
    "minimax" => Prewarp::SectionMinimax,
});
keyword_value!(VibrationKind {
    "none" => VibrationKind::None,
    "vertical" => VibrationKind::Vertical,
    "longitudinal" => VibrationKind::Longitudinal,
    "lateral" => VibrationKind::Lateral,
});

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AudioSourceKind {
    Tones,
    Wav,
}

keyword_value!(AudioSourceKind { "tones" => AudioSourceKind::Tones, "wav" => AudioSourceKind::Wav });

macro_rules! experiment_config {
    ($( $key:literal => $field:ident : $ty:ty = $default:expr; )*) => {
        /// Every tunable of every command. Field docs are the config keys.
        #[derive(Debug, Clone, PartialEq)]
        pub struct ExperimentConfig {
            $( #[doc = $key] pub $field: $ty, )*
        }

        impl Default for ExperimentConfig {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        impl ExperimentConfig {
            /// All keys in canonical order.
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            fn set_raw(&mut self, key: &str, value: &str) -> std::result::Result<(), SetError> {
                match key {
                    $( $key => self.$field = <$ty as ConfigValue>::parse_value(value).map_err(SetError::Value)?, )*
                    _ => return Err(SetError::UnknownKey),
                }
                Ok(())
            }

            /// `(key, rendered value)` in canonical order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![ $( ($key, ConfigValue::render(&self.$field)), )* ]
            }
        }
    };
}

fn list(v: &[f64]) -> Vec<f64> {
    v.to_vec()
}

experiment_config! {
    "pendulum.m_kg" => m_kg: f64 = 0.2;
    "pendulum.l_m" => l_m: f64 = 0.3;
    "pendulum.l1_m" => l1_m: f64 = 0.3;
    "pendulum.l2_m" => l2_m: f64 = 0.15;
    "pendulum.g_mps2" => g_mps2: f64 = 9.8;
    "pendulum.damping_nms" => damping_nms: f64 = 0.0;
    "pendulum.gravity" => gravity: GravityModel = GravityModel::Restoring;

    "controller.enabled" => controller_on: bool = true;
    "controller.kp" => kp: f64 = 120.0;
    "controller.kd" => kd: f64 = 7.0;
    "controller.output_scale" => output_scale: f64 = 10.0;
    "controller.law" => law: ControlLaw = ControlLaw::Tracking;
    "controller.set_angle_deg" => set_angle_deg: f64 = 0.0;
    "controller.rate_hz" => control_rate_hz: f64 = 1000.0;

    "motor.v_ref_v" => v_ref_v: f64 = 7.4;
    "motor.force_per_volt_npv" => force_per_volt: f64 = 0.0275;
    "motor.max_duty" => max_duty: f64 = 1.0;
    "motor.deadband" => deadband: f64 = 0.0;

    "vibration.kind" => vibration_kind: VibrationKind = VibrationKind::None;
    "vibration.vertical_amp_mps2" => vertical_amp: f64 = 2.0;
    "vibration.vertical_freq_hz" => vertical_freq: f64 = 2.23;
    "vibration.longitudinal_amp_mps2" => longitudinal_amp: f64 = 1.8;
    "vibration.longitudinal_freq_hz" => longitudinal_freq: f64 = 0.5;
    "vibration.lateral_amp_mps2" => lateral_amp: f64 = 0.3;
    "vibration.lateral_freq_hz" => lateral_freq: f64 = 2.0;

    "channel.transconductance" => transconductance: f64 = 0.8;
    "channel.lambert_order" => lambert_order: f64 = 4000.0;
    "channel.noise_broadband_v" => noise_broadband_v: f64 = 0.02;
    "channel.noise_low_band_v" => noise_low_band_v: f64 = 0.0;
    "channel.noise_high_band_v" => noise_high_band_v: f64 = 0.0;
    "channel.rx_floor_v" => rx_floor_v: f64 = 0.3;

    "preamp.r1_ohm" => preamp_r1: f64 = 9e3;
    "preamp.r2_ohm" => preamp_r2: f64 = 1e3;
    "led.supply_v" => led_supply_v: f64 = 2.0;

    "filter.lp1_r_ohm" => lp1_r: f64 = 6.8e3;
    "filter.lp1_c_f" => lp1_c: f64 = 5e-9;
    "filter.lp2_r_ohm" => lp2_r: f64 = 3.6e3;
    "filter.lp2_c_f" => lp2_c: f64 = 15e-9;
    "filter.hp_c3_f" => hp_c3: f64 = 1e-6;
    "filter.hp_r3_ohm" => hp_r3: f64 = 5e3;
    "filter.hp_c4_f" => hp_c4: f64 = 1e-6;
    "filter.hp_r4_ohm" => hp_r4: f64 = 10e3;
    "filter.hp_c5_f" => hp_c5: f64 = 1e-6;
    "filter.hp_r5_ohm" => hp_r5: f64 = 10.4e3;
    "filter.prewarp" => prewarp: Prewarp = Prewarp::SectionMinimax;

    "amp.gain" => amp_gain: f64 = 4.0;
    "amp.clip_v" => amp_clip_v: f64 = 9.0;

    "audio.rate_hz" => audio_rate_hz: f64 = 48e3;
    "audio.source" => audio_source: AudioSourceKind = AudioSourceKind::Tones;
    "audio.tones_hz" => tones_hz: Vec<f64> = list(&[330.0, 1000.0, 2400.0]);
    "audio.tone_amps_v" => tone_amps_v: Vec<f64> = list(&[0.05, 0.04, 0.02]);
    "audio.wav_path" => wav_path: String = String::new();
    "audio.wav_full_scale_v" => wav_full_scale_v: f64 = 1.0;

    "sim.duration_s" => duration_s: f64 = 10.0;
    "sim.initial_angle_deg" => initial_angle_deg: f64 = 0.3;
    "sim.seed" => seed: u64 = 0;

    "classify.window_fraction" => window_fraction: f64 = 0.2;
    "classify.min_window_s" => min_window_s: f64 = 2.0;
    "classify.stable_ptp_deg" => stable_ptp_deg: f64 = 1.0;
    "classify.small_ptp_deg" => small_ptp_deg: f64 = 8.0;
    "classify.frame_s" => frame_s: f64 = 0.02;
    "classify.min_correlation" => min_correlation: f64 = 0.5;
    "classify.complete_max_dropout" => complete_max_dropout: f64 = 0.02;
    "classify.vanish_min_dropout" => vanish_min_dropout: f64 = 0.6;
    "classify.noisy_snr_db" => noisy_snr_db: f64 = 20.0;
    "classify.max_lag_s" => max_lag_s: f64 = 0.05;

    "sweep.set_angles_deg" => sweep_angles_deg: Vec<f64> = list(&[-20.0, -15.0, -10.0, 0.0, 10.0, 15.0, 20.0]);
    "sweep.initial_angle_deg" => sweep_initial_angle_deg: f64 = 0.0;

    "map.kp_min" => map_kp_min: f64 = -5.0;
    "map.kp_max" => map_kp_max: f64 = 50.0;
    "map.kd_min" => map_kd_min: f64 = -5.0;
    "map.kd_max" => map_kd_max: f64 = 20.0;
    "map.grid_n" => map_grid_n: usize = 200;

    "response.f_min_hz" => response_f_min: f64 = 1.0;
    "response.f_max_hz" => response_f_max: f64 = 20e3;
    "response.points" => response_points: usize = 400;
    "response.delay_freq_hz" => delay_freq: f64 = 1e3;
}

enum SetError {
    UnknownKey,
    Value(String),
}

fn config_error(line: Option<usize>, msg: String) -> Error {
    match line {
        Some(n) => Error::InvalidInput(format!("line {n}: {msg}")),
        None => Error::InvalidInput(msg),
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` assignment. `line` only labels errors.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<()> {
        self.set_raw(key, value).map_err(|e| match e {
            SetError::UnknownKey => config_error(line, format!("unknown key `{key}`")),
            SetError::Value(m) => config_error(line, format!("{key}: {m}")),
        })
    }

    /// Applies the assignments in `text` on top of `self`. `#` starts a
    /// comment; a key may appear once per text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_error(Some(n), format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(config_error(Some(n), format!("duplicate key `{key}`")));
            }
            self.set(key, value.trim(), Some(n))?;
        }
        Ok(())
    }

    /// Defaults overlaid with `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Applies a `KEY=VALUE` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| config_error(None, format!("override `{assignment}` is not KEY=VALUE")))?;
        self.set(k.trim(), v.trim(), None)
    }

    /// One `key = value` line per key, canonical order.
    pub fn render(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn pendulum(&self) -> Result<PendulumParams> {
        let p = PendulumParams {
            m: self.m_kg,
            l: self.l_m,
            l1: self.l1_m,
            l2: self.l2_m,
            g: self.g_mps2,
            c_damp: self.damping_nms,
            gravity: self.gravity,
        };
        p.validate()?;
        Ok(p)
    }

    /// Profile for a vibration kind using this config's amplitudes.
    pub fn profile(&self, kind: VibrationKind) -> Result<VibrationProfile> {
        match kind {
            VibrationKind::None => Ok(VibrationProfile::none()),
            VibrationKind::Vertical => VibrationProfile::new(kind, self.vertical_amp, self.vertical_freq),
            VibrationKind::Longitudinal => {
                VibrationProfile::new(kind, self.longitudinal_amp, self.longitudinal_freq)
            }
            VibrationKind::Lateral => VibrationProfile::new(kind, self.lateral_amp, self.lateral_freq),
        }
    }

    pub fn filter(&self) -> FilterDesign {
        FilterDesign {
            lp_stage1: RcStage { r: self.lp1_r, c: self.lp1_c },
            lp_stage2: RcStage { r: self.lp2_r, c: self.lp2_c },
            hp: HighPassStage {
                c3: self.hp_c3,
                r3: self.hp_r3,
                c4: self.hp_c4,
                r4: self.hp_r4,
                c5: self.hp_c5,
                r5: self.hp_r5,
            },
        }
    }

    fn audio_source(&self) -> Result<AudioSource> {
        match self.audio_source {
            AudioSourceKind::Tones => {
                if self.tones_hz.len() != self.tone_amps_v.len() {
                    return Err(config_error(
                        None,
                        "audio.tones_hz and audio.tone_amps_v differ in length".into(),
                    ));
                }
                Ok(AudioSource::Tones(
                    self.tones_hz.iter().copied().zip(self.tone_amps_v.iter().copied()).collect(),
                ))
            }
            AudioSourceKind::Wav => {
                if self.wav_path.is_empty() {
                    return Err(config_error(None, "audio.source = wav needs audio.wav_path".into()));
                }
                Ok(AudioSource::Wav {
                    path: PathBuf::from(&self.wav_path),
                    full_scale: self.wav_full_scale_v,
                })
            }
        }
    }

    /// The single experiment described by this config.
    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let cfg = ScenarioConfig {
            pendulum: self.pendulum()?,
            gains: PdGains::new(self.kp, self.kd)?,
            controller_on: self.controller_on,
            control_law: self.law,
            output_scale: self.output_scale,
            motor: MotorParams {
                v_ref: self.v_ref_v,
                force_per_volt: self.force_per_volt,
                max_duty: self.max_duty,
                deadband: self.deadband,
            },
            vibration: self.profile(self.vibration_kind)?,
            channel: ChannelSpec {
                transconductance: Transconductance::Constant(self.transconductance),
                lambert_order: self.lambert_order,
                noise: NoiseSpec {
                    broadband: self.noise_broadband_v,
                    low_band: self.noise_low_band_v,
                    high_band: self.noise_high_band_v,
                },
                rx_floor: self.rx_floor_v,
            },
            filter: self.filter(),
            prewarp: self.prewarp,
            preamp: AmplifierSpec::new(self.preamp_r1, self.preamp_r2)?,
            led_supply: self.led_supply_v,
            amp_gain: self.amp_gain,
            amp_clip: self.amp_clip_v,
            set_angle: self.set_angle_deg.to_radians(),
            initial_angle: self.initial_angle_deg.to_radians(),
            control_rate: self.control_rate_hz,
            audio_rate: self.audio_rate_hz,
            duration: self.duration_s,
            seed: self.seed,
            audio_source: self.audio_source()?,
            stability: StabilityThresholds {
                window_fraction: self.window_fraction,
                min_window: self.min_window_s,
                stable_ptp: self.stable_ptp_deg.to_radians(),
                small_ptp: self.small_ptp_deg.to_radians(),
            },
            audio: AudioThresholds {
                frame: self.frame_s,
                rx_floor: self.rx_floor_v,
                min_correlation: self.min_correlation,
                complete_max_dropout: self.complete_max_dropout,
                vanish_min_dropout: self.vanish_min_dropout,
                noisy_snr_db: self.noisy_snr_db,
                max_lag: self.max_lag_s,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Base scenario for the set-angle sweep.
    pub fn sweep_scenario(&self) -> Result<ScenarioConfig> {
        let mut s = self.scenario()?;
        s.initial_angle = self.sweep_initial_angle_deg.to_radians();
        s.validate()?;
        Ok(s)
    }

    pub fn sweep_angles(&self) -> Result<Vec<f64>> {
        if self.sweep_angles_deg.is_empty() {
            return Err(config_error(None, "sweep.set_angles_deg is empty".into()));
        }
        Ok(self.sweep_angles_deg.iter().map(|d| d.to_radians()).collect())
    }

    /// The four link-test profiles in row order.
    pub fn link_profiles(&self) -> Result<Vec<VibrationProfile>> {
        VibrationKind::ALL.iter().map(|&k| self.profile(k)).collect()
    }

    /// Checks everything every command needs.
    pub fn validate(&self) -> Result<()> {
        self.sweep_scenario()?;
        self.sweep_angles()?;
        self.link_profiles()?;
        let bad = |m: &str| Err(config_error(None, m.into()));
        if !(self.map_kp_min < self.map_kp_max && self.map_kd_min < self.map_kd_max) {
            return bad("map ranges must be non-empty");
        }
        if self.map_grid_n < 2 {
            return bad("map.grid_n must be at least 2");
        }
        if !(self.response_f_min > 0.0 && self.response_f_min < self.response_f_max) {
            return bad("response needs 0 < f_min_hz < f_max_hz");
        }
        if self.response_points < 2 {
            return bad("response.points must be at least 2");
        }
        if !(self.delay_freq > 0.0) {
            return bad("response.delay_freq_hz must be positive");
        }
        Ok(())
    }
}
