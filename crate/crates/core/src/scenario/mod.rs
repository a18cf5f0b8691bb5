//! Whole-system experiments: base vibration drives the pendulum, the
//! pendulum points the beam, and the beam carries audio to the receiver.

mod classify;
mod coupling;

pub use classify::{
    classify_audio, classify_stability, AudioClass, AudioReport, AudioThresholds, StabilityClass,
    StabilityReport, StabilityThresholds,
};
pub use coupling::{base_coupling, Coupling, VibrationKind, VibrationProfile};

use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::actuator::{applied_force, force_to_duty, MotorParams};
use crate::controller::{control_step, ControlLaw, ControllerState, PdGains};
use crate::dynamics::{step_excited, PendulumParams, PendulumState, MAX_STEP};
use crate::error::{invalid, Result};
use crate::signal_chain::{
    channel_transmit_tracked, combined_misalignment, design_bandpass, discretize_with,
    filter_apply, led_drive_resistor, power_amp, preamp, read_wav, AmplifierSpec, ChannelSpec,
    FilterDesign, NoiseSpec, Prewarp, Signal,
};

/// Where the transmitted audio comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AudioSource {
    /// Sum of sines, `(frequency Hz, peak V)`.
    Tones(Vec<(f64, f64)>),
    /// Looped to fill the run; must be at the audio rate.
    Samples(Signal),
    /// WAV file read at `full_scale` volts; looped like `Samples`.
    Wav { path: PathBuf, full_scale: f64 },
}

impl Default for AudioSource {
    fn default() -> Self {
        AudioSource::Tones(vec![(330.0, 0.05), (1000.0, 0.04), (2400.0, 0.02)])
    }
}

impl AudioSource {
    /// `n` samples at `fs`.
    pub fn render(&self, fs: f64, n: usize) -> Result<Signal> {
        let looped = |s: &Signal| -> Result<Signal> {
            if (s.sample_rate() - fs).abs() > 1e-9 * fs {
                return Err(invalid(format!(
                    "audio source is at {} Hz but the audio rate is {fs} Hz",
                    s.sample_rate()
                )));
            }
            let src = s.samples();
            Signal::new((0..n).map(|i| src[i % src.len()]).collect(), fs)
        };
        match self {
            AudioSource::Tones(tones) => {
                if tones.is_empty() {
                    return Err(invalid("tone list is empty"));
                }
                if let Some((f, _)) = tones.iter().find(|(f, a)| !(*f > 0.0 && *f < fs / 2.0) || !a.is_finite()) {
                    return Err(invalid(format!("tone {f} Hz must lie in (0, fs/2)")));
                }
                Signal::new(
                    (0..n)
                        .map(|i| {
                            let t = i as f64 / fs;
                            tones.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum()
                        })
                        .collect(),
                    fs,
                )
            }
            AudioSource::Samples(s) => looped(s),
            AudioSource::Wav { path, full_scale } => looped(&read_wav(path, *full_scale)?),
        }
    }
}

/// One complete experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub pendulum: PendulumParams,
    /// Force-command gains of the running controller.
    pub gains: PdGains,
    pub controller_on: bool,
    pub control_law: ControlLaw,
    pub output_scale: f64,
    pub motor: MotorParams,
    pub vibration: VibrationProfile,
    pub channel: ChannelSpec,
    pub filter: FilterDesign,
    pub prewarp: Prewarp,
    pub preamp: AmplifierSpec,
    /// LED bias supply, V.
    pub led_supply: f64,
    pub amp_gain: f64,
    pub amp_clip: f64,
    /// rad.
    pub set_angle: f64,
    /// Angle at t = 0, rad. The rod starts at rest.
    pub initial_angle: f64,
    /// Hz.
    pub control_rate: f64,
    /// Hz.
    pub audio_rate: f64,
    /// s.
    pub duration: f64,
    pub seed: u64,
    pub audio_source: AudioSource,
    pub stability: StabilityThresholds,
    /// Frame-drop floor is taken from `channel.rx_floor`.
    pub audio: AudioThresholds,
}

impl Default for ScenarioConfig {
    /// The tuned reference system described by
    /// [`ExperimentConfig::default`](crate::config::ExperimentConfig).
    fn default() -> Self {
        crate::config::ExperimentConfig::default()
            .scenario()
            .expect("built-in defaults are valid")
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.pendulum.validate()?;
        self.motor.validate()?;
        self.vibration.validate()?;
        self.channel.validate()?;
        self.stability.validate()?;
        self.audio.validate()?;
        ControllerState::new(self.set_angle, 1.0 / self.control_rate)?
            .with_output_scale(self.output_scale)?;
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite")))
            }
        };
        finite("initial_angle", self.initial_angle)?;
        finite("kp", self.gains.kp)?;
        finite("kd", self.gains.kd)?;
        if self.initial_angle.abs() > PI {
            return Err(invalid("initial angle must lie in [-π, π]"));
        }
        if !(self.control_rate > 0.0 && 1.0 / self.control_rate <= MAX_STEP) {
            return Err(invalid(format!(
                "control rate must be at least {} Hz",
                1.0 / MAX_STEP
            )));
        }
        if !(self.audio_rate >= self.control_rate && self.audio_rate.is_finite()) {
            return Err(invalid("audio rate must be finite and at least the control rate"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid("duration must be positive"));
        }
        if !(self.led_supply.is_finite() && self.amp_gain > 0.0 && self.amp_clip > 0.0) {
            return Err(invalid("led supply must be finite, amp gain and clip positive"));
        }
        AmplifierSpec::new(self.preamp.r1, self.preamp.r2)?;
        Ok(())
    }

    /// Number of control ticks.
    pub fn ticks(&self) -> usize {
        (self.duration * self.control_rate).round() as usize
    }

    /// Number of audio samples.
    pub fn audio_samples(&self) -> usize {
        (self.duration * self.audio_rate).round() as usize
    }
}

/// Control-rate record of one run. `tx` and `rx` are the audio-rate
/// transmitted and received voltages sampled at each tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub duty: Vec<f64>,
    pub tx: Vec<f64>,
    pub rx: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `t_s,theta_rad,omega_rad_s,duty,tx_v,rx_v` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,theta_rad,omega_rad_s,duty,tx_v,rx_v\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.t[i], self.theta[i], self.omega[i], self.duty[i], self.tx[i], self.rx[i]
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub series: TimeSeries,
    /// Output of an ideal aligned, noiseless link; the comparison reference.
    pub reference: Signal,
    pub received: Signal,
    /// Set when |θ| exceeded π; the series stop at that tick.
    pub aborted: bool,
    pub stability: StabilityReport,
    pub audio: AudioReport,
}

struct Motion {
    series: TimeSeries,
    /// Total beam misalignment per tick.
    misalignment: Vec<f64>,
    aborted: bool,
}

fn simulate_motion(cfg: &ScenarioConfig) -> Result<Motion> {
    let dt = 1.0 / cfg.control_rate;
    let n = cfg.ticks();
    let p = &cfg.pendulum;
    let mut ctrl = ControllerState::new(cfg.set_angle, dt)?
        .with_output_scale(cfg.output_scale)?
        .with_law(cfg.control_law);
    let mut state = PendulumState::at_rest(cfg.initial_angle);
    let mut s = TimeSeries::default();
    let mut mis = Vec::with_capacity(n);
    let mut aborted = false;

    for k in 0..n {
        let t = k as f64 * dt;
        state.t = t;
        let duty = if cfg.controller_on {
            let (force, next) = control_step(&cfg.gains, &ctrl, state.theta)?;
            ctrl = next;
            force_to_duty(force, &cfg.motor)
        } else {
            0.0
        };
        let force = applied_force(duty, &cfg.motor)?;
        let here = base_coupling(&cfg.vibration, p.g, t);
        s.t.push(t);
        s.theta.push(state.theta);
        s.omega.push(state.omega);
        s.duty.push(duty);
        let in_plane = (state.theta - cfg.set_angle).clamp(-PI, PI);
        mis.push(combined_misalignment(in_plane, here.lateral_pointing));

        state = step_excited(p, &state, force, dt, |tau| {
            base_coupling(&cfg.vibration, p.g, tau).excitation()
        })?;
        if state.theta.abs() > PI {
            aborted = true;
            break;
        }
    }
    Ok(Motion {
        series: s,
        misalignment: mis,
        aborted,
    })
}

/// Index of the control tick holding audio sample `i`.
fn tick_of(i: usize, control_rate: f64, audio_rate: f64) -> usize {
    (i as f64 * control_rate / audio_rate + 1e-9).floor() as usize
}

fn audio_chain(
    cfg: &ScenarioConfig,
    source: &Signal,
    channel: &ChannelSpec,
    misalignment: &[f64],
) -> Result<(Signal, Signal)> {
    let drive = led_drive_resistor(&preamp(source, &cfg.preamp)?, cfg.led_supply)?;
    let rx = channel_transmit_tracked(&drive, channel, misalignment, cfg.seed)?;
    let filter = discretize_with(&design_bandpass(&cfg.filter)?, cfg.audio_rate, cfg.prewarp)?;
    let out = power_amp(&filter_apply(&filter, &rx)?, cfg.amp_gain, cfg.amp_clip)?;
    Ok((drive, out))
}

/// Runs one experiment end to end.
///
/// If the rod passes |θ| = π the run is aborted: the motion series stop
/// there, the beam counts as lost for the rest of the audio, and the
/// stability label is `large_oscillation`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let motion = simulate_motion(cfg)?;
    let n_audio = cfg.audio_samples();
    if n_audio == 0 {
        return Err(invalid("run is shorter than one audio sample"));
    }
    let source = cfg.audio_source.render(cfg.audio_rate, n_audio)?;
    let track: Vec<f64> = (0..n_audio)
        .map(|i| {
            let k = tick_of(i, cfg.control_rate, cfg.audio_rate);
            motion.misalignment.get(k).copied().unwrap_or(PI)
        })
        .collect();
    let (tx, received) = audio_chain(cfg, &source, &cfg.channel, &track)?;
    let ideal = ChannelSpec {
        noise: NoiseSpec::default(),
        ..cfg.channel.clone()
    };
    let (_, reference) = audio_chain(cfg, &source, &ideal, &vec![0.0; n_audio])?;

    let mut series = motion.series;
    let stride = cfg.audio_rate / cfg.control_rate;
    for k in 0..series.len() {
        let i = ((k as f64 * stride).round() as usize).min(n_audio - 1);
        series.tx.push(tx.samples()[i]);
        series.rx.push(received.samples()[i]);
    }

    let stability = classify_stability(
        &series.theta,
        1.0 / cfg.control_rate,
        cfg.set_angle,
        &cfg.stability,
        motion.aborted,
    )?;
    let thresholds = AudioThresholds {
        rx_floor: cfg.channel.rx_floor,
        ..cfg.audio
    };
    let audio = classify_audio(&reference, &received, &thresholds)?;
    Ok(ScenarioResult {
        series,
        reference,
        received,
        aborted: motion.aborted,
        stability,
        audio,
    })
}

/// Maps `f` over `0..n` on at most `jobs` threads; results keep index order.
pub fn par_indexed<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Table-style sweep over set angles. Run `i` uses seed `base.seed + i`.
pub fn stability_sweep(
    base: &ScenarioConfig,
    set_angles: &[f64],
    jobs: usize,
) -> Result<Vec<StabilityReport>> {
    base.validate()?;
    par_indexed(set_angles.len(), jobs, |i| {
        let cfg = ScenarioConfig {
            set_angle: set_angles[i],
            seed: base.seed.wrapping_add(i as u64),
            ..base.clone()
        };
        Ok(run_scenario(&cfg)?.stability)
    })
}

/// One row of the link test: the same vibration with and without control.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTestRow {
    pub vibration: VibrationProfile,
    pub on: AudioReport,
    pub off: AudioReport,
}

/// Runs every profile with the controller on and off. Row `i` uses seed
/// `base.seed + i` for both runs so the pair sees the same receiver noise.
pub fn link_test(
    base: &ScenarioConfig,
    profiles: &[VibrationProfile],
    jobs: usize,
) -> Result<Vec<LinkTestRow>> {
    base.validate()?;
    let reports = par_indexed(2 * profiles.len(), jobs, |j| {
        let (row, on) = (j / 2, j % 2 == 0);
        let cfg = ScenarioConfig {
            vibration: profiles[row],
            controller_on: on,
            seed: base.seed.wrapping_add(row as u64),
            ..base.clone()
        };
        Ok(run_scenario(&cfg)?.audio)
    })?;
    Ok(profiles
        .iter()
        .zip(reports.chunks(2))
        .map(|(p, pair)| LinkTestRow {
            vibration: *p,
            on: pair[0],
            off: pair[1],
        })
        .collect())
}

/// Expected labels for the four link-test rows (none, vertical,
/// longitudinal, lateral) as `(on, off)`.
pub const LINK_TEST_EXPECTED: [(AudioClass, AudioClass); 4] = [
    (AudioClass::Complete, AudioClass::Complete),
    (AudioClass::Complete, AudioClass::Intermittent),
    (AudioClass::CompleteWithNoise, AudioClass::Vanish),
    (AudioClass::Intermittent, AudioClass::Vanish),
];

/// Set angles of the pendulum function test, degrees.
pub const SWEEP_SET_ANGLES_DEG: [f64; 7] = [-20.0, -15.0, -10.0, 0.0, 10.0, 15.0, 20.0];

/// Expected labels for [`SWEEP_SET_ANGLES_DEG`].
pub const SWEEP_EXPECTED: [StabilityClass; 7] = [
    StabilityClass::LargeOscillation,
    StabilityClass::SmallOscillation,
    StabilityClass::Stable,
    StabilityClass::Stable,
    StabilityClass::Stable,
    StabilityClass::SmallOscillation,
    StabilityClass::LargeOscillation,
];
