//! The analog infrared audio path, emulated at the audio sample rate.
//!
//! ```text
//! source → preamp → LED bias → optical channel → band-pass → power amp
//! ```

mod analog;
mod channel;
mod filter;
mod metrics;
mod wav;

pub use analog::{
    am_modulate, led_drive_resistor, led_drive_transistor, power_amp, preamp, preamp_gain,
    AmplifierSpec, TransistorModel,
};
pub use channel::{
    beam_gain, channel_transmit, channel_transmit_tracked, combined_misalignment, ChannelSpec,
    NoiseSpec, Transconductance,
};
pub use filter::{
    bandpass_sections, design_bandpass, discretize, discretize_with, filter_apply, rc_design_rule,
    Biquad, DigitalFilter, FilterDesign, HighPassStage, Prewarp, RcStage,
};
pub use metrics::{rms, thd};
pub use wav::{read_wav, write_wav};

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// A uniformly sampled voltage waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        if samples.is_empty() {
            return Err(invalid("signal must contain at least one sample"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// `amplitude · sin(2π·freq·t)` for `n` samples.
    pub fn sine(freq: f64, amplitude: f64, sample_rate: f64, n: usize) -> Result<Self> {
        let w = 2.0 * PI * freq / sample_rate;
        Self::new(
            (0..n).map(|i| amplitude * (w * i as f64).sin()).collect(),
            sample_rate,
        )
    }

    pub fn zeros(n: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![0.0; n], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Samplewise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Signal> {
        Signal::new(self.samples.iter().map(|&x| f(x)).collect(), self.sample_rate)
    }

    /// Drops the first `n` samples.
    pub fn skip(&self, n: usize) -> Result<Signal> {
        Signal::new(self.samples[n.min(self.len())..].to_vec(), self.sample_rate)
    }
}
