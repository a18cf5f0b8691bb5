//! Optical channel: coupling-tube transconductance, beam pointing loss and
//! additive receiver noise.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

use super::filter::{Biquad, Prewarp};
use super::Signal;

/// Corner of the slow drift noise, Hz.
const LOW_BAND_CORNER_HZ: f64 = 2.0;
/// Corner of the high-frequency noise, Hz.
const HIGH_BAND_CORNER_HZ: f64 = 10e3;

/// Forward transconductance of the emitter/receiver pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Transconductance {
    Constant(f64),
    /// One gain value per drive sample.
    Sampled(Vec<f64>),
}

/// Receiver noise, RMS volts per band.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    /// White noise across the whole spectrum.
    pub broadband: f64,
    /// Slow drift concentrated below 10 Hz.
    pub low_band: f64,
    /// Hiss above 10 kHz.
    pub high_band: f64,
}

impl NoiseSpec {
    pub fn total_rms(&self) -> f64 {
        (self.broadband.powi(2) + self.low_band.powi(2) + self.high_band.powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub transconductance: Transconductance,
    /// Exponent of the `cos^m` beam profile.
    pub lambert_order: f64,
    pub noise: NoiseSpec,
    /// Smallest usable received RMS, V.
    pub rx_floor: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            transconductance: Transconductance::Constant(0.8),
            lambert_order: 1.0,
            noise: NoiseSpec::default(),
            rx_floor: 0.0,
        }
    }
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.transconductance {
            Transconductance::Constant(a) if !a.is_finite() => {
                return Err(invalid("transconductance must be finite"))
            }
            Transconductance::Sampled(v) if v.iter().any(|a| !a.is_finite()) => {
                return Err(invalid("transconductance samples must be finite"))
            }
            _ => {}
        }
        if !(self.lambert_order >= 0.0 && self.lambert_order.is_finite()) {
            return Err(invalid("lambert_order must be non-negative"));
        }
        let n = self.noise;
        for v in [n.broadband, n.low_band, n.high_band, self.rx_floor] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid("noise RMS values and rx_floor must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Relative intensity received at angle `misalignment` off the beam axis:
/// `cos^m`, and nothing past the beam edge at ±90°.
pub fn beam_gain(misalignment: f64, lambert_order: f64) -> f64 {
    if misalignment.abs() >= FRAC_PI_2 {
        0.0
    } else {
        misalignment.cos().powf(lambert_order)
    }
}

/// Angle between the beam axis and the receiver direction for an in-plane
/// error `a` and an orthogonal out-of-plane error `b`.
pub fn combined_misalignment(in_plane: f64, out_of_plane: f64) -> f64 {
    (in_plane.cos() * out_of_plane.cos()).clamp(-1.0, 1.0).acos()
}

/// Transmits with a fixed pointing error.
pub fn channel_transmit(
    drive: &Signal,
    spec: &ChannelSpec,
    misalignment: f64,
    seed: u64,
) -> Result<Signal> {
    let angles = vec![misalignment; drive.len()];
    channel_transmit_tracked(drive, spec, &angles, seed)
}

/// Transmits with a per-sample pointing error:
/// `rx[n] = drive[n] · A[n] · cos^m(misalignment[n]) + noise[n]`.
///
/// Noise is deterministic in `seed`; each band draws from its own ChaCha
/// stream.
pub fn channel_transmit_tracked(
    drive: &Signal,
    spec: &ChannelSpec,
    misalignment: &[f64],
    seed: u64,
) -> Result<Signal> {
    spec.validate()?;
    let n = drive.len();
    if misalignment.len() != n {
        return Err(invalid("misalignment track length must match the drive"));
    }
    if let Some(a) = misalignment.iter().find(|a| !(a.abs() <= PI)) {
        return Err(invalid(format!("misalignment {a} rad outside [-π, π]")));
    }
    let gain_at = |i: usize| -> f64 {
        match &spec.transconductance {
            Transconductance::Constant(a) => *a,
            Transconductance::Sampled(v) => v[i],
        }
    };
    if let Transconductance::Sampled(v) = &spec.transconductance {
        if v.len() != n {
            return Err(invalid("sampled transconductance length must match the drive"));
        }
    }

    let noise = synthesize_noise(&spec.noise, n, drive.sample_rate(), seed)?;
    let out = drive
        .samples()
        .iter()
        .zip(misalignment)
        .zip(noise)
        .enumerate()
        .map(|(i, ((&x, &ang), w))| x * gain_at(i) * beam_gain(ang, spec.lambert_order) + w)
        .collect();
    Signal::new(out, drive.sample_rate())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn band_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sum of the three noise bands, each scaled to its stationary RMS.
fn synthesize_noise(spec: &NoiseSpec, n: usize, fs: f64, seed: u64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];

    if spec.broadband > 0.0 {
        let mut rng = band_rng(seed, 0);
        for v in out.iter_mut() {
            *v += spec.broadband * normal(&mut rng);
        }
    }

    if spec.low_band > 0.0 {
        // First-order leaky random walk, started from its stationary law.
        let mut rng = band_rng(seed, 1);
        let a = (-2.0 * PI * LOW_BAND_CORNER_HZ / fs).exp();
        let drive = spec.low_band * (1.0 - a * a).sqrt();
        let mut x = spec.low_band * normal(&mut rng);
        for v in out.iter_mut() {
            *v += x;
            x = a * x + drive * normal(&mut rng);
        }
    }

    if spec.high_band > 0.0 {
        if fs <= 2.0 * HIGH_BAND_CORNER_HZ {
            return Err(invalid(format!(
                "high-band noise needs a sample rate above {} Hz",
                2.0 * HIGH_BAND_CORNER_HZ
            )));
        }
        let mut rng = band_rng(seed, 2);
        let mut hp = Biquad::butterworth_highpass(HIGH_BAND_CORNER_HZ, fs, Prewarp::SectionCorner);
        let scale = spec.high_band / hp.white_noise_gain();
        for v in out.iter_mut() {
            *v += scale * hp.process(normal(&mut rng));
        }
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_chain::{rms, thd};

    fn quiet() -> ChannelSpec {
        ChannelSpec::default()
    }

    #[test]
    fn constant_gain_is_pure_scaling() {
        let s = Signal::sine(1e3, 1.0, 48e3, 4800).unwrap();
        let out = channel_transmit(&s, &quiet(), 0.0, 1).unwrap();
        for (o, i) in out.samples().iter().zip(s.samples()) {
            assert!((o - 0.8 * i).abs() < 1e-15);
        }
        assert!(thd(&out, 1e3).unwrap() < 1e-10);
    }

    #[test]
    fn beam_edge_and_lambert() {
        assert!((beam_gain(PI / 3.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(beam_gain(FRAC_PI_2, 1.0), 0.0);
        assert_eq!(beam_gain(-2.0, 3.0), 0.0);

        let s = Signal::sine(1e3, 1.0, 48e3, 480).unwrap();
        let mut spec = quiet();
        spec.noise.broadband = 0.01;
        let out = channel_transmit(&s, &spec, FRAC_PI_2, 3).unwrap();
        let noise_only = channel_transmit(&Signal::zeros(480, 48e3).unwrap(), &spec, 0.0, 3).unwrap();
        assert_eq!(out, noise_only);
    }

    #[test]
    fn combined_angle() {
        assert!((combined_misalignment(0.3, 0.0) - 0.3).abs() < 1e-12);
        assert!((combined_misalignment(0.0, -0.2) - 0.2).abs() < 1e-12);
        let c = combined_misalignment(0.1, 0.1);
        assert!(c > 0.1 && c < 0.2);
    }

    #[test]
    fn misalignment_out_of_range_rejected() {
        let s = Signal::zeros(4, 48e3).unwrap();
        assert!(channel_transmit(&s, &quiet(), 4.0, 0).is_err());
    }

    #[test]
    fn sampled_transconductance() {
        let s = Signal::new(vec![1.0; 4], 1e3).unwrap();
        let mut spec = quiet();
        spec.transconductance = Transconductance::Sampled(vec![0.1, 0.2, 0.3, 0.4]);
        let out = channel_transmit(&s, &spec, 0.0, 0).unwrap();
        assert_eq!(out.samples(), &[0.1, 0.2, 0.3, 0.4]);
        spec.transconductance = Transconductance::Sampled(vec![0.1]);
        assert!(channel_transmit(&s, &spec, 0.0, 0).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let mut spec = quiet();
        spec.noise = NoiseSpec {
            broadband: 0.01,
            low_band: 0.02,
            high_band: 0.005,
        };
        let s = Signal::zeros(10_000, 48e3).unwrap();
        let a = channel_transmit(&s, &spec, 0.0, 42).unwrap();
        let b = channel_transmit(&s, &spec, 0.0, 42).unwrap();
        let c = channel_transmit(&s, &spec, 0.0, 43).unwrap();
        assert!(a
            .samples()
            .iter()
            .zip(b.samples())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, c);
    }

    #[test]
    fn noise_rms_matches_configuration() {
        let n = 200_000;
        let s = Signal::zeros(n, 48e3).unwrap();
        let mut spec = quiet();
        spec.noise.broadband = 0.05;
        let r = rms(channel_transmit(&s, &spec, 0.0, 7).unwrap().samples());
        assert!((r / 0.05 - 1.0).abs() < 0.05, "{r}");

        spec.noise.high_band = 0.03;
        let r = rms(channel_transmit(&s, &spec, 0.0, 8).unwrap().samples());
        assert!((r / spec.noise.total_rms() - 1.0).abs() < 0.05, "{r}");
    }

    #[test]
    fn low_band_rms_over_long_run() {
        let n = 4_000_000;
        let s = Signal::zeros(n, 48e3).unwrap();
        let mut spec = quiet();
        spec.noise.low_band = 0.02;
        let r = rms(channel_transmit(&s, &spec, 0.0, 11).unwrap().samples());
        assert!((r / 0.02 - 1.0).abs() < 0.1, "{r}");
    }
}
