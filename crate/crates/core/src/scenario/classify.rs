//! Outcome labels for pendulum runs and received audio.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::signal_chain::{rms, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityClass {
    Stable,
    SmallOscillation,
    LargeOscillation,
}

impl StabilityClass {
    pub fn name(self) -> &'static str {
        match self {
            StabilityClass::Stable => "stable",
            StabilityClass::SmallOscillation => "small_oscillation",
            StabilityClass::LargeOscillation => "large_oscillation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityThresholds {
    /// Trailing fraction of the run that is judged.
    pub window_fraction: f64,
    /// Minimum length of that window, s.
    pub min_window: f64,
    /// Peak-to-peak below this is stable, rad.
    pub stable_ptp: f64,
    /// Peak-to-peak below this is a small oscillation, rad.
    pub small_ptp: f64,
}

impl Default for StabilityThresholds {
    fn default() -> Self {
        Self {
            window_fraction: 0.2,
            min_window: 2.0,
            stable_ptp: 1f64.to_radians(),
            small_ptp: 8f64.to_radians(),
        }
    }
}

impl StabilityThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(invalid("window fraction must lie in (0, 1]"));
        }
        if !(self.min_window >= 0.0 && self.stable_ptp > 0.0 && self.small_ptp > self.stable_ptp) {
            return Err(invalid("need min_window >= 0 and 0 < stable_ptp < small_ptp"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub set_angle: f64,
    pub classification: StabilityClass,
    /// Window mean, present only when stable.
    pub steady_angle: Option<f64>,
    /// Half the window peak-to-peak, rad.
    pub oscillation_amplitude: f64,
}

/// Labels a control-rate angle series by the peak-to-peak swing in its
/// trailing window. An aborted run is always a large oscillation.
pub fn classify_stability(
    theta: &[f64],
    dt: f64,
    set_angle: f64,
    thresholds: &StabilityThresholds,
    aborted: bool,
) -> Result<StabilityReport> {
    thresholds.validate()?;
    let large = |amp: f64| StabilityReport {
        set_angle,
        classification: StabilityClass::LargeOscillation,
        steady_angle: None,
        oscillation_amplitude: amp,
    };
    if aborted {
        let (lo, hi) = extent(theta);
        return Ok(large(0.5 * (hi - lo).max(0.0)));
    }
    let n = theta.len();
    let w = ((n as f64) * thresholds.window_fraction).round() as usize;
    if w < 2 || (w as f64) * dt < thresholds.min_window - 1e-9 {
        return Err(invalid(format!(
            "series covers {:.3} s of settled time, need {} s",
            w as f64 * dt,
            thresholds.min_window
        )));
    }
    let window = &theta[n - w..];
    let (lo, hi) = extent(window);
    let ptp = hi - lo;
    let amp = 0.5 * ptp;
    Ok(if ptp < thresholds.stable_ptp {
        StabilityReport {
            set_angle,
            classification: StabilityClass::Stable,
            steady_angle: Some(window.iter().sum::<f64>() / w as f64),
            oscillation_amplitude: amp,
        }
    } else if ptp < thresholds.small_ptp {
        StabilityReport {
            set_angle,
            classification: StabilityClass::SmallOscillation,
            steady_angle: None,
            oscillation_amplitude: amp,
        }
    } else {
        large(amp)
    })
}

fn extent(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AudioClass {
    Complete,
    CompleteWithNoise,
    Intermittent,
    Vanish,
}

impl AudioClass {
    pub fn name(self) -> &'static str {
        match self {
            AudioClass::Complete => "complete",
            AudioClass::CompleteWithNoise => "complete_with_noise",
            AudioClass::Intermittent => "intermittent",
            AudioClass::Vanish => "vanish",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudioThresholds {
    /// Frame length, s.
    pub frame: f64,
    /// Frames quieter than this RMS drop, V.
    pub rx_floor: f64,
    /// Frames correlating below this with the reference drop.
    pub min_correlation: f64,
    /// Dropout below this is complete.
    pub complete_max_dropout: f64,
    /// Dropout above this is vanish.
    pub vanish_min_dropout: f64,
    /// Complete audio below this SNR is noisy, dB.
    pub noisy_snr_db: f64,
    /// Largest delay searched when aligning, s.
    pub max_lag: f64,
}

impl Default for AudioThresholds {
    fn default() -> Self {
        Self {
            frame: 0.02,
            rx_floor: 0.0,
            min_correlation: 0.5,
            complete_max_dropout: 0.02,
            vanish_min_dropout: 0.6,
            noisy_snr_db: 20.0,
            max_lag: 0.05,
        }
    }
}

impl AudioThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.frame > 0.0
            && self.rx_floor >= 0.0
            && (-1.0..=1.0).contains(&self.min_correlation)
            && 0.0 <= self.complete_max_dropout
            && self.complete_max_dropout <= self.vanish_min_dropout
            && self.vanish_min_dropout <= 1.0
            && self.noisy_snr_db.is_finite()
            && self.max_lag >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(invalid("audio thresholds are inconsistent"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudioReport {
    pub classification: AudioClass,
    pub dropout_fraction: f64,
    pub mean_frame_correlation: f64,
    pub snr_db: f64,
    /// Delay applied to the received signal, samples.
    pub lag: isize,
}

/// Compares `received` with the reference `input` frame by frame after
/// delay and polarity compensation.
pub fn classify_audio(
    input: &Signal,
    received: &Signal,
    thresholds: &AudioThresholds,
) -> Result<AudioReport> {
    thresholds.validate()?;
    let fs = input.sample_rate();
    if (received.sample_rate() - fs).abs() > 1e-9 * fs {
        return Err(invalid("input and received sample rates differ"));
    }
    let x = input.samples();
    if rms(x) < 1e-12 {
        return Err(Error::MetricUndefined("input is silent".into()));
    }
    let max_lag = (thresholds.max_lag * fs).round() as usize;
    let (lag, polarity) = align(x, received.samples(), max_lag);

    // Overlap of x[i] with y[i + lag].
    let y = received.samples();
    let start = if lag < 0 { lag.unsigned_abs() } else { 0 };
    let end = x.len().min((y.len() as isize - lag).max(0) as usize);
    let frame_len = ((thresholds.frame * fs).round() as usize).max(1);
    if end <= start || end - start < frame_len {
        return Err(invalid("signals overlap by less than one frame"));
    }
    let xs = &x[start..end];
    let ys: Vec<f64> = (start..end)
        .map(|i| polarity * y[(i as isize + lag) as usize])
        .collect();

    let frames = xs.len() / frame_len;
    let mut dropped = 0usize;
    let mut corr_sum = 0.0;
    for k in 0..frames {
        let a = &xs[k * frame_len..(k + 1) * frame_len];
        let b = &ys[k * frame_len..(k + 1) * frame_len];
        let c = cosine(a, b);
        corr_sum += c;
        if rms(b) < thresholds.rx_floor || c < thresholds.min_correlation {
            dropped += 1;
        }
    }
    let dropout = dropped as f64 / frames as f64;
    let xs = &xs[..frames * frame_len];
    let ys = &ys[..frames * frame_len];
    let snr_db = snr(xs, ys);

    let classification = if dropout < thresholds.complete_max_dropout {
        if snr_db < thresholds.noisy_snr_db {
            AudioClass::CompleteWithNoise
        } else {
            AudioClass::Complete
        }
    } else if dropout <= thresholds.vanish_min_dropout {
        AudioClass::Intermittent
    } else {
        AudioClass::Vanish
    };
    Ok(AudioReport {
        classification,
        dropout_fraction: dropout,
        mean_frame_correlation: corr_sum / frames as f64,
        snr_db,
        lag,
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let aa: f64 = a.iter().map(|p| p * p).sum();
    let bb: f64 = b.iter().map(|q| q * q).sum();
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        (ab / (aa * bb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// SNR of `y` against the least-squares scaled copy of `x`, dB.
fn snr(x: &[f64], y: &[f64]) -> f64 {
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let gain = x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() / xx;
    let signal = gain * gain * xx;
    let noise: f64 = x.iter().zip(y).map(|(p, q)| (q - gain * p).powi(2)).sum();
    if noise == 0.0 {
        f64::INFINITY
    } else if signal == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * (signal / noise).log10()
    }
}

/// Lag `d` (|d| ≤ `max_lag`) maximizing `|Σ x[i]·y[i + d]|` and the sign of
/// that correlation.
fn align(x: &[f64], y: &[f64], max_lag: usize) -> (isize, f64) {
    let n = (x.len() + y.len()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let pad = |v: &[f64]| {
        let mut b: Vec<Complex<f64>> = v.iter().map(|&r| Complex::new(r, 0.0)).collect();
        b.resize(n, Complex::new(0.0, 0.0));
        b
    };
    let (mut fx, mut fy) = (pad(x), pad(y));
    fwd.process(&mut fx);
    fwd.process(&mut fy);
    // r[d] = Σ x[i]·y[i + d] = IFFT(conj(X)·Y)[d].
    let mut r: Vec<Complex<f64>> = fx.iter().zip(&fy).map(|(a, b)| a.conj() * b).collect();
    inv.process(&mut r);

    let max_pos = max_lag.min(y.len().saturating_sub(1));
    let max_neg = max_lag.min(x.len().saturating_sub(1));
    let mut best = (0isize, r[0].re);
    let candidates = (1..=max_pos)
        .map(|d| (d as isize, r[d].re))
        .chain((1..=max_neg).map(|d| (-(d as isize), r[n - d].re)));
    for (d, v) in candidates {
        // Ties resolve to the smallest delay; relative margin absorbs FFT
        // rounding.
        if v.abs() > best.1.abs() * (1.0 + 1e-9) + 1e-300 {
            best = (d, v);
        } else if (v.abs() - best.1.abs()).abs() <= 1e-9 * best.1.abs()
            && d.unsigned_abs() < best.0.unsigned_abs()
        {
            best = (d, v);
        }
    }
    (best.0, if best.1 < 0.0 { -1.0 } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn tones(n: usize) -> Signal {
        let fs = 8e3;
        Signal::new(
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    (2.0 * std::f64::consts::PI * 310.0 * t).sin()
                        + 0.6 * (2.0 * std::f64::consts::PI * 1270.0 * t).sin()
                        + 0.3 * (2.0 * std::f64::consts::PI * 2090.0 * t).cos()
                })
                .collect(),
            fs,
        )
        .unwrap()
    }

    #[test]
    fn constant_series_is_stable_at_set() {
        let th = vec![0.2; 10_000];
        let r = classify_stability(&th, 1e-3, 0.2, &StabilityThresholds::default(), false).unwrap();
        assert_eq!(r.classification, StabilityClass::Stable);
        assert!((r.steady_angle.unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn oscillation_thresholds() {
        let run = |amp_deg: f64| {
            let th: Vec<f64> = (0..10_000)
                .map(|i| 0.1 + deg(amp_deg) * (i as f64 * 0.01).sin())
                .collect();
            classify_stability(&th, 1e-3, 0.1, &StabilityThresholds::default(), false).unwrap()
        };
        let small = run(3.0);
        assert_eq!(small.classification, StabilityClass::SmallOscillation);
        assert!(small.steady_angle.is_none());
        assert!((small.oscillation_amplitude - deg(3.0)).abs() < 1e-4);
        assert_eq!(run(20.0).classification, StabilityClass::LargeOscillation);
        assert_eq!(run(0.4).classification, StabilityClass::Stable);
    }

    #[test]
    fn short_series_rejected_and_abort_is_large() {
        let th = vec![0.0; 5_000];
        let t = StabilityThresholds::default();
        assert!(classify_stability(&th, 1e-3, 0.0, &t, false).is_err());
        let r = classify_stability(&th, 1e-3, 0.0, &t, true).unwrap();
        assert_eq!(r.classification, StabilityClass::LargeOscillation);
    }

    #[test]
    fn identical_audio_is_complete() {
        let s = tones(16_000);
        let r = classify_audio(&s, &s, &AudioThresholds::default()).unwrap();
        assert_eq!(r.classification, AudioClass::Complete);
        assert_eq!(r.dropout_fraction, 0.0);
        assert_eq!(r.lag, 0);
        assert!(r.snr_db.is_infinite());
    }

    #[test]
    fn silence_vanishes_and_silent_input_is_undefined() {
        let s = tones(16_000);
        let z = Signal::zeros(16_000, 8e3).unwrap();
        let r = classify_audio(&s, &z, &AudioThresholds::default()).unwrap();
        assert_eq!(r.classification, AudioClass::Vanish);
        assert_eq!(r.dropout_fraction, 1.0);
        assert!(matches!(
            classify_audio(&z, &s, &AudioThresholds::default()),
            Err(Error::MetricUndefined(_))
        ));
    }

    #[test]
    fn alternating_frames_are_intermittent() {
        let s = tones(16_000);
        let frame = 160;
        let gated: Vec<f64> = s
            .samples()
            .iter()
            .enumerate()
            .map(|(i, &v)| if (i / frame) % 2 == 1 { 0.0 } else { v })
            .collect();
        let g = Signal::new(gated, 8e3).unwrap();
        let r = classify_audio(&s, &g, &AudioThresholds::default()).unwrap();
        assert!((r.dropout_fraction - 0.5).abs() < 0.01, "{}", r.dropout_fraction);
        assert_eq!(r.classification, AudioClass::Intermittent);
    }

    #[test]
    fn delay_and_inversion_are_compensated() {
        let s = tones(16_000);
        let d = 37;
        let mut shifted = vec![0.0; d];
        shifted.extend(s.samples().iter().map(|v| -0.5 * v));
        shifted.truncate(16_000);
        let r = classify_audio(&s, &Signal::new(shifted, 8e3).unwrap(), &AudioThresholds::default())
            .unwrap();
        assert_eq!(r.lag, d as isize);
        assert_eq!(r.classification, AudioClass::Complete);
        assert!(r.snr_db > 60.0);
    }

    #[test]
    fn noise_lowers_snr() {
        let s = tones(16_000);
        // Deterministic pseudo-noise at about −10 dB.
        let noisy: Vec<f64> = s
            .samples()
            .iter()
            .enumerate()
            .map(|(i, &v)| v + 0.25 * ((i as f64 * 12.9898).sin() * 43758.5453).fract())
            .collect();
        let r = classify_audio(&s, &Signal::new(noisy, 8e3).unwrap(), &AudioThresholds::default())
            .unwrap();
        assert!(r.snr_db < 20.0, "{}", r.snr_db);
        assert_eq!(r.classification, AudioClass::CompleteWithNoise);
    }
}
