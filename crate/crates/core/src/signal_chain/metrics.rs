//! Distortion metrics.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{invalid, Error, Result};

use super::Signal;

/// Highest harmonic included in [`thd`].
pub const THD_MAX_HARMONIC: usize = 10;
/// Bins summed on each side of a harmonic's centre bin.
const HALF_BAND: usize = 3;

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Total harmonic distortion: `√(Σ_{k=2..10} P_k / P_1)`, the RMS of
/// harmonics 2 through 10 relative to the fundamental, from a Hann-windowed
/// FFT. Each harmonic's power is summed over ±3 bins around its centre.
/// Harmonics at or above Nyquist are skipped.
pub fn thd(signal: &Signal, fundamental: f64) -> Result<f64> {
    let fs = signal.sample_rate();
    let n = signal.len();
    if !(fundamental > 0.0 && fundamental < fs / 10.0) {
        return Err(invalid(format!(
            "fundamental {fundamental} Hz must lie in (0, fs/10)"
        )));
    }
    if (n as f64) < 10.0 * fs / fundamental {
        return Err(invalid("thd needs at least 10 fundamental periods"));
    }

    // Periodic Hann: coherent tones leak into exactly ±1 bin.
    let mut buf: Vec<Complex<f64>> = signal
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
            Complex::new(x * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm_sqr()).collect();

    let df = fs / n as f64;
    let band_power = |k: usize| -> f64 {
        let centre = (k as f64 * fundamental / df).round() as usize;
        let lo = centre.saturating_sub(HALF_BAND).max(1);
        let hi = (centre + HALF_BAND).min(power.len() - 1);
        power[lo..=hi].iter().sum()
    };

    let p1 = band_power(1);
    let mut sorted = power[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    if !(p1 > 0.0) || p1 <= 1e3 * floor * (2 * HALF_BAND + 1) as f64 {
        return Err(Error::MetricUndefined(format!(
            "no fundamental above the noise floor at {fundamental} Hz"
        )));
    }
    let harmonics: f64 = (2..=THD_MAX_HARMONIC)
        .take_while(|&k| (k as f64) * fundamental < fs / 2.0)
        .map(band_power)
        .sum();
    Ok((harmonics / p1).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_sine_has_negligible_thd() {
        let s = Signal::sine(1e3, 0.7, 48e3, 48_000).unwrap();
        assert!(thd(&s, 1e3).unwrap() < 1e-6);
        let s = Signal::sine(997.0, 0.7, 48e3, 48_000).unwrap();
        assert!(thd(&s, 997.0).unwrap() < 1e-6);
    }

    #[test]
    fn square_wave_matches_discrete_fourier_oracle() {
        // 48 samples per period, 24 high then 24 low.
        let period = 48usize;
        let x: Vec<f64> = (0..period * 100)
            .map(|i| if i % period < period / 2 { 1.0 } else { -1.0 })
            .collect();
        // Oracle: direct DFT of a single period.
        let coef = |k: usize| -> f64 {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x[..period].iter().enumerate() {
                let ang = -2.0 * PI * (k * n) as f64 / period as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re * re + im * im).sqrt()
        };
        let oracle =
            ((2..=10).map(|k| coef(k).powi(2)).sum::<f64>()).sqrt() / coef(1);
        assert!((oracle - 0.435_2).abs() < 1e-3, "{oracle}");
        let s = Signal::new(x, 48e3).unwrap();
        let got = thd(&s, 1e3).unwrap();
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }

    #[test]
    fn thd_is_scale_invariant() {
        let s: Vec<f64> = (0..48_000)
            .map(|i| {
                let t = i as f64 / 48e3;
                (2.0 * PI * 1e3 * t).sin() + 0.1 * (2.0 * PI * 3e3 * t).sin()
            })
            .collect();
        let a = thd(&Signal::new(s.clone(), 48e3).unwrap(), 1e3).unwrap();
        let b = thd(&Signal::new(s.iter().map(|v| 1e-3 * v).collect(), 48e3).unwrap(), 1e3).unwrap();
        assert!((a - 0.1).abs() < 1e-9);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn preconditions_and_undefined_metric() {
        let s = Signal::sine(1e3, 1.0, 48e3, 400).unwrap();
        assert!(thd(&s, 1e3).is_err());
        let s = Signal::sine(1e3, 1.0, 48e3, 48_000).unwrap();
        assert!(thd(&s, 6e3).is_err());
        let z = Signal::zeros(48_000, 48e3).unwrap();
        assert!(matches!(thd(&z, 1e3), Err(Error::MetricUndefined(_))));
    }
}
