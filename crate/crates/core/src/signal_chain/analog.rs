//! Preamplifier, LED bias networks, reference AM modulator and the power
//! amplifier.

use std::f64::consts::PI;

use crate::error::{invalid, numeric, Result};

use super::Signal;

/// Non-inverting op-amp stage: feedback resistor `r1`, ground leg `r2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierSpec {
    pub r1: f64,
    pub r2: f64,
}

impl AmplifierSpec {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 >= 0.0 && r1.is_finite()) || !(r2 > 0.0 && r2.is_finite()) {
            return Err(invalid("preamp needs r1 >= 0 and r2 > 0"));
        }
        Ok(Self { r1, r2 })
    }
}

/// `A_V = 1 + R1/R2`.
pub fn preamp_gain(spec: &AmplifierSpec) -> f64 {
    1.0 + spec.r1 / spec.r2
}

pub fn preamp(signal: &Signal, spec: &AmplifierSpec) -> Result<Signal> {
    let g = preamp_gain(spec);
    signal.map(|x| g * x)
}

/// Resistor-biased LED: the terminal voltage is the supply minus the audio,
/// `V_LED = V1 − v_i`.
pub fn led_drive_resistor(signal: &Signal, v1: f64) -> Result<Signal> {
    signal.map(|x| v1 - x)
}

/// Exponential base-emitter law of a transistor driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransistorModel {
    /// Current scale, A.
    pub beta_t: f64,
    /// Threshold voltage, V.
    pub v_th: f64,
    /// Thermal voltage, V.
    pub v_t: f64,
}

impl Default for TransistorModel {
    fn default() -> Self {
        Self {
            beta_t: 1e-3,
            v_th: 0.65,
            v_t: 0.026,
        }
    }
}

impl TransistorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_t > 0.0 && self.v_t > 0.0 && self.v_th.is_finite()) {
            return Err(invalid("transistor model needs beta_t > 0 and v_t > 0"));
        }
        Ok(())
    }
}

/// Transistor-biased LED current, `I = β·exp((v_bias + v_i − V_th)/V_T)`.
pub fn led_drive_transistor(
    signal: &Signal,
    model: &TransistorModel,
    v_bias: f64,
) -> Result<Signal> {
    model.validate()?;
    let out: Vec<f64> = signal
        .samples()
        .iter()
        .map(|&v| model.beta_t * ((v_bias + v - model.v_th) / model.v_t).exp())
        .collect();
    if let Some(i) = out.iter().position(|x| !x.is_finite()) {
        return Err(numeric(format!("LED current overflowed at sample {i}")));
    }
    Signal::new(out, signal.sample_rate())
}

/// Conventional double-sideband AM, `f(t)·A·sin(ωt)`. The coupling-tube link
/// does not use it; it is kept as a reference.
pub fn am_modulate(signal: &Signal, carrier_amp: f64, carrier_freq: f64) -> Result<Signal> {
    let fs = signal.sample_rate();
    if !(carrier_freq > 0.0 && carrier_freq < fs / 2.0) {
        return Err(invalid(format!(
            "carrier {carrier_freq} Hz must lie below Nyquist ({} Hz)",
            fs / 2.0
        )));
    }
    let w = 2.0 * PI * carrier_freq / fs;
    Signal::new(
        signal
            .samples()
            .iter()
            .enumerate()
            .map(|(i, &x)| x * carrier_amp * (w * i as f64).sin())
            .collect(),
        fs,
    )
}

/// Linear gain with hard symmetric clipping.
pub fn power_amp(signal: &Signal, gain: f64, clip_level: f64) -> Result<Signal> {
    if !(gain > 0.0 && clip_level > 0.0) {
        return Err(invalid("power amp needs gain > 0 and clip_level > 0"));
    }
    signal.map(|x| (gain * x).clamp(-clip_level, clip_level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_chain::thd;

    #[test]
    fn preamp_examples() {
        let g = |r1, r2| preamp_gain(&AmplifierSpec::new(r1, r2).unwrap());
        assert_eq!(g(0.0, 1e3), 1.0);
        assert_eq!(g(4.7e3, 4.7e3), 2.0);
        assert_eq!(g(9e3, 1e3), 10.0);
        assert!(AmplifierSpec::new(1.0, 0.0).is_err());
    }

    #[test]
    fn resistor_bias_is_affine() {
        let zero = Signal::zeros(8, 1e3).unwrap();
        assert!(led_drive_resistor(&zero, 5.0)
            .unwrap()
            .samples()
            .iter()
            .all(|&v| v == 5.0));

        let s = Signal::sine(10.0, 0.5, 1e3, 100).unwrap();
        let out = led_drive_resistor(&s, 5.0).unwrap();
        for (o, i) in out.samples().iter().zip(s.samples()) {
            assert_eq!(*o, 5.0 - i);
        }

        let a = Signal::sine(10.0, 0.3, 1e3, 50).unwrap();
        let b = Signal::sine(37.0, 0.2, 1e3, 50).unwrap();
        let sum = Signal::new(
            a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect(),
            1e3,
        )
        .unwrap();
        let (ra, rb, rs) = (
            led_drive_resistor(&a, 5.0).unwrap(),
            led_drive_resistor(&b, 5.0).unwrap(),
            led_drive_resistor(&sum, 5.0).unwrap(),
        );
        for k in 0..50 {
            let lhs = ra.samples()[k] + rb.samples()[k] - 5.0;
            assert!((lhs - rs.samples()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn transistor_bias_properties() {
        let m = TransistorModel::default();
        let zero = Signal::zeros(4, 48e3).unwrap();
        let out = led_drive_transistor(&zero, &m, m.v_th).unwrap();
        assert!(out.samples().iter().all(|&i| i == m.beta_t));

        let ramp = Signal::new((0..100).map(|i| i as f64 * 1e-3 - 0.05).collect(), 48e3).unwrap();
        let out = led_drive_transistor(&ramp, &m, m.v_th).unwrap();
        assert!(out.samples().windows(2).all(|w| w[1] > w[0]));
        assert!(out.samples().iter().all(|&i| i > 0.0));

        let huge = Signal::new(vec![100.0], 48e3).unwrap();
        assert!(matches!(
            led_drive_transistor(&huge, &m, m.v_th),
            Err(crate::Error::NumericFailure(_))
        ));
    }

    #[test]
    fn transistor_distortion_grows_with_drive() {
        let m = TransistorModel::default();
        let fs = 48e3;
        let small = Signal::sine(1e3, 0.05 * m.v_t, fs, 4800).unwrap();
        let large = Signal::sine(1e3, 2.0 * m.v_t, fs, 4800).unwrap();
        let t_small = thd(&led_drive_transistor(&small, &m, m.v_th).unwrap(), 1e3).unwrap();
        let t_large = thd(&led_drive_transistor(&large, &m, m.v_th).unwrap(), 1e3).unwrap();
        let t_res = thd(&led_drive_resistor(&large, 1.0).unwrap(), 1e3).unwrap();
        // exp(ε·sin): second/first harmonic ratio is I2(ε)/I1(ε) ≈ ε/4
        assert!((t_small - 0.0125).abs() < 5e-4, "{t_small}");
        assert!(t_large > 0.4, "{t_large}");
        assert!(t_large > 1e6 * t_res);
    }

    #[test]
    fn am_examples() {
        let fs = 48e3;
        let ones = Signal::new(vec![1.0; 480], fs).unwrap();
        let out = am_modulate(&ones, 2.0, 1e3).unwrap();
        let peak = out.samples().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        assert!((peak - 2.0).abs() < 1e-12);
        let zero = Signal::zeros(480, fs).unwrap();
        assert!(am_modulate(&zero, 1.0, 1e3)
            .unwrap()
            .samples()
            .iter()
            .all(|&x| x == 0.0));
        assert!(am_modulate(&ones, 1.0, 24e3).is_err());
    }

    #[test]
    fn power_amp_examples() {
        let s = Signal::new(vec![0.1, -0.2, 0.5, -3.0], 1e3).unwrap();
        let out = power_amp(&s, 2.0, 1.0).unwrap();
        assert_eq!(out.samples(), &[0.2, -0.4, 1.0, -1.0]);
        assert!(power_amp(&s, 0.0, 1.0).is_err());

        let sine = Signal::sine(1e3, 1.0, 48e3, 4800).unwrap();
        let clipped = power_amp(&sine, 4.0, 1.0).unwrap();
        assert!(thd(&clipped, 1e3).unwrap() > 0.1);
    }
}
