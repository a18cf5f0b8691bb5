//! Receiver band-pass: a fourth-order low-pass (two unity-gain Sallen-Key
//! sections) cascaded with a third-order high-pass (one Sallen-Key section
//! plus a passive RC), and its digital emulation as a biquad cascade.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::tf::{poly_mul, roots, TransferFunction};

use super::Signal;

/// Equal-component Sallen-Key low-pass stage: both resistors `r`, both
/// capacitors `c`. Q is fixed at 0.5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcStage {
    /// Ohms.
    pub r: f64,
    /// Farads.
    pub c: f64,
}

/// Third-order high-pass: a unity-gain Sallen-Key section (series
/// capacitors `c3`, `c4`; feedback resistor `r3`; ground resistor `r4`)
/// followed by a first-order `c5`/`r5` section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighPassStage {
    pub c3: f64,
    pub r3: f64,
    pub c4: f64,
    pub r4: f64,
    pub c5: f64,
    pub r5: f64,
}

/// Component values of the receiver band-pass. The default is the
/// reference board.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterDesign {
    pub lp_stage1: RcStage,
    pub lp_stage2: RcStage,
    pub hp: HighPassStage,
}

impl Default for FilterDesign {
    fn default() -> Self {
        Self {
            lp_stage1: RcStage { r: 6.8e3, c: 5e-9 },
            lp_stage2: RcStage { r: 3.6e3, c: 15e-9 },
            hp: HighPassStage {
                c3: 1e-6,
                r3: 5e3,
                c4: 1e-6,
                r4: 10e3,
                c5: 1e-6,
                r5: 10.4e3,
            },
        }
    }
}

impl FilterDesign {
    fn components(&self) -> [(&'static str, f64); 10] {
        let h = &self.hp;
        [
            ("lp_stage1.r", self.lp_stage1.r),
            ("lp_stage1.c", self.lp_stage1.c),
            ("lp_stage2.r", self.lp_stage2.r),
            ("lp_stage2.c", self.lp_stage2.c),
            ("hp.c3", h.c3),
            ("hp.r3", h.r3),
            ("hp.c4", h.c4),
            ("hp.r4", h.r4),
            ("hp.c5", h.c5),
            ("hp.r5", h.r5),
        ]
    }
}

/// Component-selection rule `k = 100 / (f_c · C)` with `k` in kΩ, `f_c` in
/// kHz and `C` in nF.
pub fn rc_design_rule(fc_khz: f64, c_nf: f64) -> Result<f64> {
    if !(fc_khz > 0.0 && c_nf > 0.0) {
        return Err(invalid("rc_design_rule needs fc > 0 and C > 0"));
    }
    Ok(100.0 / (fc_khz * c_nf))
}

/// The four analog sections in signal order: two low-pass, the Sallen-Key
/// high-pass and the first-order high-pass.
pub fn bandpass_sections(design: &FilterDesign) -> Result<[TransferFunction; 4]> {
    for (name, v) in design.components() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidDesign(format!("{name} must be positive, got {v}")));
        }
    }
    let lp = |s: &RcStage| {
        let tau = s.r * s.c;
        TransferFunction::new(vec![1.0], vec![tau * tau, 2.0 * tau, 1.0])
    };
    let h = &design.hp;
    let rrcc = h.r3 * h.r4 * h.c3 * h.c4;
    let hp2 = TransferFunction::new(
        vec![rrcc, 0.0, 0.0],
        vec![rrcc, h.r3 * (h.c3 + h.c4), 1.0],
    )?;
    let tau5 = h.r5 * h.c5;
    let hp1 = TransferFunction::new(vec![tau5, 0.0], vec![tau5, 1.0])?;
    Ok([lp(&design.lp_stage1)?, lp(&design.lp_stage2)?, hp2, hp1])
}

/// Seventh-order continuous transfer function of the whole band-pass.
pub fn design_bandpass(design: &FilterDesign) -> Result<TransferFunction> {
    let sections = bandpass_sections(design)?;
    for s in &sections {
        if let Some(p) = s.poles().iter().find(|p| p.re >= 0.0) {
            return Err(Error::InvalidDesign(format!(
                "section pole {p} is not in the left half-plane"
            )));
        }
    }
    let [a, b, c, d] = sections;
    Ok(a.series(&b).series(&c).series(&d))
}

/// Frequency warping used by the bilinear transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prewarp {
    /// Plain bilinear, `s = 2·fs·(z − 1)/(z + 1)`.
    None,
    /// Each section is prewarped at its own natural frequency so section
    /// corners land exactly.
    SectionCorner,
    /// Each section is prewarped at the frequency that minimizes its worst
    /// magnitude error (dB) between `fs/10⁴` and `fs/8`.
    #[default]
    SectionMinimax,
}

impl Prewarp {
    /// Bilinear constant `K` in `s = K·(z − 1)/(z + 1)` for one section.
    fn constant(self, num: &[f64], den: &[f64], corner: f64, fs: f64) -> f64 {
        let warp_at = |w: f64| w / (w / (2.0 * fs)).tan();
        match self {
            Prewarp::None => 2.0 * fs,
            Prewarp::SectionCorner => warp_at(corner),
            Prewarp::SectionMinimax => {
                let band_top = 2.0 * PI * fs / 8.0;
                let probes = log_grid(fs * 1e-4, fs / 8.0, 400);
                let worst = |k: f64| -> f64 {
                    probes
                        .iter()
                        .map(|&f| {
                            let w = 2.0 * PI * f;
                            let warped = k * (PI * f / fs).tan();
                            let analog = eval_real(num, w) / eval_real(den, w);
                            let digital = eval_real(num, warped) / eval_real(den, warped);
                            (20.0 * (digital.norm() / analog.norm()).log10()).abs()
                        })
                        .fold(0.0, f64::max)
                };
                let lo = (corner / 4.0).min(band_top / 4.0);
                log_grid(lo, band_top, 200)
                    .into_iter()
                    .map(warp_at)
                    .map(|k| (k, worst(k)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(k, _)| k)
                    .unwrap_or(2.0 * fs)
            }
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn eval_real(poly: &[f64], w: f64) -> Complex64 {
    crate::tf::poly_eval(poly, Complex64::new(0.0, w))
}

/// Second-order IIR section in transposed direct form II, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
    state: [f64; 2],
}

impl Biquad {
    pub fn new(b: [f64; 3], a: [f64; 2]) -> Self {
        Self {
            b,
            a,
            state: [0.0; 2],
        }
    }

    /// Butterworth high-pass at `fc`.
    pub fn butterworth_highpass(fc: f64, fs: f64, prewarp: Prewarp) -> Self {
        let w = 2.0 * PI * fc;
        bilinear_section(&[1.0, 0.0, 0.0], &[1.0, std::f64::consts::SQRT_2 * w, w * w], w, fs, prewarp)
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.state[0];
        self.state[0] = self.b[1] * x - self.a[0] * y + self.state[1];
        self.state[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    pub fn reset(&mut self) {
        self.state = [0.0; 2];
    }

    /// Response at `z = e^{jω}` with `ω = 2πf/fs`.
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        roots(&[1.0, self.a[0], self.a[1]])
    }

    /// RMS gain for unit-variance white input: `√Σ h[n]²` from the impulse
    /// response.
    pub fn white_noise_gain(&self) -> f64 {
        let mut probe = Biquad::new(self.b, self.a);
        let mut energy = 0.0;
        let mut y = probe.process(1.0);
        energy += y * y;
        for _ in 0..100_000 {
            y = probe.process(0.0);
            energy += y * y;
            if y.abs() < 1e-18 && probe.state.iter().all(|s| s.abs() < 1e-18) {
                break;
            }
        }
        energy.sqrt()
    }
}

/// A cascade of biquads running at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalFilter {
    pub sections: Vec<Biquad>,
    pub sample_rate: f64,
}

impl DigitalFilter {
    pub fn response(&self, f: f64) -> Complex64 {
        self.sections
            .iter()
            .map(|s| s.response(f, self.sample_rate))
            .product()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }
}

/// Bilinear transform of one section given as `num(s)/den(s)` with
/// `deg num <= deg den <= 2`.
fn bilinear_section(num: &[f64], den: &[f64], corner: f64, fs: f64, prewarp: Prewarp) -> Biquad {
    let order = den.len() - 1;
    let k = prewarp.constant(num, den, corner, fs);
    // Σ c_j s^j → Σ c_j K^j (1 − x)^j (1 + x)^(order − j), x = z⁻¹.
    let map = |poly: &[f64]| -> [f64; 3] {
        let mut out = [0.0; 3];
        let lead_pad = order + 1 - poly.len();
        for (idx, &c) in poly.iter().enumerate() {
            let power = order - (idx + lead_pad);
            let mut term = vec![c * k.powi(power as i32)];
            for _ in 0..power {
                term = poly_mul(&term, &[1.0, -1.0]);
            }
            for _ in 0..(order - power) {
                term = poly_mul(&term, &[1.0, 1.0]);
            }
            // term is ascending in x because both factors are symmetric in
            // the sense [1, ±1] = 1 ± x.
            for (i, t) in term.iter().enumerate() {
                out[i] += t;
            }
        }
        out
    };
    let b = map(num);
    let a = map(den);
    let a0 = a[0];
    Biquad::new([b[0] / a0, b[1] / a0, b[2] / a0], [a[1] / a0, a[2] / a0])
}

/// Discretizes with the default [`Prewarp::SectionMinimax`] mapping.
pub fn discretize(tf: &TransferFunction, sample_rate: f64) -> Result<DigitalFilter> {
    discretize_with(tf, sample_rate, Prewarp::default())
}

struct Section {
    poles: Vec<Complex64>,
    zeros: Vec<Complex64>,
}

impl Section {
    fn corner(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).product::<f64>().powf(1.0 / self.poles.len() as f64)
    }
}

fn real_poly(rts: &[Complex64]) -> Vec<f64> {
    match rts {
        [] => vec![1.0],
        [r] => vec![1.0, -r.re],
        [a, b] => vec![1.0, -(a + b).re, (a * b).re],
        _ => unreachable!("sections hold at most two roots"),
    }
}

/// Splits roots into conjugate pairs and reals.
fn group_roots(rts: Vec<Complex64>) -> (Vec<[Complex64; 2]>, Vec<Complex64>) {
    let mut pairs = Vec::new();
    let mut reals = Vec::new();
    for r in rts {
        if r.im.abs() <= 1e-9 * r.norm().max(1e-300) {
            reals.push(Complex64::new(r.re, 0.0));
        } else if r.im > 0.0 {
            pairs.push([r, r.conj()]);
        }
    }
    reals.sort_by(|a, b| a.re.total_cmp(&b.re));
    (pairs, reals)
}

/// Factors `tf` into first/second-order sections and maps each through the
/// bilinear transform.
///
/// The sample rate must be at least eight times the fastest pole frequency
/// so the warped response stays close to the analog one in the audio band.
pub fn discretize_with(
    tf: &TransferFunction,
    sample_rate: f64,
    prewarp: Prewarp,
) -> Result<DigitalFilter> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(invalid("sample rate must be positive"));
    }
    if tf.num().len() > tf.den().len() {
        return Err(invalid("transfer function must be proper"));
    }
    let poles = tf.poles();
    let fastest = poles.iter().map(|p| p.norm()).fold(0.0, f64::max) / (2.0 * PI);
    if sample_rate < 8.0 * fastest {
        return Err(invalid(format!(
            "sample rate {sample_rate} Hz is below 8x the fastest pole ({fastest:.1} Hz)"
        )));
    }

    let (pole_pairs, pole_reals) = group_roots(poles);
    let mut sections: Vec<Section> = pole_pairs
        .into_iter()
        .map(|p| Section {
            poles: p.to_vec(),
            zeros: Vec::new(),
        })
        .collect();
    for chunk in pole_reals.chunks(2) {
        sections.push(Section {
            poles: chunk.to_vec(),
            zeros: Vec::new(),
        });
    }

    // Zeros go to the nearest section with room; complex pairs first so they
    // land in second-order sections.
    let (zero_pairs, zero_reals) = group_roots(tf.zeros());
    for pair in zero_pairs {
        let target = sections
            .iter_mut()
            .filter(|s| s.poles.len() == 2 && s.zeros.is_empty())
            .min_by(|a, b| dist(&a.poles, pair[0]).total_cmp(&dist(&b.poles, pair[0])))
            .ok_or_else(|| invalid("cannot place complex zero pair"))?;
        target.zeros.extend(pair);
    }
    for z in zero_reals {
        let target = sections
            .iter_mut()
            .filter(|s| s.zeros.len() < s.poles.len())
            .min_by(|a, b| dist(&a.poles, z).total_cmp(&dist(&b.poles, z)))
            .ok_or_else(|| invalid("more zeros than poles"))?;
        target.zeros.push(z);
    }

    let gain = tf.num()[0] / tf.den()[0];
    let mut biquads = Vec::with_capacity(sections.len());
    for (i, s) in sections.iter().enumerate() {
        let mut num = real_poly(&s.zeros);
        if i == 0 {
            num.iter_mut().for_each(|c| *c *= gain);
        }
        let bq = bilinear_section(&num, &real_poly(&s.poles), s.corner(), sample_rate, prewarp);
        if bq.poles().iter().any(|p| p.norm() >= 1.0) {
            return Err(Error::NumericFailure(
                "discretized section has a pole on or outside the unit circle".into(),
            ));
        }
        biquads.push(bq);
    }
    Ok(DigitalFilter {
        sections: biquads,
        sample_rate,
    })
}

fn dist(poles: &[Complex64], z: Complex64) -> f64 {
    poles.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Runs `signal` through the filter from a zero initial state.
pub fn filter_apply(filter: &DigitalFilter, signal: &Signal) -> Result<Signal> {
    if (signal.sample_rate() - filter.sample_rate).abs() > 1e-9 * filter.sample_rate {
        return Err(invalid(format!(
            "signal rate {} Hz does not match filter rate {} Hz",
            signal.sample_rate(),
            filter.sample_rate
        )));
    }
    let mut sections = filter.sections.clone();
    sections.iter_mut().for_each(Biquad::reset);
    let out = signal
        .samples()
        .iter()
        .map(|&x| sections.iter_mut().fold(x, |acc, s| s.process(acc)))
        .collect();
    Signal::new(out, signal.sample_rate())
}
