//! Rational continuous-time transfer functions and the polynomial helpers
//! behind them.
//!
//! Coefficients are stored in descending powers of `s`, so `[a, b, c]` is
//! `a·s² + b·s + c`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// A rational transfer function `num(s) / den(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TransferFunction {
    /// Builds a transfer function, stripping leading zero coefficients.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(invalid("transfer function coefficients must be finite"));
        }
        let num = strip_leading_zeros(num);
        let den = strip_leading_zeros(den);
        if den.is_empty() {
            return Err(invalid("denominator leading coefficient must be non-zero"));
        }
        let num = if num.is_empty() { vec![0.0] } else { num };
        Ok(Self { num, den })
    }

    /// Constant gain `k`.
    pub fn gain(k: f64) -> Result<Self> {
        Self::new(vec![k], vec![1.0])
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    /// Series connection `self · other`.
    pub fn series(&self, other: &TransferFunction) -> TransferFunction {
        TransferFunction {
            num: poly_mul(&self.num, &other.num),
            den: poly_mul(&self.den, &other.den),
        }
    }

    /// Evaluates the transfer function at a complex frequency.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    /// Response at `f` hertz, i.e. `H(j·2πf)`.
    pub fn at_hz(&self, f: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, 2.0 * PI * f))
    }

    /// Gain at `s = 0`; infinite when the denominator has a root at the origin.
    pub fn dc_gain(&self) -> f64 {
        let n = *self.num.last().unwrap_or(&0.0);
        let d = *self.den.last().unwrap_or(&0.0);
        n / d
    }

    pub fn poles(&self) -> Vec<Complex64> {
        roots(&self.den)
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        roots(&self.num)
    }

    /// True when every pole has a strictly negative real part.
    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.re < 0.0)
    }
}

/// One point of a frequency response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePoint {
    pub freq_hz: f64,
    pub mag_db: f64,
    /// Wrapped to `(-π, π]`.
    pub phase_rad: f64,
}

/// Evaluates `tf` at `s = j·2πf` for each frequency.
pub fn frequency_response(tf: &TransferFunction, freqs: &[f64]) -> Result<Vec<ResponsePoint>> {
    freqs
        .iter()
        .map(|&f| {
            if !(f > 0.0 && f.is_finite()) {
                return Err(invalid(format!("frequency must be positive, got {f}")));
            }
            let h = tf.at_hz(f);
            Ok(ResponsePoint {
                freq_hz: f,
                mag_db: 20.0 * h.norm().log10(),
                phase_rad: h.arg(),
            })
        })
        .collect()
}

/// Group delay `-dφ/dω` at `f` hertz, by central difference with a relative
/// step of 1e-4. The phase difference is taken as the argument of the ratio
/// of the two responses so wrapping never matters.
pub fn group_delay(tf: &TransferFunction, f: f64) -> Result<f64> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(invalid(format!("frequency must be positive, got {f}")));
    }
    let w = 2.0 * PI * f;
    let h = 1e-4 * w;
    let hi = tf.eval(Complex64::new(0.0, w + h));
    let lo = tf.eval(Complex64::new(0.0, w - h));
    let dphi = (hi / lo).arg();
    Ok(-dphi / (2.0 * h))
}

/// Logarithmically spaced frequencies, inclusive of both ends.
pub fn log_space(f_min: f64, f_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_max > f_min && n >= 2) {
        return Err(invalid("log_space needs 0 < f_min < f_max and n >= 2"));
    }
    let (a, b) = (f_min.ln(), f_max.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

pub(crate) fn strip_leading_zeros(mut c: Vec<f64>) -> Vec<f64> {
    let first = c.iter().position(|&x| x != 0.0).unwrap_or(c.len());
    c.drain(..first);
    c
}

/// Polynomial product, descending coefficients.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Horner evaluation, descending coefficients.
pub fn poly_eval(c: &[f64], s: Complex64) -> Complex64 {
    c.iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * s + k)
}

/// Roots of `a·s² + b·s + c` with `a ≠ 0`, using the cancellation-free form
/// for real roots.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// All complex roots of a real polynomial (descending coefficients).
///
/// Degrees one and two are solved in closed form. Higher degrees use the
/// Aberth–Ehrlich simultaneous iteration on a rescaled polynomial whose
/// constant and leading coefficients have equal magnitude.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c = strip_leading_zeros(coeffs.to_vec());
    let mut out = Vec::new();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
        out.push(Complex64::new(0.0, 0.0));
    }
    match c.len() {
        0 | 1 => {}
        2 => out.push(Complex64::new(-c[1] / c[0], 0.0)),
        3 => out.extend(quadratic_roots(c[0], c[1], c[2])),
        _ => out.extend(aberth(&c)),
    }
    out
}

fn aberth(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let scale = (c[n] / c[0]).abs().powf(1.0 / n as f64);
    // p(σx)/(a0·σⁿ) is monic with |constant| = 1.
    let monic: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(k, &a)| a / c[0] * scale.powi(-(k as i32)))
        .collect();
    let deriv: Vec<f64> = monic[..n]
        .iter()
        .enumerate()
        .map(|(k, &a)| a * (n - k) as f64)
        .collect();

    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..2000 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let p = poly_eval(&monic, z[i]);
            let dp = poly_eval(&deriv, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z.into_iter().map(|x| x * scale).collect()
}
