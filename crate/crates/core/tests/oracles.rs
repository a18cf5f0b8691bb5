//! Cross-checks against independently computed values.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use irlink_core::controller::{closed_loop_poles, damping_ratio, is_stable};
use irlink_core::dynamics::{energy, step};
use irlink_core::signal_chain::{
    bandpass_sections, design_bandpass, discretize, filter_apply, thd, FilterDesign, Signal,
};
use irlink_core::tf::{group_delay, roots};
use irlink_core::{PdGains, PendulumParams, PendulumState};

fn rod() -> PendulumParams {
    PendulumParams::new(0.2, 0.3, 0.3, 9.8).unwrap()
}

/// Eigenvalues of the companion matrix of `coeffs` (highest power first).
fn companion_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|c| Complex64::new(c.re, c.im))
        .collect()
}

fn assert_same_roots(got: &[Complex64], want: &[Complex64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for w in want {
        let best = got
            .iter()
            .map(|g| (g - w).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= tol * w.norm().max(1.0), "root {w} not found in {got:?}");
    }
}

#[test]
fn polynomial_roots_match_companion_eigenvalues() {
    let cases: [&[f64]; 4] = [
        &[1.0, -6.0, 11.0, -6.0],
        &[2.0, 0.0, 0.0, 0.0, -32.0],
        &[1.0, 3.5, -2.0, 7.0, 1.5, -0.25],
        &[1e-3, 1.0, 250.0, 1e4],
    ];
    for c in cases {
        assert_same_roots(&roots(c), &companion_roots(c), 1e-8);
    }
}

/// Section poles in closed form: double poles at `-1/RC` for the low-pass
/// stages, a quadratic for the Sallen-Key high-pass and `-1/(R5·C5)`.
#[test]
fn bandpass_poles_match_closed_form_section_poles() {
    let d = FilterDesign::default();
    let h = &d.hp;
    let lp1 = -1.0 / (d.lp_stage1.r * d.lp_stage1.c);
    let lp2 = -1.0 / (d.lp_stage2.r * d.lp_stage2.c);
    let (a, b) = (h.r3 * h.r4 * h.c3 * h.c4, h.r3 * (h.c3 + h.c4));
    let disc = Complex64::new(b * b - 4.0 * a, 0.0).sqrt();
    let want = [
        Complex64::from(lp1),
        Complex64::from(lp1),
        Complex64::from(lp2),
        Complex64::from(lp2),
        (-b + disc) / (2.0 * a),
        (-b - disc) / (2.0 * a),
        Complex64::from(-1.0 / (h.r5 * h.c5)),
    ];
    let tf = design_bandpass(&d).unwrap();
    // Double roots are only determined to about sqrt(eps).
    assert_same_roots(&tf.poles(), &want, 1e-6);
}

#[test]
fn closed_loop_poles_match_quadratic_formula() {
    let p = rod();
    let a = p.m * p.l * p.l / 3.0;
    for (kp, kd) in [(1.0, 0.1), (10.0, 0.5), (-0.2, 0.3), (3.0, 2.0)] {
        let c = kp + p.m * p.g * p.l2;
        let disc = Complex64::new(kd * kd - 4.0 * a * c, 0.0).sqrt();
        let want = [(-kd + disc) / (2.0 * a), (-kd - disc) / (2.0 * a)];
        let got = closed_loop_poles(&p, &PdGains { kp, kd });
        assert_same_roots(&got, &want, 1e-10);
        let lhp = want.iter().all(|z| z.re < 0.0);
        assert_eq!(is_stable(&p, &PdGains { kp, kd }), lhp);
    }
}

#[test]
fn damping_ratio_equals_cosine_of_pole_angle() {
    let p = rod();
    for kd in [0.01, 0.05, 0.1, 0.2] {
        let g = PdGains { kp: 2.0, kd };
        let z = damping_ratio(&p, &g).unwrap();
        let pole = closed_loop_poles(&p, &g)[0];
        assert!(pole.im != 0.0);
        let from_angle = -pole.re / pole.norm();
        assert!((z - from_angle).abs() < 1e-12, "kd {kd}: {z} vs {from_angle}");
    }
}

/// Group delay from a centred finite difference of the unwrapped phase of
/// each section, summed.
#[test]
fn group_delay_matches_numerical_phase_derivative() {
    let sections = bandpass_sections(&FilterDesign::default()).unwrap();
    let tf = design_bandpass(&FilterDesign::default()).unwrap();
    for f in [100.0, 1e3, 3e3] {
        let h = 1e-3;
        let w = 2.0 * PI * f;
        let numeric: f64 = sections
            .iter()
            .map(|s| {
                let ph = |w: f64| s.eval(Complex64::new(0.0, w)).arg();
                let mut d = ph(w + h) - ph(w - h);
                if d > PI {
                    d -= 2.0 * PI;
                } else if d < -PI {
                    d += 2.0 * PI;
                }
                -d / (2.0 * h)
            })
            .sum();
        let got = group_delay(&tf, f).unwrap();
        assert!((got - numeric).abs() < 1e-9, "{f} Hz: {got} vs {numeric}");
    }
}

/// Single-bin DFT power summed over a window, as an independent THD.
fn goertzel_thd(x: &[f64], fs: f64, f0: f64) -> f64 {
    let tone = |f: f64| -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in x.iter().enumerate() {
            let ph = 2.0 * PI * f * i as f64 / fs;
            re += v * ph.cos();
            im -= v * ph.sin();
        }
        re * re + im * im
    };
    let p1 = tone(f0);
    let h: f64 = (2..=10).map(|k| tone(k as f64 * f0)).sum();
    (h / p1).sqrt()
}

#[test]
fn thd_matches_direct_dft_for_coherent_harmonics() {
    let fs = 48e3;
    let f0 = 1e3;
    let n = 4800;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (2.0 * PI * f0 * t).sin()
                + 0.1 * (2.0 * PI * 2.0 * f0 * t).sin()
                + 0.03 * (2.0 * PI * 5.0 * f0 * t).cos()
        })
        .collect();
    let want = goertzel_thd(&x, fs, f0);
    assert!((want - (0.01f64 + 0.0009).sqrt()).abs() < 1e-9);
    let got = thd(&Signal::new(x, fs).unwrap(), f0).unwrap();
    assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
}

#[test]
fn digital_filter_steady_state_matches_its_response() {
    let fs = 48e3;
    let tf = design_bandpass(&FilterDesign::default()).unwrap();
    let d = discretize(&tf, fs).unwrap();
    let f = 750.0;
    let n = 48_000;
    let out = filter_apply(&d, &Signal::sine(f, 1.0, fs, n).unwrap()).unwrap();
    let h = d.response(f);
    let tail = &out.samples()[n - 4800..];
    for (k, &y) in tail.iter().enumerate() {
        let i = (n - 4800 + k) as f64;
        let want = h.norm() * (2.0 * PI * f * i / fs + h.arg()).sin();
        assert!((y - want).abs() < 1e-6, "sample {i}: {y} vs {want}");
    }
}

#[test]
fn small_swing_period_matches_linear_theory() {
    let p = rod();
    let w = (3.0 * p.g / (2.0 * p.l)).sqrt();
    let dt = 1e-3;
    let mut s = PendulumState::at_rest(1e-4);
    let e0 = energy(&p, &s);
    let mut crossings = Vec::new();
    for _ in 0..10_000 {
        let next = step(&p, &s, 0.0, dt).unwrap();
        if s.theta > 0.0 && next.theta <= 0.0 {
            crossings.push(s.t + dt * s.theta / (s.theta - next.theta));
        }
        s = next;
    }
    let period = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
    assert!((period - 2.0 * PI / w).abs() < 1e-6 * period);
    assert!((energy(&p, &s) - e0).abs() < 1e-12 * e0.abs());
}
