//! Invariants checked over random inputs.

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use irlink_core::actuator::{applied_force, force_to_duty};
use irlink_core::controller::{closed_loop_poles, damping_ratio, is_stable};
use irlink_core::dynamics::{energy, step};
use irlink_core::scenario::{classify_audio, AudioThresholds};
use irlink_core::signal_chain::{
    beam_gain, combined_misalignment, design_bandpass, discretize_with, FilterDesign, Prewarp,
    Signal,
};
use irlink_core::{ExperimentConfig, MotorParams, PdGains, PendulumParams, PendulumState};

fn rod() -> PendulumParams {
    PendulumParams::new(0.2, 0.3, 0.3, 9.8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn undamped_free_swing_conserves_energy(theta0 in -3.0f64..3.0, omega0 in -5.0f64..5.0) {
        let p = rod();
        let mut s = PendulumState { theta: theta0, omega: omega0, t: 0.0 };
        let e0 = energy(&p, &s);
        let scale = p.m * p.g * p.l2 + 0.5 * p.inertia() * omega0 * omega0;
        for _ in 0..1000 {
            s = step(&p, &s, 0.0, 1e-3).unwrap();
        }
        prop_assert!((energy(&p, &s) - e0).abs() <= 1e-6 * scale);
    }

    #[test]
    fn beam_gain_is_bounded_and_falls_with_angle(
        a in 0.0f64..FRAC_PI_2,
        b in 0.0f64..FRAC_PI_2,
        m in 0.5f64..5000.0,
    ) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let g_lo = beam_gain(lo, m);
        let g_hi = beam_gain(hi, m);
        prop_assert!((0.0..=1.0).contains(&g_lo));
        prop_assert!((0.0..=1.0).contains(&g_hi));
        prop_assert!(g_hi <= g_lo);
        prop_assert_eq!(beam_gain(-a, m), beam_gain(a, m));
    }

    #[test]
    fn combined_misalignment_dominates_each_axis(
        a in -FRAC_PI_2..FRAC_PI_2,
        b in -FRAC_PI_2..FRAC_PI_2,
    ) {
        let c = combined_misalignment(a, b);
        prop_assert!(c + 1e-7 >= a.abs().max(b.abs()));
        prop_assert!(c <= PI);
        prop_assert!((combined_misalignment(a, 0.0) - a.abs()).abs() < 1e-7);
    }

    #[test]
    fn stability_predicate_agrees_with_pole_locations(kp in -5.0f64..50.0, kd in -5.0f64..20.0) {
        let p = rod();
        let g = PdGains { kp, kd };
        let poles = closed_loop_poles(&p, &g);
        let lhp = poles.iter().all(|z| z.re < 0.0);
        let margin = poles.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(is_stable(&p, &g), lhp);
        if let Some(z) = damping_ratio(&p, &g) {
            prop_assert_eq!(z > 0.0, lhp);
        }
    }

    #[test]
    fn discretized_poles_lie_inside_unit_circle(
        fs in 48e3f64..192e3,
        scale in 0.5f64..2.0,
        warp in prop_oneof![Just(Prewarp::None), Just(Prewarp::SectionCorner), Just(Prewarp::SectionMinimax)],
    ) {
        let mut d = FilterDesign::default();
        d.hp.r5 *= scale;
        d.lp_stage2.c *= scale;
        let tf = design_bandpass(&d).unwrap();
        let digital = discretize_with(&tf, fs, warp).unwrap();
        for z in digital.poles() {
            prop_assert!(z.norm() < 1.0, "pole {} at fs {}", z, fs);
        }
    }

    #[test]
    fn duty_never_exceeds_the_cap(force in -10.0f64..10.0, cap in 0.1f64..1.0) {
        let mut mp = MotorParams::new(7.4, 0.0275).unwrap();
        mp.max_duty = cap;
        let duty = force_to_duty(force, &mp);
        prop_assert!(duty.abs() <= cap);
        prop_assert!(applied_force(duty, &mp).unwrap().abs() <= mp.max_force() + 1e-12);
    }

    #[test]
    fn config_render_parses_back_identically(
        kp in -1e3f64..1e3,
        kd in 0.0f64..50.0,
        seed in any::<u64>(),
        angles in prop::collection::vec(-30.0f64..30.0, 1..6),
        on in any::<bool>(),
    ) {
        let mut cfg = ExperimentConfig::default();
        cfg.kp = kp;
        cfg.kd = kd;
        cfg.seed = seed;
        cfg.sweep_angles_deg = angles;
        cfg.controller_on = on;
        let back = ExperimentConfig::parse(&cfg.render()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn audio_classification_ignores_receiver_gain(k in 0.01f64..100.0, noise in 0.0f64..0.5) {
        let fs = 8e3;
        let n = 8000;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 440.0 * i as f64 / fs).sin())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v + noise * (2.0 * PI * 1234.5 * i as f64 / fs).sin())
            .collect();
        let input = Signal::new(x, fs).unwrap();
        let base = Signal::new(y.clone(), fs).unwrap();
        let scaled = Signal::new(y.iter().map(|v| k * v).collect(), fs).unwrap();
        let th = AudioThresholds::default();
        let a = classify_audio(&input, &base, &th).unwrap();
        let b = classify_audio(&input, &scaled, &th).unwrap();
        prop_assert_eq!(a.classification, b.classification);
        prop_assert_eq!(a.lag, b.lag);
        prop_assert!((a.dropout_fraction - b.dropout_fraction).abs() < 1e-12);
        prop_assert!((a.snr_db - b.snr_db).abs() < 1e-6);
    }
}
