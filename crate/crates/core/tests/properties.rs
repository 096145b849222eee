use num_complex::Complex64;
use proptest::prelude::*;

use cfsqueeze::config::Format;
use cfsqueeze::feedback::closed_loop_from_gains;
use cfsqueeze::output::{parse_series_json, render_series, rounded};
use cfsqueeze::{
    closed_loop_spectrum, detected_spectrum, loop_gain_alpha, loss_path_beta, open_loop_spectrum,
    oscillation_threshold, sweep_frequency, DetectionParams, FeedbackParams, OpoParams, PumpSign,
    Quadrature, Spacing,
};

fn opo() -> impl Strategy<Value = OpoParams> {
    (0.01..=1.0f64, 0.0..0.5f64, 0.05..5.0f64, 0.0..0.99f64)
        .prop_map(|(t1, l1, l, x)| OpoParams::new(t1, l1, l, x).unwrap())
}

fn feedback() -> impl Strategy<Value = FeedbackParams> {
    (0.01..=1.0f64, 0.0..=1.0f64, 0.0..2.0f64, 0.0..2.0f64)
        .prop_map(|(t2, l2, la, lb)| FeedbackParams::new(t2, l2, la, lb).unwrap())
}

/// Closed-loop setup with the pump at a fraction of the loop threshold.
fn stable_loop() -> impl Strategy<Value = (OpoParams, FeedbackParams)> {
    (opo(), feedback(), 0.0..0.97f64).prop_map(|(op, fb, frac)| {
        let x_star = oscillation_threshold(&op, &fb).unwrap();
        (op.with_x(frac * x_star), fb)
    })
}

fn omega_for(op: &OpoParams, u: f64) -> f64 {
    let r = cfsqueeze::damping_rates(op).unwrap();
    u * 4.0 * r.gamma
}

proptest! {
    #[test]
    fn open_loop_uncertainty(op in opo(), u in 0.0..1.0f64) {
        let w = omega_for(&op, u);
        let p = open_loop_spectrum(&op, w, Quadrature::Plus).unwrap();
        let m = open_loop_spectrum(&op, w, Quadrature::Minus).unwrap();
        prop_assert!(p * m >= 1.0 - 1e-10);
        prop_assert!(m <= 1.0 + 1e-12 && p >= 1.0 - 1e-12);
        if op.l1 == 0.0 {
            prop_assert!((p * m - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn lossless_open_loop_is_pure(mut op in opo(), u in 0.0..1.0f64) {
        op.l1 = 0.0;
        let w = omega_for(&op, u);
        let p = open_loop_spectrum(&op, w, Quadrature::Plus).unwrap();
        let m = open_loop_spectrum(&op, w, Quadrature::Minus).unwrap();
        prop_assert!((p * m - 1.0).abs() < 1e-10 * p.max(1.0));
    }

    #[test]
    fn pump_sign_swaps_closed_loop_quadratures((op, fb) in stable_loop(), u in 0.0..1.0f64) {
        let w = omega_for(&op, u);
        let flipped = op.with_pump_sign(PumpSign::Negative);
        prop_assert_eq!(
            closed_loop_spectrum(&op, &fb, w, Quadrature::Plus).unwrap(),
            closed_loop_spectrum(&flipped, &fb, w, Quadrature::Minus).unwrap()
        );
    }

    #[test]
    fn closed_loop_physicality((op, fb) in stable_loop(), u in 0.0..1.0f64) {
        let w = omega_for(&op, u);
        let p = closed_loop_spectrum(&op, &fb, w, Quadrature::Plus).unwrap();
        let m = closed_loop_spectrum(&op, &fb, w, Quadrature::Minus).unwrap();
        prop_assert!(p >= 0.0 && m >= 0.0);
        prop_assert!(p * m >= 1.0 - 1e-9);
    }

    #[test]
    fn beta_carrier_phase_is_irrelevant((op, fb) in stable_loop(), u in 0.0..1.0f64, phase in 0.0..6.3f64) {
        let w = omega_for(&op, u);
        for q in Quadrature::BOTH {
            let alpha = loop_gain_alpha(&op, &fb, w, q).unwrap();
            let beta = loss_path_beta(&op, &fb, w, q).unwrap();
            let reference = closed_loop_spectrum(&op, &fb, w, q).unwrap();
            let rotated = closed_loop_from_gains(&fb, alpha, beta * Complex64::from_polar(1.0, phase));
            prop_assert!((rotated - reference).abs() <= 1e-12 * reference.max(1.0));
        }
    }

    #[test]
    fn above_threshold_is_refused(op in opo(), fb in feedback(), excess in 1.001..1.5f64) {
        let x_star = oscillation_threshold(&op, &fb).unwrap();
        prop_assume!(x_star < 1.0 && x_star * excess < 1.0);
        let err = closed_loop_spectrum(&op.with_x(x_star * excess), &fb, 0.0, Quadrature::Minus).unwrap_err();
        prop_assert!(err.is_threshold());
    }

    #[test]
    fn detection_contracts_toward_qnl(
        s in 0.0..50.0f64, ds in 0.0..5.0f64, xi in 0.0..=1.0f64, rho in 0.0..=1.0f64,
    ) {
        let det = DetectionParams::new(xi, rho).unwrap();
        let out = detected_spectrum(s, &det).unwrap();
        prop_assert!(((out - 1.0) - det.eta() * (s - 1.0)).abs() < 1e-12 * s.max(1.0));
        prop_assert!(detected_spectrum(s + ds, &det).unwrap() >= out);
    }

    #[test]
    fn json_series_round_trip((op, fb) in stable_loop(), n in 2usize..20) {
        let series = sweep_frequency(&op, &fb, 1.0e4, 2.0e7, n, Spacing::Log, None).unwrap();
        let text = render_series(&series, &[], Format::Json);
        let (back, _) = parse_series_json(&text).unwrap();
        prop_assert_eq!(back, rounded(&series));
    }
}
