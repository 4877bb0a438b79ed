use std::f64::consts::PI;

use deeptherm_core::noise::{
    calibrate_from_t2star, sample_trajectory, CalibrationOptions, NoiseKind, NoiseSpec, RamseyEnsemble, RamseyOptions,
    DEFAULT_HARMONICS,
};
use deeptherm_core::Execution;
use proptest::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Two-sided power of `x` (sampled at `dt`) in `f1 ≤ |f| ≤ f2`, via Parseval.
fn band_power(x: &[f64], dt: f64, f1: f64, f2: f64) -> f64 {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * dt);
    let mut total = 0.0;
    for (k, z) in buf.iter().enumerate().take(n / 2).skip(1) {
        let f = k as f64 * df;
        if f >= f1 && f <= f2 {
            total += 2.0 * z.norm_sqr();
        }
    }
    total / (n as f64 * n as f64)
}

#[test]
fn white_periodogram_is_flat_at_w() {
    let w = 2.0e6;
    let dt = 1e-9;
    let n = 1 << 14;
    let spec = NoiseSpec::uniform(NoiseKind::White, 1, w).unwrap();
    let bands = [(1e6, 1e7), (1e7, 1e8), (1e8, 4e8)];
    let mut measured = [0.0; 3];
    let reps = 40;
    for r in 0..reps {
        let traj = sample_trajectory(&spec, dt, n as f64 * dt, 100 + r).unwrap();
        let x = traj.site_series(0);
        for (m, &(f1, f2)) in measured.iter_mut().zip(&bands) {
            *m += band_power(&x, dt, f1, f2) / reps as f64;
        }
    }
    for (m, (f1, f2)) in measured.iter().zip(bands) {
        let expected = 2.0 * w * (f2 - f1);
        assert!((m / expected - 1.0).abs() < 0.05, "band {f1:e}-{f2:e}: {m:e} vs {expected:e}");
    }
}

#[test]
fn one_over_f_carries_equal_power_per_decade() {
    let a = 1e11;
    let kind = NoiseKind::OneOverF { low_cut_hz: 1e4, high_cut_hz: 1e8 };
    let spec = NoiseSpec { kind, strengths: vec![a], white_high_cut_hz: 1e9, harmonics: DEFAULT_HARMONICS };
    let dt = 1e-9;
    let n = 1 << 17;
    let traj = sample_trajectory(&spec, dt, n as f64 * dt, 9).unwrap();
    let x = traj.site_series(0);
    // ∫ over ±[f1, f2] of A/|ω| dω/2π = A ln(f2/f1)/π
    let expected = a * 10f64.ln() / PI;
    for (f1, f2) in [(1e5, 1e6), (1e6, 1e7), (1e7, 1e8 * 0.999)] {
        let p = band_power(&x, dt, f1, f2);
        assert!((p / expected - 1.0).abs() < 0.1, "decade {f1:e}: {p:e} vs {expected:e}");
    }
    let total: f64 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let band = a * (1e8f64 / 1e4).ln() / PI;
    assert!(total < 1.25 * band, "{total:e} vs {band:e}");
}

#[test]
fn white_ramsey_decay_matches_closed_form() {
    let w = 2.0e6;
    let opts = RamseyOptions { trajectories: 4000, grid_points: 60, seed: 3, harmonics: DEFAULT_HARMONICS };
    let ens = RamseyEnsemble::simulate(NoiseKind::White, 3e-6, &opts, Execution::Serial).unwrap();
    for (t, c) in ens.times().iter().zip(ens.coherence(w)) {
        let exact = (-w * t / 2.0).exp();
        assert!((c - exact).abs() < 4.0 / (opts.trajectories as f64).sqrt(), "t={t:e}: {c} vs {exact}");
    }
}

#[test]
fn calibration_is_monotone_in_target() {
    let opts = CalibrationOptions {
        ramsey: RamseyOptions { trajectories: 1000, grid_points: 100, ..Default::default() },
        ..Default::default()
    };
    for kind in [NoiseKind::White, NoiseKind::one_over_f_default()] {
        let fast = calibrate_from_t2star(kind, 0.5e-6, 2e-6, &opts, Execution::Serial).unwrap();
        let slow = calibrate_from_t2star(kind, 2e-6, 8e-6, &opts, Execution::Serial).unwrap();
        assert!(fast > slow, "{}: {fast:e} <= {slow:e}", kind.label());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectories_scale_with_sqrt_strength(s in 1e3f64..1e8, seed in any::<u64>(), white in any::<bool>()) {
        let kind = if white { NoiseKind::White } else { NoiseKind::one_over_f_default() };
        let unit = sample_trajectory(&NoiseSpec::uniform(kind, 2, 1.0).unwrap(), 1e-9, 2e-8, seed).unwrap();
        let scaled = sample_trajectory(&NoiseSpec::uniform(kind, 2, s).unwrap(), 1e-9, 2e-8, seed).unwrap();
        for k in 0..unit.n_steps() {
            for (u, v) in unit.step_samples(k).iter().zip(scaled.step_samples(k)) {
                prop_assert!((v - u * s.sqrt()).abs() <= 1e-9 * (u * s.sqrt()).abs().max(1.0));
            }
        }
    }

    #[test]
    fn trajectory_covers_span(dt_ps in 10u32..1000, span_ns in 1u32..200) {
        let dt = dt_ps as f64 * 1e-12;
        let span = span_ns as f64 * 1e-9;
        let traj = sample_trajectory(&NoiseSpec::uniform(NoiseKind::White, 1, 1.0).unwrap(), dt, span, 0).unwrap();
        prop_assert!(traj.n_steps() as f64 * dt >= span * (1.0 - 1e-9));
        prop_assert!((traj.n_steps() as f64 - 1.0) * dt < span);
    }
}
