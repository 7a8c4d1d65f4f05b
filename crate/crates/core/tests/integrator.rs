use modemd::integrator::{integrate, integrate_with, next_step, step_once, IntegratorConfig};
use modemd::Error;
use proptest::prelude::*;

fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) -> modemd::Result<()> {
    dy[0] = y[1];
    dy[1] = -y[0];
    Ok(())
}

#[test]
fn zero_field_leaves_state_unchanged() {
    let y0 = [1.5, -2.0, 0.25];
    let traj = integrate(
        |_, _, dy| {
            dy.fill(0.0);
            Ok(())
        },
        &y0,
        10.0,
        1.0,
        &IntegratorConfig::with_eps(1e-10),
    )
    .unwrap();
    assert_eq!(traj.times.len(), 11);
    assert!(traj.states.iter().all(|y| y == &y0));
}

#[test]
fn exponential_growth_reaches_e() {
    let traj = integrate(
        |_, y, dy| {
            dy[0] = y[0];
            Ok(())
        },
        &[1.0],
        1.0,
        1.0,
        &IntegratorConfig::with_eps(1e-12),
    )
    .unwrap();
    let end = traj.states.last().unwrap()[0];
    assert!((end - std::f64::consts::E).abs() < 1e-11, "{end}");
}

#[test]
fn oscillator_returns_after_one_period() {
    let period = std::f64::consts::TAU;
    let traj = integrate(oscillator, &[1.0, 0.0], period, period, &IntegratorConfig::with_eps(1e-10)).unwrap();
    let y = traj.states.last().unwrap();
    assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8, "{y:?}");
}

/// The 8th-order weights integrate polynomials of degree ≤ 7 in t exactly.
#[test]
fn quadrature_of_degree_seven_polynomial_is_exact() {
    let p = |t: f64| 3.0 * t.powi(7) - 2.0 * t.powi(4) + t - 5.0;
    let antiderivative = |t: f64| 3.0 / 8.0 * t.powi(8) - 0.4 * t.powi(5) + 0.5 * t * t - 5.0 * t;
    let cfg = IntegratorConfig {
        h_init: 0.5,
        ..IntegratorConfig::with_eps(1e-3)
    };
    let out = step_once(
        |t, _, dy| {
            dy[0] = p(t);
            Ok(())
        },
        &[0.0],
        0.0,
        0.5,
        &cfg,
    )
    .unwrap();
    let d = (out.y_new[0] - antiderivative(0.5)).abs();
    assert!(d < 1e-14, "{d:e}");
}

#[test]
fn controller_factors() {
    assert!((next_step(2.0, 1.0, 0.9) - 1.8).abs() < 1e-15);
    assert_eq!(next_step(2.0, 0.0, 0.9), 10.0);
    assert_eq!(next_step(2.0, 1e-30, 0.9), 10.0);
    assert_eq!(next_step(2.0, 1e30, 0.9), 0.4);
    // err = 2^8 halves the step before the safety factor
    assert!((next_step(1.0, 256.0, 1.0) - 0.5).abs() < 1e-15);
}

#[test]
fn oversized_step_is_rejected_and_shrunk() {
    let cfg = IntegratorConfig::with_eps(1e-12);
    let out = step_once(
        |_, y, dy| {
            dy[0] = -50.0 * y[0];
            Ok(())
        },
        &[1.0],
        0.0,
        1.0,
        &cfg,
    )
    .unwrap();
    assert!(!out.accepted && out.err > 1.0);
    assert!(out.h_next < 1.0);
}

#[test]
fn samples_land_exactly_on_output_times() {
    let dt = 0.37;
    let traj = integrate(oscillator, &[1.0, 0.0], 10.0, dt, &IntegratorConfig::with_eps(1e-9)).unwrap();
    assert_eq!(traj.times[0], 0.0);
    for (k, t) in traj.times.iter().enumerate().take(traj.times.len() - 1) {
        assert_eq!(*t, k as f64 * dt);
    }
    assert_eq!(*traj.times.last().unwrap(), 10.0);
    assert!(traj.stats.accepted > 0);
    // 12 evaluations per accepted and per rejected step, plus landings and the first.
    assert!(traj.stats.rhs_evals >= 11 * (traj.stats.accepted + traj.stats.rejected));
}

#[test]
fn runs_are_bitwise_deterministic() {
    let cfg = IntegratorConfig::with_eps(1e-11);
    let a = integrate(oscillator, &[0.3, 0.9], 50.0, 1.0, &cfg).unwrap();
    let b = integrate(oscillator, &[0.3, 0.9], 50.0, 1.0, &cfg).unwrap();
    assert_eq!(a.states, b.states);
    assert_eq!(a.stats, b.stats);
}

#[test]
fn sample_hook_changes_the_continued_state() {
    let cfg = IntegratorConfig::with_eps(1e-10);
    let traj = integrate_with(
        |_, _, dy| {
            dy[0] = 1.0;
            Ok(())
        },
        |y| {
            y[0] = 0.0;
            Ok(())
        },
        &[0.0],
        3.0,
        1.0,
        &cfg,
    )
    .unwrap();
    assert!(traj.states.iter().all(|y| y[0] == 0.0));
}

#[test]
fn non_finite_derivative_is_an_error() {
    let err = integrate(
        |t, _, dy| {
            dy[0] = if t > 0.5 { f64::NAN } else { 1.0 };
            Ok(())
        },
        &[0.0],
        1.0,
        1.0,
        &IntegratorConfig::with_eps(1e-8),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Integration { .. }), "{err}");
}

#[test]
fn invalid_configuration_is_rejected() {
    for eps in [0.0, -1e-8, 1e-2, f64::NAN] {
        let cfg = IntegratorConfig::with_eps(eps);
        assert!(matches!(integrate(oscillator, &[1.0, 0.0], 1.0, 1.0, &cfg), Err(Error::Invalid(_))));
    }
    let cfg = IntegratorConfig::with_eps(1e-8);
    assert!(integrate(oscillator, &[1.0, 0.0], 0.0, 1.0, &cfg).is_err());
    assert!(integrate(oscillator, &[1.0, 0.0], 1.0, -1.0, &cfg).is_err());
}

#[test]
fn step_limit_is_enforced() {
    let cfg = IntegratorConfig {
        max_steps: 5,
        ..IntegratorConfig::with_eps(1e-12)
    };
    let err = integrate(oscillator, &[1.0, 0.0], 100.0, 100.0, &cfg).unwrap_err();
    assert!(matches!(err, Error::Integration { .. }));
}

/// Endpoint error after ten periods against cos/sin, for each tolerance.
fn oscillator_endpoint_errors(eps: &[f64]) -> Vec<f64> {
    let t_end = 10.0 * std::f64::consts::TAU + 1.0;
    eps.iter()
        .map(|&e| {
            let traj = integrate(oscillator, &[1.0, 0.0], t_end, t_end, &IntegratorConfig::with_eps(e)).unwrap();
            let y = traj.states.last().unwrap();
            ((y[0] - t_end.cos()).powi(2) + (y[1] + t_end.sin()).powi(2)).sqrt()
        })
        .collect()
}

#[test]
fn endpoint_error_tracks_tolerance() {
    let eps = [1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12];
    let errs = oscillator_endpoint_errors(&eps);
    let pts: Vec<(f64, f64)> = eps.iter().zip(&errs).map(|(e, r)| (e.ln(), r.ln())).collect();
    let slope = modemd::diagnostics::least_squares_slope(&pts);
    assert!((slope - 1.0).abs() <= 0.2, "slope {slope}, errors {errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_decay_matches_closed_form(lambda in -2.0f64..2.0, y0 in -3.0f64..3.0) {
        let traj = integrate(
            |_, y, dy| {
                dy[0] = lambda * y[0];
                Ok(())
            },
            &[y0],
            2.0,
            0.5,
            &IntegratorConfig::with_eps(1e-11),
        )
        .unwrap();
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let exact = y0 * (lambda * t).exp();
            prop_assert!((y[0] - exact).abs() < 1e-9 * (1.0 + exact.abs()));
        }
    }
}
