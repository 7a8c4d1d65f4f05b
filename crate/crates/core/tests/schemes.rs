mod common;

use modemd::diagnostics::{conserved_quantities, conserved_with_offset, error_metrics, EnergyGauge};
use modemd::dynamics::{
    init_equipartition, largescale_rhs, prescribed_amplitudes, to_cartesian, ModeBasisState, ModeBasisSystem,
    Scheme, SchemeKind,
};
use modemd::integrator::{integrate, IntegratorConfig};
use modemd::simulation::{compare, drift_series, run, RunSpec};
use modemd::units::BOLTZMANN;
use modemd::{CartesianState, Matrix3, Quaternion, Vec3};

#[test]
fn equipartition_puts_kt_in_every_mode() {
    let prep = common::prepared("c20");
    let b = &prep.basis;
    let init = prep.initial_data(300.0, 42).unwrap();
    let kt = BOLTZMANN * 300.0;
    let m = b.total_mass;
    let s = &init.state;
    for ((a, da), w) in s.amplitudes.iter().zip(&s.rates).zip(&b.frequencies) {
        let e = 0.5 * m * da * da + 0.5 * m * w * w * a * a;
        assert!((e - kt).abs() < 1e-12 * kt);
    }
    assert!((0.5 * m * s.v_cm.norm_squared() - 0.5 * kt).abs() < 1e-12 * kt);
    let inertia = b.masses.iter().zip(&b.x0).fold(Matrix3::zeros(), |acc, (m, x)| {
        acc + (Matrix3::identity() * x.norm_squared() - x * x.transpose()) * *m
    });
    assert!((0.5 * s.omega.dot(&(inertia * s.omega)) - 0.5 * kt).abs() < 1e-12 * kt);
    assert_eq!(s.q, Quaternion::IDENTITY);
    assert_eq!(s.x_cm, Vec3::zeros());
}

#[test]
fn initial_data_is_seed_deterministic() {
    let prep = common::prepared("c20");
    let a = prep.initial_data(300.0, 7).unwrap();
    assert_eq!(a, prep.initial_data(300.0, 7).unwrap());
    assert_ne!(a.state, prep.initial_data(300.0, 8).unwrap().state);
}

#[test]
fn zero_temperature_is_rest_and_negative_is_rejected() {
    let prep = common::prepared("c20");
    let s = prep.initial_data(0.0, 1).unwrap().state;
    assert!(s.amplitudes.iter().chain(&s.rates).all(|v| *v == 0.0));
    assert_eq!((s.v_cm, s.omega), (Vec3::zeros(), Vec3::zeros()));
    assert!(init_equipartition(&prep.basis, -1.0, 1).is_err());
}

#[test]
fn sinusoidal_amplitudes_are_harmonic() {
    let prep = common::prepared("c20");
    let init = prep.initial_data(300.0, 3).unwrap();
    let scheme = Scheme::new(SchemeKind::Sma, &init);
    let (a0, da0) = prescribed_amplitudes(&scheme, 0.0, &prep.basis).unwrap();
    assert!(a0.iter().zip(&init.state.amplitudes).all(|(x, y)| (x - y).abs() < 1e-15));
    assert!(da0.iter().zip(&init.state.rates).all(|(x, y)| (x - y).abs() < 1e-15));
    let (t, h) = (3.7, 1e-4);
    let (_, dp) = prescribed_amplitudes(&scheme, t + h, &prep.basis).unwrap();
    let (_, dm) = prescribed_amplitudes(&scheme, t - h, &prep.basis).unwrap();
    let (a, _) = prescribed_amplitudes(&scheme, t, &prep.basis).unwrap();
    for mu in 0..a.len() {
        let acc = (dp[mu] - dm[mu]) / (2.0 * h);
        let w2 = prep.basis.frequencies[mu].powi(2);
        assert!((acc + w2 * a[mu]).abs() < 1e-6 * w2 * init.sinusoids.amplitudes[mu]);
    }
    let (z, dz) = prescribed_amplitudes(&Scheme::Zma, t, &prep.basis).unwrap();
    assert!(z.iter().chain(&dz).all(|v| *v == 0.0));
    assert!(prescribed_amplitudes(&Scheme::ExactModeBasis, t, &prep.basis).is_err());
}

#[test]
fn rigid_schemes_at_rest_are_stationary() {
    let prep = common::prepared("c20");
    let init = prep.initial_data(0.0, 1).unwrap();
    let mut y = init.state.reduced_flat();
    y[3..6].copy_from_slice(&[0.1, 0.0, -0.2]);
    for kind in [SchemeKind::Zma, SchemeKind::Mczma] {
        let dy = largescale_rhs(&y, &Scheme::new(kind, &init), &prep.basis, &prep.mol, &prep.params, 0.0, 1.0).unwrap();
        assert_eq!(&dy[0..3], &y[3..6]);
        assert!(dy[3..].iter().all(|v| v.abs() < 1e-12), "{kind}: {dy:?}");
    }
}

#[test]
fn zma_from_rest_stays_at_rest() {
    let prep = common::prepared("c20");
    let init = prep.initial_data(0.0, 1).unwrap();
    let out = run(&prep, &init, &RunSpec::new(SchemeKind::Zma, 20.0, 5.0, 1e-10)).unwrap();
    for s in &out.snapshots {
        for (x, x0) in s.cartesian.x.iter().zip(&prep.basis.x0) {
            assert!((x - x0).amax() < 1e-9);
        }
        assert!(s.cartesian.v.iter().all(|v| v.amax() < 1e-12));
    }
}

#[test]
fn mczma_conserves_angular_momentum() {
    let prep = common::prepared("c20");
    let init = prep.initial_data(300.0, 5).unwrap();
    let out = run(&prep, &init, &RunSpec::new(SchemeKind::Mczma, 20.0, 2.0, 1e-12)).unwrap();
    for d in drift_series(&out) {
        assert!(d.angular_momentum.value < 1e-10, "{:e}", d.angular_momentum.value);
        assert!(d.energy.value < 1e-10);
    }
}

/// With zero amplitudes both rigid-body schemes reduce to Euler's equations,
/// so their trajectories differ only by integration error.
#[test]
fn zma_and_mczma_agree_on_short_runs() {
    let prep = common::prepared("c20");
    let init = prep.initial_data(300.0, 5).unwrap();
    let a = run(&prep, &init, &RunSpec::new(SchemeKind::Zma, 20.0, 2.0, 1e-12)).unwrap();
    let b = run(&prep, &init, &RunSpec::new(SchemeKind::Mczma, 20.0, 2.0, 1e-12)).unwrap();
    let worst = compare(&a, &b, &prep.mol.masses)
        .unwrap()
        .iter()
        .map(|r| r.reference.e_q.unwrap().max(r.reference.e_x))
        .fold(0.0, f64::max);
    eprintln!("ZMA vs MCZMA worst deviation over 20 ps: {worst:.3e}");
    assert!(worst < 1e-8, "{worst:e}");
}

/// C = |q|² − 1 obeys dC/dt = −η(C + 1)C when Ω = 0, so u = C/(C + 1) decays as e^{−ηt}.
#[test]
fn quaternion_constraint_decays_in_closed_form() {
    let prep = common::prepared("c20");
    let k = prep.basis.n_modes();
    let c0: f64 = 0.1;
    let state = ModeBasisState {
        x_cm: Vec3::zeros(),
        v_cm: Vec3::zeros(),
        q: Quaternion([(1.0 + c0).sqrt(), 0.0, 0.0, 0.0]),
        omega: Vec3::zeros(),
        amplitudes: vec![0.0; k],
        rates: vec![0.0; k],
    };
    for eta in [0.5, 2.0] {
        let mut sys = ModeBasisSystem::new(&prep.mol, &prep.basis, prep.params, eta);
        let traj = integrate(|t, y, dy| sys.rhs(t, y, dy), &state.to_flat(), 8.0, 0.5, &IntegratorConfig::with_eps(1e-12))
            .unwrap();
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let c = Quaternion([y[6], y[7], y[8], y[9]]).constraint();
            let decay = (-eta * t).exp();
            let exact = c0 * decay / (1.0 + c0 * (1.0 - decay));
            assert!((c - exact).abs() < 1e-9, "eta {eta}, t {t}: {c} vs {exact}");
        }
    }
}

#[test]
fn internal_kinetic_energy_is_sum_over_modes() {
    let prep = common::prepared("c20");
    let mut s = prep.initial_data(300.0, 9).unwrap().state;
    s.v_cm = Vec3::zeros();
    s.omega = Vec3::zeros();
    s.q = Quaternion::from_axis_angle(Vec3::new(0.3, -1.0, 0.2), 1.1);
    let cart = to_cartesian(&s, &prep.basis);
    let lab: f64 = cart.v.iter().zip(&prep.mol.masses).map(|(v, m)| 0.5 * m * v.norm_squared()).sum();
    let modal: f64 = 0.5 * prep.basis.total_mass * s.rates.iter().map(|r| r * r).sum::<f64>();
    assert!((lab - modal).abs() < 1e-12 * modal);
}

fn rest_state(prep: &modemd::simulation::Prepared) -> CartesianState {
    CartesianState {
        x: prep.basis.x0.clone(),
        v: vec![Vec3::zeros(); prep.basis.n_atoms()],
    }
}

#[test]
fn conserved_quantities_at_rest_and_gauges() {
    let mut prep = common::prepared("c20");
    let s = rest_state(&prep);
    let abs = conserved_quantities(&s, &prep.mol, &prep.params).unwrap();
    assert!((abs.energy - prep.u_eq).abs() < 1e-12 * prep.u_eq);
    assert_eq!(abs.momentum, Vec3::zeros());
    assert_eq!(abs.angular_momentum, Vec3::zeros());
    assert_eq!(prep.conserved(&s).unwrap().energy, abs.energy);
    prep.gauge = EnergyGauge::Equilibrium;
    assert!(prep.conserved(&s).unwrap().energy.abs() < 1e-12);
    assert_eq!("equilibrium".parse::<EnergyGauge>().unwrap(), EnergyGauge::Equilibrium);
    assert!("zero".parse::<EnergyGauge>().is_err());
}

#[test]
fn rigid_rotation_and_boost_momenta() {
    let prep = common::prepared("c20");
    let mut s = rest_state(&prep);
    let w = 0.02;
    let omega = Vec3::new(0.0, 0.0, w);
    s.v = s.x.iter().map(|x| omega.cross(x)).collect();
    let c = conserved_with_offset(&s, &prep.mol, &prep.params, 0.0).unwrap();
    let expect: f64 = s.x.iter().zip(&prep.mol.masses).map(|(x, m)| m * (x.x * x.x + x.y * x.y)).sum::<f64>() * w;
    assert!((c.angular_momentum.z - expect).abs() < 1e-12 * expect);
    assert!(c.momentum.amax() < 1e-12);

    let boost = Vec3::new(0.1, -0.3, 0.05);
    let mut moved = s.clone();
    moved.v.iter_mut().for_each(|v| *v += boost);
    let d = conserved_with_offset(&moved, &prep.mol, &prep.params, 0.0).unwrap();
    assert!((d.momentum - c.momentum - boost * prep.mol.total_mass()).amax() < 1e-12);
    assert!((d.angular_momentum - c.angular_momentum).amax() < 1e-12);
}

#[test]
fn reference_metrics_vanish_against_self() {
    let prep = common::prepared("c20");
    let init = prep.initial_data(300.0, 2).unwrap();
    let out = run(&prep, &init, &RunSpec::new(SchemeKind::Sma, 2.0, 1.0, 1e-8)).unwrap();
    for row in compare(&out, &out, &prep.mol.masses).unwrap() {
        let r = row.reference;
        assert_eq!((r.e_x, r.e_xcm, r.e_vcm, r.e_omega, r.e_q), (0.0, 0.0, 0.0, Some(0.0), Some(0.0)));
    }
    let s = &out.snapshots[1];
    let m = error_metrics(&s.cartesian, None, &s.cartesian, s.orientation.as_ref(), &prep.mol.masses);
    assert!(m.e_q.is_none());
    let other = run(&prep, &init, &RunSpec::new(SchemeKind::Sma, 3.0, 1.0, 1e-8)).unwrap();
    assert!(compare(&other, &out, &prep.mol.masses).is_err());
}

#[test]
fn every_scheme_starts_from_the_same_cartesian_image() {
    let prep = common::prepared("c20");
    let init = prep.initial_data(300.0, 4).unwrap();
    let first: Vec<CartesianState> = SchemeKind::ALL
        .iter()
        .map(|k| run(&prep, &init, &RunSpec::new(*k, 0.5, 0.5, 1e-8)).unwrap().snapshots[0].cartesian.clone())
        .collect();
    for (k, s) in SchemeKind::ALL.iter().zip(&first) {
        let zero_amplitude = matches!(k, SchemeKind::Zma | SchemeKind::Mczma);
        if !zero_amplitude {
            assert_eq!(s, &first[0], "{k}");
        }
    }
}
