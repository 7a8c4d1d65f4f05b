#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modemd::dynamics::{big_delta_x, cartesian_rhs, delta_x, to_cartesian, ModeBasisState, ModeBasisSystem};
use modemd::modes::ModeBasis;
use modemd::simulation::Prepared;
use modemd::{load_molecule, Molecule, PotentialParams, Quaternion, Vec3};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(format!("{name}.toml"))
}

pub fn molecule(name: &str) -> Molecule {
    load_molecule(data_path(name)).expect("shipped molecule file loads")
}

pub fn prepared(name: &str) -> Prepared {
    Prepared::new(molecule(name), PotentialParams::default()).expect("molecule prepares")
}

pub fn random_state(rng: &mut ChaCha8Rng, k: usize) -> ModeBasisState {
    let mut v = || Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let x_cm = v() * 5.0;
    let v_cm = v() * 0.1;
    let omega = v() * 0.05;
    let axis = v();
    let q = Quaternion::from_axis_angle(axis, rng.random_range(0.0..std::f64::consts::TAU));
    ModeBasisState {
        x_cm,
        v_cm,
        q,
        omega,
        amplitudes: (0..k).map(|_| rng.random_range(-0.08..0.08)).collect(),
        rates: (0..k).map(|_| rng.random_range(-0.3..0.3)).collect(),
    }
}

/// Lab-frame atom accelerations implied by a mode-basis derivative:
/// ẍ = a_CM + Ω̇ × Δx + Ω × (Ω × Δx) + 2 Ω × (R ẏ) + R ÿ.
pub fn mapped_accelerations(s: &ModeBasisState, d: &ModeBasisState, basis: &ModeBasis) -> Vec<Vec3> {
    let r = s.q.rotation_matrix();
    let rel = big_delta_x(s, basis);
    let ydot = delta_x(&s.rates, basis);
    let yddot = delta_x(&d.rates, basis);
    rel.iter()
        .zip(ydot.iter().zip(&yddot))
        .map(|(dx, (u, w))| {
            d.v_cm + d.omega.cross(dx) + s.omega.cross(&s.omega.cross(dx)) + s.omega.cross(&(r * u)) * 2.0 + r * w
        })
        .collect()
}

/// Worst relative mismatch, over `count` random C20-like states, between the
/// mode-basis derivative mapped to atom accelerations and the Cartesian RHS.
/// Also checks that position rates are the transformed velocities.
pub fn representation_mismatch(prep: &Prepared, count: usize, seed: u64) -> f64 {
    let basis = &prep.basis;
    let mut sys = ModeBasisSystem::new(&prep.mol, basis, prep.params, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let s = random_state(&mut rng, basis.n_modes());
        let d = sys.derivative(&s).unwrap();
        let oracle = cartesian_rhs(&to_cartesian(&s, basis), &prep.mol, &prep.params).unwrap();
        let mapped = mapped_accelerations(&s, &d, basis);
        let scale = oracle.v.iter().flat_map(|a| a.iter().copied()).fold(0.0f64, |m, c| m.max(c.abs()));
        for (a, b) in mapped.iter().zip(&oracle.v) {
            worst = worst.max((a - b).amax() / scale);
        }
        assert_eq!(d.x_cm, s.v_cm);
        assert_eq!(d.amplitudes, s.rates);
    }
    worst
}
