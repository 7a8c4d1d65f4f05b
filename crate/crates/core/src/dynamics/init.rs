use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeBasis;
use crate::rotation::Quaternion;
use crate::units::BOLTZMANN;
use crate::{Matrix3, Vec3};

use super::{ModeBasisState, Sinusoids};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub temperature: f64,
    pub seed: u64,
    pub state: ModeBasisState,
    /// A⁰_μ and φ_μ consistent with `state`, for the sinusoidal schemes.
    pub sinusoids: Sinusoids,
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Equipartition data at temperature `t_kelvin`: ½kT in each translational
/// and rotational degree of freedom, kT in each mode, x_CM = 0 and R = I.
pub fn init_equipartition(basis: &ModeBasis, t_kelvin: f64, seed: u64) -> Result<InitialData> {
    if !(t_kelvin.is_finite() && t_kelvin >= 0.0) {
        return Err(Error::Invalid(format!("temperature must be non-negative, got {t_kelvin}")));
    }
    if let Some(w) = basis.frequencies.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::Modes(format!("mode frequency {w} is not positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kt = BOLTZMANN * t_kelvin;
    let total = basis.total_mass;

    let v_cm = unit_vector(&mut rng) * (kt / total).sqrt();

    let inertia = basis
        .masses
        .iter()
        .zip(&basis.x0)
        .fold(Matrix3::zeros(), |acc, (m, x)| {
            acc + (Matrix3::identity() * x.norm_squared() - x * x.transpose()) * *m
        });
    let axis = unit_vector(&mut rng);
    let omega = axis * (kt / axis.dot(&(inertia * axis))).sqrt();

    let scale = (2.0 * kt / total).sqrt();
    let k = basis.n_modes();
    let (mut amplitudes, mut rates) = (Vec::with_capacity(k), Vec::with_capacity(k));
    let (mut a0, mut phases) = (Vec::with_capacity(k), Vec::with_capacity(k));
    for w in &basis.frequencies {
        let phi: f64 = rng.random_range(0.0..TAU);
        let (s, c) = phi.sin_cos();
        amplitudes.push(scale / w * s);
        rates.push(scale * c);
        a0.push(scale / w);
        phases.push(phi);
    }

    Ok(InitialData {
        temperature: t_kelvin,
        seed,
        state: ModeBasisState {
            x_cm: Vec3::zeros(),
            v_cm,
            q: Quaternion::IDENTITY,
            omega,
            amplitudes,
            rates,
        },
        sinusoids: Sinusoids {
            amplitudes: a0,
            phases,
        },
    })
}
