//! Right-hand sides for the exact Cartesian and mode-basis equations of
//! motion and for the large-scale approximations, plus the transforms between
//! representations and the equipartition initial data.
//!
//! Flat state layouts used by the integrator:
//! - Cartesian: `[x (3N), v (3N)]`
//! - mode basis: `[x_CM (3), v_CM (3), q (4), Ω (3), A (K), dA/dt (K)]`
//! - reduced (large-scale schemes): `[x_CM (3), v_CM (3), q (4), Ω (3)]`
//!
//! Ω is the lab-frame angular velocity, dR/dt = Ω × R.

mod exact;
mod init;
mod largescale;

pub use exact::{cartesian_rhs, CartesianSystem, ModeBasisSystem};
pub use init::{init_equipartition, InitialData};
pub use largescale::{largescale_rhs, LargeScaleSystem};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeBasis;
use crate::rotation::Quaternion;
use crate::{Matrix3, Vec3};

/// Length of the reduced large-scale state.
pub const REDUCED_DIM: usize = 13;

/// Largest condition number accepted for the 3×3 rotational solves.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianState {
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
}

impl CartesianState {
    pub fn to_flat(&self) -> Vec<f64> {
        self.x.iter().chain(&self.v).flat_map(|p| [p.x, p.y, p.z]).collect()
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 6;
        let read = |s: &[f64]| s.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        CartesianState {
            x: read(&y[..3 * n]),
            v: read(&y[3 * n..6 * n]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBasisState {
    pub x_cm: Vec3,
    pub v_cm: Vec3,
    pub q: Quaternion,
    pub omega: Vec3,
    pub amplitudes: Vec<f64>,
    pub rates: Vec<f64>,
}

fn read3(y: &[f64], at: usize) -> Vec3 {
    Vec3::new(y[at], y[at + 1], y[at + 2])
}

impl ModeBasisState {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = self.reduced_flat();
        y.extend_from_slice(&self.amplitudes);
        y.extend_from_slice(&self.rates);
        y
    }

    /// The 13 macroscopic components.
    pub fn reduced_flat(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(REDUCED_DIM + 2 * self.amplitudes.len());
        y.extend_from_slice(self.x_cm.as_slice());
        y.extend_from_slice(self.v_cm.as_slice());
        y.extend_from_slice(&self.q.0);
        y.extend_from_slice(self.omega.as_slice());
        y
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let k = (y.len() - REDUCED_DIM) / 2;
        let mut s = Self::from_reduced(&y[..REDUCED_DIM], vec![0.0; k], vec![0.0; k]);
        s.amplitudes.copy_from_slice(&y[REDUCED_DIM..REDUCED_DIM + k]);
        s.rates.copy_from_slice(&y[REDUCED_DIM + k..REDUCED_DIM + 2 * k]);
        s
    }

    pub fn from_reduced(y: &[f64], amplitudes: Vec<f64>, rates: Vec<f64>) -> Self {
        ModeBasisState {
            x_cm: read3(y, 0),
            v_cm: read3(y, 3),
            q: Quaternion([y[6], y[7], y[8], y[9]]),
            omega: read3(y, 10),
            amplitudes,
            rates,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    ExactCartesian,
    ExactModeBasis,
    Sma,
    Zma,
    Mcsma,
    Mczma,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::ExactCartesian,
        SchemeKind::ExactModeBasis,
        SchemeKind::Sma,
        SchemeKind::Zma,
        SchemeKind::Mcsma,
        SchemeKind::Mczma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::ExactCartesian => "exact-cartesian",
            SchemeKind::ExactModeBasis => "exact-mode-basis",
            SchemeKind::Sma => "sma",
            SchemeKind::Zma => "zma",
            SchemeKind::Mcsma => "mcsma",
            SchemeKind::Mczma => "mczma",
        }
    }

    pub fn is_large_scale(self) -> bool {
        !matches!(self, SchemeKind::ExactCartesian | SchemeKind::ExactModeBasis)
    }

    pub fn is_momentum_conserving(self) -> bool {
        matches!(self, SchemeKind::Mcsma | SchemeKind::Mczma)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = SchemeKind::ALL.iter().map(|k| k.name()).collect();
                Error::Invalid(format!("unknown scheme {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Per-mode constants of the sinusoidal approximation A = A⁰ sin(ωt + φ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sinusoids {
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    ExactCartesian,
    ExactModeBasis,
    Sma(Sinusoids),
    Zma,
    Mcsma(Sinusoids),
    Mczma,
}

impl Scheme {
    /// Builds the scheme; sinusoidal schemes take their constants from `init`.
    pub fn new(kind: SchemeKind, init: &InitialData) -> Self {
        match kind {
            SchemeKind::ExactCartesian => Scheme::ExactCartesian,
            SchemeKind::ExactModeBasis => Scheme::ExactModeBasis,
            SchemeKind::Sma => Scheme::Sma(init.sinusoids.clone()),
            SchemeKind::Zma => Scheme::Zma,
            SchemeKind::Mcsma => Scheme::Mcsma(init.sinusoids.clone()),
            SchemeKind::Mczma => Scheme::Mczma,
        }
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            Scheme::ExactCartesian => SchemeKind::ExactCartesian,
            Scheme::ExactModeBasis => SchemeKind::ExactModeBasis,
            Scheme::Sma(_) => SchemeKind::Sma,
            Scheme::Zma => SchemeKind::Zma,
            Scheme::Mcsma(_) => SchemeKind::Mcsma,
            Scheme::Mczma => SchemeKind::Mczma,
        }
    }

    fn sinusoids(&self) -> Option<&Sinusoids> {
        match self {
            Scheme::Sma(s) | Scheme::Mcsma(s) => Some(s),
            _ => None,
        }
    }
}

/// Writes (A, dA/dt, d²A/dt²) at time `t` for a large-scale scheme. Returns
/// `false` when all three vanish identically (zero-amplitude schemes).
pub(crate) fn prescribed_into(
    scheme: &Scheme,
    t: f64,
    basis: &ModeBasis,
    a: &mut [f64],
    da: &mut [f64],
    dda: &mut [f64],
) -> bool {
    match scheme.sinusoids() {
        Some(s) => {
            for (mu, w) in basis.frequencies.iter().enumerate() {
                let (sin, cos) = (w * t + s.phases[mu]).sin_cos();
                a[mu] = s.amplitudes[mu] * sin;
                da[mu] = s.amplitudes[mu] * w * cos;
                dda[mu] = -w * w * a[mu];
            }
            true
        }
        None => {
            a.fill(0.0);
            da.fill(0.0);
            dda.fill(0.0);
            false
        }
    }
}

/// Mode amplitudes and rates prescribed by a large-scale scheme at time `t`.
pub fn prescribed_amplitudes(scheme: &Scheme, t: f64, basis: &ModeBasis) -> Result<(Vec<f64>, Vec<f64>)> {
    if !scheme.kind().is_large_scale() {
        return Err(Error::Invalid(format!(
            "{} does not prescribe mode amplitudes",
            scheme.kind()
        )));
    }
    let k = basis.n_modes();
    if let Some(s) = scheme.sinusoids() {
        if s.amplitudes.len() != k || s.phases.len() != k {
            return Err(Error::Invalid("sinusoid constants do not match the basis".into()));
        }
    }
    let (mut a, mut da, mut dda) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    prescribed_into(scheme, t, basis, &mut a, &mut da, &mut dda);
    Ok((a, da))
}

/// δx_A = Σ_μ A_μ e^μ_A.
pub fn delta_x(amplitudes: &[f64], basis: &ModeBasis) -> Vec<Vec3> {
    basis.displacement(amplitudes)
}

/// Δx_A = R · (x0_A + δx_A), positions relative to the center of mass.
pub fn big_delta_x(state: &ModeBasisState, basis: &ModeBasis) -> Vec<Vec3> {
    let r = state.q.normalized_rotation();
    delta_x(&state.amplitudes, basis)
        .iter()
        .zip(&basis.x0)
        .map(|(d, x0)| r * (x0 + d))
        .collect()
}

pub fn to_cartesian(state: &ModeBasisState, basis: &ModeBasis) -> CartesianState {
    let r = state.q.normalized_rotation();
    let rel = big_delta_x(state, basis);
    let body_rates = delta_x(&state.rates, basis);
    CartesianState {
        x: rel.iter().map(|d| state.x_cm + d).collect(),
        v: rel
            .iter()
            .zip(&body_rates)
            .map(|(d, u)| state.v_cm + state.omega.cross(d) + r * u)
            .collect(),
    }
}

/// Solves `m · x = b`, refusing matrices with 1-norm condition above
/// [`MAX_CONDITION`].
pub(crate) fn solve3(m: &Matrix3<f64>, b: &Vec3, what: &'static str) -> Result<Vec3> {
    let norm1 = |a: &Matrix3<f64>| {
        (0..3)
            .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.try_inverse() {
        Some(inv) => {
            let cond = norm1(m) * norm1(&inv);
            if cond.is_finite() && cond <= MAX_CONDITION {
                Ok(inv * b)
            } else {
                Err(Error::Singular { what, cond })
            }
        }
        None => Err(Error::Singular {
            what,
            cond: f64::INFINITY,
        }),
    }
}
