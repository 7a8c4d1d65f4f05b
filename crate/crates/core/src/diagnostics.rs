//! Conserved quantities, error metrics against a reference run, and the
//! exponential-rate fit used to measure chaotic divergence.

use std::time::Instant;

use serde::Serialize;

use crate::dynamics::CartesianState;
use crate::error::{Error, Result};
use crate::molecule::Molecule;
use crate::potential::{energy, PotentialParams};
use crate::rotation::Quaternion;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved {
    /// ½ Σ m v² + U in the chosen gauge, kcal/mol.
    pub energy: f64,
    pub momentum: Vec3,
    /// About the center of mass.
    pub angular_momentum: Vec3,
}

/// E, P and J with the potential measured from `u_offset`.
pub fn conserved_with_offset(
    s: &CartesianState,
    mol: &Molecule,
    params: &PotentialParams,
    u_offset: f64,
) -> Result<Conserved> {
    let total = mol.total_mass();
    let (mut p, mut mx) = (Vec3::zeros(), Vec3::zeros());
    let mut kinetic = 0.0;
    for ((x, v), m) in s.x.iter().zip(&s.v).zip(&mol.masses) {
        p += v * *m;
        mx += x * *m;
        kinetic += 0.5 * m * v.norm_squared();
    }
    let (x_cm, v_cm) = (mx / total, p / total);
    let j = s
        .x
        .iter()
        .zip(&s.v)
        .zip(&mol.masses)
        .fold(Vec3::zeros(), |acc, ((x, v), m)| acc + (x - x_cm).cross(&(v - v_cm)) * *m);
    Ok(Conserved {
        energy: kinetic + energy(&s.x, mol, params)? - u_offset,
        momentum: p,
        angular_momentum: j,
    })
}

/// Zero point of the reported energy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyGauge {
    /// E = ½ Σ m v² + U, U as defined by the potential.
    #[default]
    Absolute,
    /// U measured from its equilibrium value, so a molecule at rest at
    /// equilibrium has E = 0.
    Equilibrium,
}

impl std::str::FromStr for EnergyGauge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "absolute" => Ok(EnergyGauge::Absolute),
            "equilibrium" => Ok(EnergyGauge::Equilibrium),
            _ => Err(Error::Invalid(format!(
                "unknown energy gauge {s:?}; expected absolute or equilibrium"
            ))),
        }
    }
}

/// E = ½ Σ m v² + U, P = Σ m v and J about the center of mass.
pub fn conserved_quantities(s: &CartesianState, mol: &Molecule, params: &PotentialParams) -> Result<Conserved> {
    conserved_with_offset(s, mol, params, 0.0)
}

/// Orientation variables, present only for mode-basis runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Orientation {
    pub x_cm: Vec3,
    pub v_cm: Vec3,
    pub q: Quaternion,
    pub omega: Vec3,
}

/// Center-of-mass position and velocity of a Cartesian state.
pub fn center_of_mass_motion(s: &CartesianState, masses: &[f64]) -> (Vec3, Vec3) {
    let total: f64 = masses.iter().sum();
    let (mut mx, mut mv) = (Vec3::zeros(), Vec3::zeros());
    for ((x, v), m) in s.x.iter().zip(&s.v).zip(masses) {
        mx += x * *m;
        mv += v * *m;
    }
    (mx / total, mv / total)
}

/// A relative deviation, or the absolute one when the baseline vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub value: f64,
    pub absolute: bool,
}

impl Deviation {
    pub fn relative(now: f64, base: f64) -> Self {
        if base != 0.0 {
            Deviation {
                value: now / base.abs(),
                absolute: false,
            }
        } else {
            Deviation {
                value: now,
                absolute: true,
            }
        }
    }
}

/// ℰ_E, ℰ_P, ℰ_J of a sample against the same trajectory's t = 0 values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftMetrics {
    pub energy: Deviation,
    pub momentum: Deviation,
    pub angular_momentum: Deviation,
}

pub fn drift_metrics(now: &Conserved, initial: &Conserved) -> DriftMetrics {
    DriftMetrics {
        energy: Deviation::relative((now.energy - initial.energy).abs(), initial.energy),
        momentum: Deviation::relative((now.momentum - initial.momentum).norm(), initial.momentum.norm()),
        angular_momentum: Deviation::relative(
            (now.angular_momentum - initial.angular_momentum).norm(),
            initial.angular_momentum.norm(),
        ),
    }
}

/// ℰ_x = √((1/N) Σ |x_A − x_A^ref|²).
pub fn position_error(x: &[Vec3], x_ref: &[Vec3]) -> f64 {
    let sum: f64 = x.iter().zip(x_ref).map(|(a, b)| (a - b).norm_squared()).sum();
    (sum / x.len().max(1) as f64).sqrt()
}

/// ℰ_q = ½ |q − q_ref| with the sign of `q` chosen to minimize it.
pub fn quaternion_error(q: &Quaternion, q_ref: &Quaternion) -> f64 {
    let dist = |a: &Quaternion| -> f64 {
        a.0.iter().zip(&q_ref.0).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    0.5 * dist(q).min(dist(&q.neg()))
}

/// Metrics of a trial sample against the reference at the same time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceMetrics {
    pub e_x: f64,
    pub e_xcm: f64,
    pub e_vcm: f64,
    /// Relative; `None` when either side lacks orientation variables.
    pub e_omega: Option<f64>,
    pub e_q: Option<f64>,
}

pub fn error_metrics(
    trial: &CartesianState,
    trial_orientation: Option<&Orientation>,
    reference: &CartesianState,
    reference_orientation: Option<&Orientation>,
    masses: &[f64],
) -> ReferenceMetrics {
    let (xt, vt) = center_of_mass_motion(trial, masses);
    let (xr, vr) = center_of_mass_motion(reference, masses);
    let (e_omega, e_q) = match (trial_orientation, reference_orientation) {
        (Some(a), Some(b)) => (
            Some(Deviation::relative((a.omega - b.omega).norm(), b.omega.norm()).value),
            Some(quaternion_error(&a.q, &b.q)),
        ),
        _ => (None, None),
    };
    ReferenceMetrics {
        e_x: position_error(&trial.x, &reference.x),
        e_xcm: (xt - xr).norm(),
        e_vcm: (vt - vr).norm(),
        e_omega,
        e_q,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Growth rate in inverse units of the input times.
    pub rate: f64,
    /// Inclusive index range of the samples used.
    pub window: (usize, usize),
}

/// Least-squares slope of ln(value) against t over the growth window: from
/// the first sample above 10× the initial floor up to, but excluding, the
/// first sample above 0.1× the saturation level.
pub fn fit_exponential_rate(times: &[f64], values: &[f64]) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::Invalid("times and values differ in length".into()));
    }
    let positive: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
    if positive.len() < 10 {
        return Err(Error::Invalid(format!(
            "rate fit needs at least 10 positive samples, got {}",
            positive.len()
        )));
    }
    let floor = values[positive[0]];
    let saturation = positive.iter().map(|&i| values[i]).fold(0.0, f64::max);
    let start = positive.iter().copied().find(|&i| values[i] > 10.0 * floor);
    let end = positive.iter().copied().find(|&i| values[i] > 0.1 * saturation);
    let (start, end) = match (start, end) {
        (Some(s), Some(e)) if e >= s + 3 => (s, e - 1),
        _ => {
            return Err(Error::Invalid(format!(
                "no exponential growth window (floor {floor:.3e}, saturation {saturation:.3e})"
            )))
        }
    };
    let pts: Vec<(f64, f64)> = (start..=end)
        .filter(|&i| values[i] > 0.0)
        .map(|i| (times[i], values[i].ln()))
        .collect();
    Ok(RateFit {
        rate: least_squares_slope(&pts),
        window: (start, end),
    })
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    sxy / sxx
}

/// Slope of log(value) against log(t) over samples with t > 0 and value > 0.
pub fn log_log_slope(times: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t > 0.0 && **v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    (pts.len() >= 2).then(|| least_squares_slope(&pts))
}

/// Runs `f` and returns its value with the elapsed wall-clock seconds.
pub fn timing_capture<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
