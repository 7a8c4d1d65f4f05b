//! Mass-weighted normal modes of the equilibrium structure.
//!
//! Mode shapes `e^μ_A` are normalized under the inner product
//! ⟨a, b⟩ = Σ_A (m_A / M) a_A · b_A and are orthogonal to the six rigid
//! translations and rotations of the equilibrium geometry.

use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::potential::SymmetricMatrix;
use crate::Vec3;

/// Eigenvalues with |ω²| below this fraction of the largest are rigid modes.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-8;
/// Relative eigenvalue gap below which modes are treated as degenerate.
pub const CLUSTER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    pub masses: Vec<f64>,
    pub total_mass: f64,
    /// Equilibrium positions relative to the center of mass.
    pub x0: Vec<Vec3>,
    /// ω_μ, ascending.
    pub frequencies: Vec<f64>,
    /// Row μ holds e^μ as 3N numbers (atom-major).
    pub shapes: Vec<f64>,
    /// The six discarded eigenvalues ω² (rigid motions).
    pub zero_eigenvalues: Vec<f64>,
    /// Mass-orthonormal rigid translation and rotation fields, 6 rows of 3N.
    pub rigid: Vec<f64>,
}

pub fn weighted_dot(a: &[f64], b: &[f64], masses: &[f64], total: f64) -> f64 {
    a.chunks_exact(3)
        .zip(b.chunks_exact(3))
        .zip(masses)
        .map(|((x, y), m)| m * (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]))
        .sum::<f64>()
        / total
}

fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// Three uniform translations followed by three rotation generators
/// `θ̂ × x0_A`, mass-orthonormalized. `x0` must be centered at the center of mass.
pub fn rigid_mode_vectors(x0: &[Vec3], masses: &[f64]) -> Result<Vec<Vec<f64>>> {
    let total: f64 = masses.iter().sum();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(6);
    for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
        out.push(flatten(&vec![axis; x0.len()]));
    }
    let scale = x0
        .iter()
        .zip(masses)
        .map(|(x, m)| m * x.norm_squared())
        .sum::<f64>()
        / total;
    for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
        let mut v = flatten(&x0.iter().map(|x| axis.cross(x)).collect::<Vec<_>>());
        for _ in 0..2 {
            for prev in &out {
                let c = weighted_dot(&v, prev, masses, total);
                axpy(&mut v, -c, prev);
            }
        }
        let norm = weighted_dot(&v, &v, masses, total).sqrt();
        if !(norm > 1e-8 * scale.sqrt()) {
            return Err(Error::Modes(
                "rotation generators are rank-deficient (linear or point-like geometry)".into(),
            ));
        }
        v.iter_mut().for_each(|c| *c /= norm);
        out.push(v);
    }
    Ok(out)
}

/// Removes rigid components, re-orthonormalizes within degenerate clusters
/// of `eigenvalues`, normalizes, and fixes each sign so the first significant
/// component is positive.
pub fn project_and_normalize(
    raw: &[Vec<f64>],
    eigenvalues: &[f64],
    rigid: &[Vec<f64>],
    masses: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let total: f64 = masses.iter().sum();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
    let mut cluster_start = 0;
    for (mu, v) in raw.iter().enumerate() {
        if mu > 0 {
            let (a, b) = (eigenvalues[mu - 1], eigenvalues[mu]);
            if (b - a).abs() > CLUSTER_TOLERANCE * b.abs().max(a.abs()) {
                cluster_start = mu;
            }
        }
        let mut w = v.clone();
        let before = weighted_dot(&w, &w, masses, total).sqrt();
        for _ in 0..2 {
            for r in rigid {
                let c = weighted_dot(&w, r, masses, total);
                axpy(&mut w, -c, r);
            }
            for prev in &out[cluster_start..] {
                let c = weighted_dot(&w, prev, masses, total);
                axpy(&mut w, -c, prev);
            }
        }
        let norm = weighted_dot(&w, &w, masses, total).sqrt();
        if !(norm > 1e-6 * before) {
            return Err(Error::Modes(format!("mode {mu} vanished after rigid projection")));
        }
        w.iter_mut().for_each(|c| *c /= norm);
        let peak = w.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if let Some(first) = w.iter().find(|c| c.abs() > 1e-6 * peak) {
            if *first < 0.0 {
                w.iter_mut().for_each(|c| *c = -*c);
            }
        }
        out.push(w);
    }
    Ok(out)
}

/// Solves 0 = −m_A ω² e_A + Σ_B H_AB e_B for the equilibrium Hessian and keeps
/// the 3N − 6 vibrational modes.
pub fn compute_modes(hessian: &SymmetricMatrix, masses: &[f64], x0: &[Vec3]) -> Result<ModeBasis> {
    let n = masses.len();
    let dim = 3 * n;
    if hessian.dim != dim || x0.len() != n {
        return Err(Error::Invalid("Hessian, mass and coordinate sizes disagree".into()));
    }
    if dim < 7 {
        return Err(Error::Modes(format!("{n} atoms leave no vibrational modes")));
    }
    let total: f64 = masses.iter().sum();
    let inv_sqrt: Vec<f64> = (0..dim).map(|i| 1.0 / masses[i / 3].sqrt()).collect();
    let mut weighted = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            weighted[i * dim + j] = hessian.get(i, j) * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = symmetric_eigen(&weighted, dim)?;
    let largest = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = ZERO_MODE_THRESHOLD * largest;

    let mut by_magnitude: Vec<usize> = (0..dim).collect();
    by_magnitude.sort_by(|&a, &b| eig.values[a].abs().total_cmp(&eig.values[b].abs()));
    let zero_count = eig.values.iter().filter(|v| v.abs() < threshold).count();
    if zero_count != 6 {
        return Err(Error::Modes(format!(
            "expected 6 zero modes, found {zero_count} eigenvalues below {threshold:.3e}"
        )));
    }
    if let Some(neg) = eig.values.iter().find(|v| **v <= -threshold) {
        return Err(Error::Modes(format!("unstable equilibrium: ω² = {neg:.6e}")));
    }
    let rigid_idx = &by_magnitude[..6];
    let zero_eigenvalues: Vec<f64> = rigid_idx.iter().map(|&k| eig.values[k]).collect();

    let mut keep: Vec<usize> = (0..dim).filter(|k| !rigid_idx.contains(k)).collect();
    keep.sort_by(|&a, &b| eig.values[a].total_cmp(&eig.values[b]));
    let eigenvalues: Vec<f64> = keep.iter().map(|&k| eig.values[k]).collect();
    let scale = total.sqrt();
    let raw: Vec<Vec<f64>> = keep
        .iter()
        .map(|&k| {
            eig.vectors[k]
                .iter()
                .zip(&inv_sqrt)
                .map(|(v, s)| v * s * scale)
                .collect()
        })
        .collect();

    let rigid = rigid_mode_vectors(x0, masses)?;
    let modes = project_and_normalize(&raw, &eigenvalues, &rigid, masses)?;
    Ok(ModeBasis {
        masses: masses.to_vec(),
        total_mass: total,
        x0: x0.to_vec(),
        frequencies: eigenvalues.iter().map(|w2| w2.sqrt()).collect(),
        shapes: modes.concat(),
        zero_eigenvalues,
        rigid: rigid.concat(),
    })
}

/// Worst-case violations of the mode-basis conditions.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintResiduals {
    /// max |⟨e^μ, e^ν⟩ − δ^μν|
    pub orthonormality: f64,
    /// max |Σ (m/M) e^μ_A|
    pub translation: f64,
    /// max |Σ (m/M) e^μ_A × x0_A|
    pub rotation: f64,
}

impl ModeBasis {
    pub fn n_atoms(&self) -> usize {
        self.masses.len()
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// e^μ as 3N numbers.
    pub fn mode(&self, mu: usize) -> &[f64] {
        let w = 3 * self.n_atoms();
        &self.shapes[mu * w..(mu + 1) * w]
    }

    pub fn mode_vector(&self, mu: usize, atom: usize) -> Vec3 {
        let m = self.mode(mu);
        Vec3::new(m[3 * atom], m[3 * atom + 1], m[3 * atom + 2])
    }

    pub fn rigid_mode(&self, k: usize) -> &[f64] {
        let w = 3 * self.n_atoms();
        &self.rigid[k * w..(k + 1) * w]
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_dot(a, b, &self.masses, self.total_mass)
    }

    pub fn constraint_residuals(&self) -> ConstraintResiduals {
        let k = self.n_modes();
        let mut res = ConstraintResiduals {
            orthonormality: 0.0,
            translation: 0.0,
            rotation: 0.0,
        };
        for mu in 0..k {
            for nu in 0..=mu {
                let expect = if mu == nu { 1.0 } else { 0.0 };
                let d = (self.inner(self.mode(mu), self.mode(nu)) - expect).abs();
                res.orthonormality = res.orthonormality.max(d);
            }
            let mut t = Vec3::zeros();
            let mut r = Vec3::zeros();
            for (a, (m, x0)) in self.masses.iter().zip(&self.x0).enumerate() {
                let e = self.mode_vector(mu, a);
                t += e * (m / self.total_mass);
                r += e.cross(x0) * (m / self.total_mass);
            }
            res.translation = res.translation.max(t.norm());
            res.rotation = res.rotation.max(r.norm());
        }
        res
    }

    /// Σ_μ A_μ e^μ_A per atom.
    pub fn displacement(&self, amplitudes: &[f64]) -> Vec<Vec3> {
        let n = self.n_atoms();
        let mut flat = vec![0.0; 3 * n];
        for (mu, a) in amplitudes.iter().enumerate() {
            axpy(&mut flat, *a, self.mode(mu));
        }
        flat.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
    }
}
