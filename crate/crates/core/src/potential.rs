//! Bond-stretch plus bond-angle potential:
//!
//! U = ½ κ_b Σ_bonds (r_CD − L_b)² + ½ κ_θ Σ_angles (θ_CDE − θ_b)²
//!
//! Units: kcal/mol, Å, radians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::molecule::Molecule;
use crate::Vec3;

/// Largest |cos θ| for which the angle gradient is evaluated.
pub const COLLINEAR_GUARD: f64 = 1.0 - 1e-12;

/// Central finite-difference step for the Hessian (Å).
pub const HESSIAN_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    /// kcal/Å²/mol
    pub kappa_b: f64,
    /// Å
    pub bond_length: f64,
    /// kcal/rad²/mol
    pub kappa_theta: f64,
    /// radians
    pub theta_b: f64,
}

impl Default for PotentialParams {
    /// Carbon–carbon values with the angle stiffness raised to 305 so that
    /// fullerenes are stable without torsion terms.
    fn default() -> Self {
        PotentialParams {
            kappa_b: 305.0,
            bond_length: 1.375,
            kappa_theta: 305.0,
            theta_b: 120f64.to_radians(),
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa_b, self.bond_length, self.kappa_theta, self.theta_b];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Invalid(format!("potential parameters must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialEvaluation {
    pub energy: f64,
    /// ∂U/∂x_A per atom.
    pub gradient: Vec<Vec3>,
}

fn bond_vector(coords: &[Vec3], c: usize, d: usize) -> Result<(Vec3, f64)> {
    let u = coords[c] - coords[d];
    let r = u.norm();
    if r > 0.0 {
        Ok((u, r))
    } else {
        Err(Error::Domain(format!("atoms {c} and {d} coincide")))
    }
}

pub fn energy(coords: &[Vec3], mol: &Molecule, params: &PotentialParams) -> Result<f64> {
    let mut bond_sum = 0.0;
    for &[c, d] in &mol.bonds {
        let (_, r) = bond_vector(coords, c, d)?;
        bond_sum += (r - params.bond_length).powi(2);
    }
    let mut angle_sum = 0.0;
    for &[c, d, e] in &mol.angles {
        let (u, ru) = bond_vector(coords, c, d)?;
        let (w, rw) = bond_vector(coords, e, d)?;
        let cos = (u.dot(&w) / (ru * rw)).clamp(-1.0, 1.0);
        angle_sum += (cos.acos() - params.theta_b).powi(2);
    }
    Ok(0.5 * params.kappa_b * bond_sum + 0.5 * params.kappa_theta * angle_sum)
}

/// Energy and gradient, writing ∂U/∂x_A into `grad` (overwritten).
pub fn evaluate_into(
    coords: &[Vec3],
    mol: &Molecule,
    params: &PotentialParams,
    grad: &mut [Vec3],
) -> Result<f64> {
    debug_assert_eq!(grad.len(), coords.len());
    grad.iter_mut().for_each(|g| *g = Vec3::zeros());
    let mut bond_sum = 0.0;
    for &[c, d] in &mol.bonds {
        let (u, r) = bond_vector(coords, c, d)?;
        let stretch = r - params.bond_length;
        bond_sum += stretch * stretch;
        let g = u * (params.kappa_b * stretch / r);
        grad[c] += g;
        grad[d] -= g;
    }
    let mut angle_sum = 0.0;
    for &[c, d, e] in &mol.angles {
        let (u, ru) = bond_vector(coords, c, d)?;
        let (w, rw) = bond_vector(coords, e, d)?;
        let inv = 1.0 / (ru * rw);
        let cos = u.dot(&w) * inv;
        if cos.abs() > COLLINEAR_GUARD {
            return Err(Error::Domain(format!(
                "angle ({c}, {d}, {e}) is collinear (cos θ = {cos})"
            )));
        }
        let theta = cos.acos();
        let bend = theta - params.theta_b;
        angle_sum += bend * bend;
        // dU/dcos = κ_θ (θ − θ_b) · dθ/dcos
        let du_dcos = -params.kappa_theta * bend / (1.0 - cos * cos).sqrt();
        let gc = (w * inv - u * (cos / (ru * ru))) * du_dcos;
        let ge = (u * inv - w * (cos / (rw * rw))) * du_dcos;
        grad[c] += gc;
        grad[e] += ge;
        grad[d] -= gc + ge;
    }
    Ok(0.5 * params.kappa_b * bond_sum + 0.5 * params.kappa_theta * angle_sum)
}

pub fn evaluate(coords: &[Vec3], mol: &Molecule, params: &PotentialParams) -> Result<PotentialEvaluation> {
    let mut gradient = vec![Vec3::zeros(); coords.len()];
    let energy = evaluate_into(coords, mol, params, &mut gradient)?;
    Ok(PotentialEvaluation { energy, gradient })
}

pub fn gradient(coords: &[Vec3], mol: &Molecule, params: &PotentialParams) -> Result<Vec<Vec3>> {
    evaluate(coords, mol, params).map(|ev| ev.gradient)
}

/// Dense symmetric 3N×3N matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest |H_ij − H_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn symmetrize(&mut self) {
        for i in 0..self.dim {
            for j in 0..i {
                let avg = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, avg);
                self.set(j, i, avg);
            }
        }
    }
}

/// Central differences of the analytic gradient before symmetrization.
pub fn hessian_unsymmetrized(
    coords: &[Vec3],
    mol: &Molecule,
    params: &PotentialParams,
) -> Result<SymmetricMatrix> {
    let n = coords.len();
    let dim = 3 * n;
    let mut h = SymmetricMatrix::zeros(dim);
    let mut x = coords.to_vec();
    let mut gp = vec![Vec3::zeros(); n];
    let mut gm = vec![Vec3::zeros(); n];
    for col in 0..dim {
        let (atom, k) = (col / 3, col % 3);
        let x0 = x[atom][k];
        x[atom][k] = x0 + HESSIAN_STEP;
        evaluate_into(&x, mol, params, &mut gp)?;
        x[atom][k] = x0 - HESSIAN_STEP;
        evaluate_into(&x, mol, params, &mut gm)?;
        x[atom][k] = x0;
        for row in 0..dim {
            let d = gp[row / 3][row % 3] - gm[row / 3][row % 3];
            h.set(row, col, d / (2.0 * HESSIAN_STEP));
        }
    }
    Ok(h)
}

pub fn hessian(coords: &[Vec3], mol: &Molecule, params: &PotentialParams) -> Result<SymmetricMatrix> {
    let mut h = hessian_unsymmetrized(coords, mol, params)?;
    h.symmetrize();
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dimer(r: f64) -> Molecule {
        Molecule::new(
            "dimer",
            vec![12.0, 12.0],
            vec![[0, 1]],
            None,
            vec![Vec3::zeros(), Vec3::new(r, 0.0, 0.0)],
        )
        .unwrap()
    }

    fn bent(theta: f64, r: f64) -> Molecule {
        Molecule::new(
            "bent",
            vec![12.0; 3],
            vec![[0, 1], [1, 2]],
            None,
            vec![
                Vec3::new(r, 0.0, 0.0),
                Vec3::zeros(),
                Vec3::new(r * theta.cos(), r * theta.sin(), 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn exact_equilibrium_terms_vanish() {
        let p = PotentialParams::default();
        let mol = bent(p.theta_b, p.bond_length);
        assert!(energy(&mol.coords_initial, &mol, &p).unwrap() < 1e-25);
        let g = gradient(&mol.coords_initial, &mol, &p).unwrap();
        assert!(g.iter().all(|v| v.norm() < 1e-12), "{g:?}");
    }

    #[test]
    fn stretched_bond_energy() {
        let p = PotentialParams::default();
        let mol = dimer(2.375);
        let u = energy(&mol.coords_initial, &mol, &p).unwrap();
        assert!((u - 152.5).abs() < 1e-12, "{u}");
    }

    #[test]
    fn right_angle_energy() {
        let p = PotentialParams::default();
        let mol = bent(PI / 2.0, p.bond_length);
        let u = energy(&mol.coords_initial, &mol, &p).unwrap();
        let expect = 0.5 * 305.0 * (PI / 6.0).powi(2);
        assert!((u - expect).abs() < 1e-10, "{u} vs {expect}");
    }

    #[test]
    fn right_angle_energy_matches_integrated_force() {
        // Work done against the analytic force while opening the angle from
        // 90° to 120° along a circular arc equals the energy drop.
        let p = PotentialParams::default();
        let steps = 2000;
        let r = p.bond_length;
        let mut work = 0.0;
        for s in 0..steps {
            let theta = PI / 2.0 + (s as f64 + 0.5) / steps as f64 * (PI / 6.0);
            let mol = bent(theta, r);
            let g = gradient(&mol.coords_initial, &mol, &p).unwrap();
            let tangent = Vec3::new(-theta.sin(), theta.cos(), 0.0) * r;
            work += g[2].dot(&tangent) * (PI / 6.0) / steps as f64;
        }
        let expect = 0.5 * 305.0 * (PI / 6.0).powi(2);
        assert!((-work - expect).abs() < 1e-5 * expect, "{work}");
    }

    #[test]
    fn stretched_dimer_forces_are_equal_and_opposite() {
        let p = PotentialParams::default();
        let mol = dimer(2.0);
        let g = gradient(&mol.coords_initial, &mol, &p).unwrap();
        let mag = 305.0 * (2.0 - 1.375);
        assert!((g[1].x - mag).abs() < 1e-12 && (g[0].x + mag).abs() < 1e-12);
        assert!(g[0].y == 0.0 && g[1].z == 0.0);
    }

    #[test]
    fn coincident_atoms_are_a_domain_error() {
        let p = PotentialParams::default();
        let mol = dimer(1.0);
        let coords = vec![Vec3::zeros(); 2];
        assert!(matches!(energy(&coords, &mol, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn collinear_angle_is_a_domain_error() {
        let p = PotentialParams::default();
        let mol = bent(PI, 1.4);
        let err = gradient(&mol.coords_initial, &mol, &p).unwrap_err();
        assert!(err.to_string().contains("(0, 1, 2)"), "{err}");
        assert!(energy(&mol.coords_initial, &mol, &p).is_ok());
    }

    #[test]
    fn dimer_hessian_spring_block() {
        let p = PotentialParams::default();
        let mol = dimer(p.bond_length);
        let h = hessian(&mol.coords_initial, &mol, &p).unwrap();
        // xx block [[k, -k], [-k, k]] has eigenvalues {0, 2k}.
        let (a, b) = (h.get(0, 0), h.get(0, 3));
        assert!((a - 305.0).abs() < 1e-4 && (b + 305.0).abs() < 1e-4, "{a} {b}");
        assert!((a - b - 2.0 * 305.0).abs() < 1e-4 && (a + b).abs() < 1e-4);
    }

    #[test]
    fn params_must_be_positive() {
        let mut p = PotentialParams::default();
        assert!(p.validate().is_ok());
        p.kappa_theta = 0.0;
        assert!(p.validate().is_err());
    }
}
