use crate::error::{Error, Result};
use crate::modes::ModeBasis;
use crate::molecule::Molecule;
use crate::potential::{evaluate_into, PotentialParams};
use crate::rotation::{quaternion_rhs, Quaternion};
use crate::{Matrix3, Vec3};

use super::{read3, solve3, CartesianState, ModeBasisState, REDUCED_DIM};

fn write3(dy: &mut [f64], at: usize, v: &Vec3) {
    dy[at..at + 3].copy_from_slice(v.as_slice());
}

/// Exact equations in atom coordinates: dx/dt = v, dv/dt = −(1/m) ∂U/∂x.
pub struct CartesianSystem<'a> {
    mol: &'a Molecule,
    params: PotentialParams,
    x: Vec<Vec3>,
    grad: Vec<Vec3>,
}

impl<'a> CartesianSystem<'a> {
    pub fn new(mol: &'a Molecule, params: PotentialParams) -> Self {
        let n = mol.n_atoms();
        CartesianSystem {
            mol,
            params,
            x: vec![Vec3::zeros(); n],
            grad: vec![Vec3::zeros(); n],
        }
    }

    pub fn dim(&self) -> usize {
        6 * self.mol.n_atoms()
    }

    pub fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.mol.n_atoms();
        for (a, x) in self.x.iter_mut().enumerate() {
            *x = read3(y, 3 * a);
        }
        evaluate_into(&self.x, self.mol, &self.params, &mut self.grad)?;
        dy[..3 * n].copy_from_slice(&y[3 * n..6 * n]);
        for (a, (g, m)) in self.grad.iter().zip(&self.mol.masses).enumerate() {
            write3(dy, 3 * n + 3 * a, &(-g / *m));
        }
        Ok(())
    }
}

/// Time derivative of a Cartesian state, returned as (velocities, accelerations).
pub fn cartesian_rhs(s: &CartesianState, mol: &Molecule, params: &PotentialParams) -> Result<CartesianState> {
    let mut sys = CartesianSystem::new(mol, *params);
    let y = s.to_flat();
    let mut dy = vec![0.0; y.len()];
    sys.rhs(0.0, &y, &mut dy)?;
    Ok(CartesianState::from_flat(&dy))
}

/// Scratch space for the body-frame kinematics shared by every mode-basis scheme.
pub(crate) struct Body {
    /// y_A = x0_A + Σ A_μ e^μ_A (body frame, flat)
    pub y: Vec<f64>,
    /// dy_A/dt = Σ dA_μ/dt e^μ_A
    pub ydot: Vec<f64>,
    /// d²y_A/dt² = Σ d²A_μ/dt² e^μ_A (large-scale schemes only)
    pub yddot: Vec<f64>,
    pub lab: Vec<Vec3>,
    pub grad: Vec<Vec3>,
    /// Rᵀ F_A
    pub force_body: Vec<Vec3>,
    pub net_force: Vec3,
}

impl Body {
    pub fn new(n: usize) -> Self {
        Body {
            y: vec![0.0; 3 * n],
            ydot: vec![0.0; 3 * n],
            yddot: vec![0.0; 3 * n],
            lab: vec![Vec3::zeros(); n],
            grad: vec![Vec3::zeros(); n],
            force_body: vec![Vec3::zeros(); n],
            net_force: Vec3::zeros(),
        }
    }

    pub fn y(&self, a: usize) -> Vec3 {
        read3(&self.y, 3 * a)
    }

    pub fn ydot(&self, a: usize) -> Vec3 {
        read3(&self.ydot, 3 * a)
    }

    pub fn yddot(&self, a: usize) -> Vec3 {
        read3(&self.yddot, 3 * a)
    }

    /// Fills y, dy/dt and, when `dda` is given, d²y/dt².
    pub fn shape(&mut self, basis: &ModeBasis, a: &[f64], da: &[f64], dda: Option<&[f64]>) {
        for (dst, x0) in self.y.chunks_exact_mut(3).zip(&basis.x0) {
            dst.copy_from_slice(x0.as_slice());
        }
        self.ydot.fill(0.0);
        if dda.is_some() {
            self.yddot.fill(0.0);
        }
        let w = self.y.len();
        for mu in 0..basis.n_modes() {
            let e = &basis.mode(mu)[..w];
            let (am, dm) = (a[mu], da[mu]);
            let (y, yd) = (&mut self.y[..w], &mut self.ydot[..w]);
            for i in 0..w {
                y[i] += am * e[i];
                yd[i] += dm * e[i];
            }
            if let Some(dda) = dda {
                let ddm = dda[mu];
                let ydd = &mut self.yddot[..w];
                for i in 0..w {
                    ydd[i] += ddm * e[i];
                }
            }
        }
    }

    /// Rigid shape y = x0 with no internal motion.
    pub fn rigid(&mut self, basis: &ModeBasis) {
        for (dst, x0) in self.y.chunks_exact_mut(3).zip(&basis.x0) {
            dst.copy_from_slice(x0.as_slice());
        }
        self.ydot.fill(0.0);
        self.yddot.fill(0.0);
    }

    /// Lab positions x_A = x_CM + R y_A, potential gradient and body-frame forces.
    pub fn forces(
        &mut self,
        mol: &Molecule,
        params: &PotentialParams,
        x_cm: &Vec3,
        r: &Matrix3<f64>,
    ) -> Result<()> {
        for a in 0..self.lab.len() {
            self.lab[a] = x_cm + r * self.y(a);
        }
        evaluate_into(&self.lab, mol, params, &mut self.grad)?;
        let rt = r.transpose();
        self.net_force = Vec3::zeros();
        for (fb, g) in self.force_body.iter_mut().zip(&self.grad) {
            self.net_force -= g;
            *fb = rt * (-g);
        }
        Ok(())
    }

    /// Body-frame angular acceleration from projecting Newton's law onto the
    /// rotation generators θ̂ × x0_A. `w` is the body-frame angular velocity;
    /// d²y/dt² drops out by the rotation constraint on the modes.
    pub fn projected_angular_acceleration(&self, basis: &ModeBasis, w: &Vec3) -> Result<Vec3> {
        let mut k = Matrix3::zeros();
        let mut rhs = Vec3::zeros();
        for (a, (m, x0)) in basis.masses.iter().zip(&basis.x0).enumerate() {
            let y = self.y(a);
            let inertial = w.cross(&w.cross(&y)) + w.cross(&self.ydot(a)) * 2.0;
            rhs += x0.cross(&(self.force_body[a] - inertial * *m));
            k += (Matrix3::identity() * x0.dot(&y) - y * x0.transpose()) * *m;
        }
        solve3(&k, &rhs, "rotational projection matrix")
    }
}

pub(crate) fn rotation_of(q: &Quaternion) -> Result<Matrix3<f64>> {
    q.renormalize()
        .map(|u| u.rotation_matrix())
        .map_err(|e| Error::Domain(e.to_string()))
}

/// Exact equations of motion in the mode basis.
pub struct ModeBasisSystem<'a> {
    mol: &'a Molecule,
    basis: &'a ModeBasis,
    params: PotentialParams,
    eta: f64,
    body: Body,
    weighted: Vec<f64>,
}

impl<'a> ModeBasisSystem<'a> {
    pub fn new(mol: &'a Molecule, basis: &'a ModeBasis, params: PotentialParams, eta: f64) -> Self {
        let n = mol.n_atoms();
        ModeBasisSystem {
            mol,
            basis,
            params,
            eta,
            body: Body::new(n),
            weighted: vec![0.0; 3 * n],
        }
    }

    pub fn dim(&self) -> usize {
        REDUCED_DIM + 2 * self.basis.n_modes()
    }

    pub fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let k = self.basis.n_modes();
        let (a, da) = y[REDUCED_DIM..].split_at(k);
        let x_cm = read3(y, 0);
        let q = Quaternion([y[6], y[7], y[8], y[9]]);
        let omega = read3(y, 10);
        let r = rotation_of(&q)?;

        self.body.shape(self.basis, a, da, None);
        self.body.forces(self.mol, &self.params, &x_cm, &r)?;
        let total = self.basis.total_mass;
        let a_cm = self.body.net_force / total;
        let w = r.transpose() * omega;
        let wdot = self.body.projected_angular_acceleration(self.basis, &w)?;

        // Body-frame relative acceleration each atom needs beyond the frame terms,
        // weighted by m_A / M for the projection onto the modes.
        let a_cm_body = r.transpose() * a_cm;
        for (at, m) in self.basis.masses.iter().enumerate() {
            let yb = self.body.y(at);
            let frame = wdot.cross(&yb) + w.cross(&w.cross(&yb)) + w.cross(&self.body.ydot(at)) * 2.0;
            let g = (self.body.force_body[at] / *m - a_cm_body - frame) * (m / total);
            write3(&mut self.weighted, 3 * at, &g);
        }

        dy[0..3].copy_from_slice(&y[3..6]);
        write3(dy, 3, &a_cm);
        dy[6..10].copy_from_slice(&quaternion_rhs(&q, &omega, self.eta));
        write3(dy, 10, &(r * wdot));
        dy[REDUCED_DIM..REDUCED_DIM + k].copy_from_slice(da);
        for mu in 0..k {
            dy[REDUCED_DIM + k + mu] = self
                .basis
                .mode(mu)
                .iter()
                .zip(&self.weighted)
                .map(|(e, g)| e * g)
                .sum();
        }
        Ok(())
    }

    /// Derivative of `state`, packed into the same layout (the `q` field holds dq/dt).
    pub fn derivative(&mut self, state: &ModeBasisState) -> Result<ModeBasisState> {
        let y = state.to_flat();
        let mut dy = vec![0.0; y.len()];
        self.rhs(0.0, &y, &mut dy)?;
        Ok(ModeBasisState::from_flat(&dy))
    }
}
