use crate::error::{Error, Result};
use crate::modes::ModeBasis;
use crate::molecule::Molecule;
use crate::potential::PotentialParams;
use crate::rotation::{quaternion_rhs, Quaternion};
use crate::{Matrix3, Vec3};

use super::exact::{rotation_of, Body};
use super::{prescribed_into, read3, solve3, Scheme, REDUCED_DIM};

/// Macroscopic equations with prescribed mode amplitudes. SMA/ZMA take dΩ/dt
/// from the rotation-generator projection; MCSMA/MCZMA from dJ/dt = torque.
pub struct LargeScaleSystem<'a> {
    mol: &'a Molecule,
    basis: &'a ModeBasis,
    scheme: Scheme,
    params: PotentialParams,
    eta: f64,
    body: Body,
    a: Vec<f64>,
    da: Vec<f64>,
    dda: Vec<f64>,
}

impl<'a> LargeScaleSystem<'a> {
    pub fn new(
        mol: &'a Molecule,
        basis: &'a ModeBasis,
        scheme: Scheme,
        params: PotentialParams,
        eta: f64,
    ) -> Result<Self> {
        if !scheme.kind().is_large_scale() {
            return Err(Error::Invalid(format!("{} is not a large-scale scheme", scheme.kind())));
        }
        let k = basis.n_modes();
        if let Some(s) = scheme.sinusoids() {
            if s.amplitudes.len() != k || s.phases.len() != k {
                return Err(Error::Invalid("sinusoid constants do not match the basis".into()));
            }
        }
        Ok(LargeScaleSystem {
            mol,
            basis,
            scheme,
            params,
            eta,
            body: Body::new(mol.n_atoms()),
            a: vec![0.0; k],
            da: vec![0.0; k],
            dda: vec![0.0; k],
        })
    }

    pub fn dim(&self) -> usize {
        REDUCED_DIM
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let mc = self.scheme.kind().is_momentum_conserving();
        let moving = prescribed_into(&self.scheme, t, self.basis, &mut self.a, &mut self.da, &mut self.dda);
        if moving {
            let dda = if mc { Some(self.dda.as_slice()) } else { None };
            self.body.shape(self.basis, &self.a, &self.da, dda);
        } else {
            self.body.rigid(self.basis);
        }

        let x_cm = read3(y, 0);
        let q = Quaternion([y[6], y[7], y[8], y[9]]);
        let omega = read3(y, 10);
        let r = rotation_of(&q)?;
        self.body.forces(self.mol, &self.params, &x_cm, &r)?;
        let a_cm = self.body.net_force / self.basis.total_mass;

        let omega_dot = if mc {
            self.torque_balance(&r, &omega)?
        } else {
            let w = r.transpose() * omega;
            r * self.body.projected_angular_acceleration(self.basis, &w)?
        };

        dy[0..3].copy_from_slice(&y[3..6]);
        dy[3..6].copy_from_slice(a_cm.as_slice());
        dy[6..10].copy_from_slice(&quaternion_rhs(&q, &omega, self.eta));
        dy[10..13].copy_from_slice(omega_dot.as_slice());
        Ok(())
    }

    /// dΩ/dt = J̃⁻¹ [Σ Δx_A × F_A − Σ m_A Δx_A × B_A].
    fn torque_balance(&self, r: &Matrix3<f64>, omega: &Vec3) -> Result<Vec3> {
        let w2 = omega.norm_squared();
        let mut inertia = Matrix3::zeros();
        let mut rhs = Vec3::zeros();
        for (a, m) in self.basis.masses.iter().enumerate() {
            let dx = r * self.body.y(a);
            let b = r * self.body.yddot(a)
                + omega.cross(&(r * self.body.ydot(a))) * 2.0
                + omega * omega.dot(&dx)
                - dx * w2;
            inertia += (Matrix3::identity() * dx.norm_squared() - dx * dx.transpose()) * *m;
            rhs += dx.cross(&(-self.body.grad[a] - b * *m));
        }
        solve3(&inertia, &rhs, "angular momentum inertia matrix")
    }
}

/// Derivative of the reduced state `[x_CM, v_CM, q, Ω]` at time `t`.
#[allow(clippy::too_many_arguments)]
pub fn largescale_rhs(
    reduced: &[f64],
    scheme: &Scheme,
    basis: &ModeBasis,
    mol: &Molecule,
    params: &PotentialParams,
    t: f64,
    eta: f64,
) -> Result<[f64; REDUCED_DIM]> {
    let mut sys = LargeScaleSystem::new(mol, basis, scheme.clone(), *params, eta)?;
    let mut dy = [0.0; REDUCED_DIM];
    sys.rhs(t, reduced, &mut dy)?;
    Ok(dy)
}
