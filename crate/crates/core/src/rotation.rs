//! Quaternion parameterization of the orientation matrix, with a
//! constraint-damped evolution equation that pulls numerical drift back onto
//! the unit sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Matrix3, Vec3};

/// Coefficient of the `−η q_i C` damping term. With this value the constraint
/// obeys dC/dt = −η (C + 1) C exactly.
pub const DAMPING_COEFFICIENT: f64 = 0.5;

/// Orientation quaternion `(q0, q1, q2, q3)`, `q0` the real part. Unit norm is
/// maintained by the integrator and by [`Quaternion::renormalize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion(pub [f64; 4]);

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion([1.0, 0.0, 0.0, 0.0]);

    /// Rotation by `angle` radians about the unit vector `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis.normalize() * s;
        Quaternion([c, a.x, a.y, a.z])
    }

    /// C = q0² + q1² + q2² + q3² − 1.
    pub fn constraint(&self) -> f64 {
        self.0.iter().map(|q| q * q).sum::<f64>() - 1.0
    }

    pub fn renormalize(&self) -> Result<Self> {
        let norm = self.0.iter().map(|q| q * q).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Invalid(format!("cannot normalize quaternion {:?}", self.0)));
        }
        Ok(Quaternion(self.0.map(|q| q / norm)))
    }

    pub fn neg(&self) -> Self {
        Quaternion(self.0.map(|q| -q))
    }

    /// The orientation matrix; orthogonal only when `constraint() == 0`.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let [q0, q1, q2, q3] = self.0;
        Matrix3::new(
            2.0 * (q0 * q0 + q1 * q1) - 1.0,
            2.0 * (q1 * q2 - q0 * q3),
            2.0 * (q1 * q3 + q0 * q2),
            2.0 * (q1 * q2 + q0 * q3),
            2.0 * (q0 * q0 + q2 * q2) - 1.0,
            2.0 * (q2 * q3 - q0 * q1),
            2.0 * (q1 * q3 - q0 * q2),
            2.0 * (q2 * q3 + q0 * q1),
            2.0 * (q0 * q0 + q3 * q3) - 1.0,
        )
    }

    /// Rotation matrix of the normalized quaternion.
    pub fn normalized_rotation(&self) -> Matrix3<f64> {
        match self.renormalize() {
            Ok(q) => q.rotation_matrix(),
            Err(_) => Matrix3::from_element(f64::NAN),
        }
    }
}

/// dq/dt for the lab-frame angular velocity `omega` (dR/dt = Ω× R), plus
/// constraint damping at rate `eta`.
pub fn quaternion_rhs(q: &Quaternion, omega: &Vec3, eta: f64) -> [f64; 4] {
    let [q0, q1, q2, q3] = q.0;
    let (wx, wy, wz) = (omega.x, omega.y, omega.z);
    let damp = DAMPING_COEFFICIENT * eta * q.constraint();
    [
        -0.5 * (wx * q1 + wy * q2 + wz * q3) - damp * q0,
        0.5 * (wx * q0 + wy * q3 - wz * q2) - damp * q1,
        0.5 * (-wx * q3 + wy * q0 + wz * q1) - damp * q2,
        0.5 * (wx * q2 - wy * q1 + wz * q0) - damp * q3,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn max_abs(m: &Matrix3<f64>) -> f64 {
        m.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn arb_quat() -> impl Strategy<Value = Quaternion> {
        proptest::array::uniform4(-1.0f64..1.0)
            .prop_filter("nonzero", |q| q.iter().map(|v| v * v).sum::<f64>() > 1e-3)
            .prop_map(|q| Quaternion(q).renormalize().unwrap())
    }

    #[test]
    fn identity() {
        assert_eq!(Quaternion::IDENTITY.rotation_matrix(), Matrix3::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = Quaternion([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).rotation_matrix();
        let expect = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(max_abs(&(r - expect)) < 1e-15);
        // Same as the axis-angle (Rodrigues) rotation.
        let q = Quaternion::from_axis_angle(Vec3::z(), std::f64::consts::FRAC_PI_2);
        assert!(max_abs(&(q.rotation_matrix() - expect)) < 1e-15);
    }

    #[test]
    fn constraint_and_renormalize() {
        assert_eq!(Quaternion::IDENTITY.constraint(), 0.0);
        let q = Quaternion([2.0, 0.0, 0.0, 0.0]);
        assert_eq!(q.constraint(), 3.0);
        assert_eq!(q.renormalize().unwrap(), Quaternion::IDENTITY);
        assert!(Quaternion([0.0; 4]).renormalize().is_err());
    }

    #[test]
    fn spin_about_z_from_identity() {
        for eta in [0.0, 1.0, 10.0] {
            let d = quaternion_rhs(&Quaternion::IDENTITY, &Vec3::new(0.0, 0.0, 0.7), eta);
            assert_eq!(d, [0.0, 0.0, 0.0, 0.35]);
        }
    }

    #[test]
    fn at_rest_on_sphere_is_stationary() {
        let q = Quaternion([0.5, 0.5, 0.5, 0.5]);
        assert_eq!(quaternion_rhs(&q, &Vec3::zeros(), 1.0), [0.0; 4]);
    }

    #[test]
    fn damping_pushes_toward_sphere() {
        let (eps, eta) = (1e-3, 2.0);
        let q = Quaternion([1.0 + eps, 0.0, 0.0, 0.0]);
        let d = quaternion_rhs(&q, &Vec3::zeros(), eta);
        let expect = -DAMPING_COEFFICIENT * eta * (1.0 + eps) * ((1.0 + eps).powi(2) - 1.0);
        assert!(d[0] < 0.0 && (d[0] - expect).abs() < 1e-18);
    }

    proptest! {
        #[test]
        fn orthogonal_with_unit_determinant(q in arb_quat()) {
            let r = q.rotation_matrix();
            prop_assert!(max_abs(&(r.transpose() * r - Matrix3::identity())) < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
            prop_assert!(max_abs(&(r - q.neg().rotation_matrix())) == 0.0);
        }

        #[test]
        fn orthogonality_defect_bounded_by_constraint(q in arb_quat(), s in 0.9f64..1.1) {
            let scaled = Quaternion(q.0.map(|v| v * s));
            let r = scaled.rotation_matrix();
            let defect = max_abs(&(r.transpose() * r - Matrix3::identity()));
            let c = scaled.constraint().abs();
            prop_assert!(defect < 4.0 * c * (1.0 + c) + 1e-12);
        }

        #[test]
        fn flow_reproduces_matrix_equation(q in arb_quat(), w in proptest::array::uniform3(-2.0f64..2.0)) {
            // dR/dt = −*Ω R with *Ω_ij = ε_ijk Ω_k, i.e. dR/dt = [Ω×] R.
            let omega = Vec3::from(w);
            let h = 1e-6;
            let step = |sign: f64| {
                let d = quaternion_rhs(&q, &omega, 0.0);
                Quaternion(std::array::from_fn(|i| q.0[i] + sign * h * d[i])).rotation_matrix()
            };
            let dr = (step(1.0) - step(-1.0)) / (2.0 * h);
            let star = Matrix3::new(0.0, omega.z, -omega.y, -omega.z, 0.0, omega.x, omega.y, -omega.x, 0.0);
            let expect = -star * q.rotation_matrix();
            prop_assert!(max_abs(&(dr - expect)) < 1e-9);
        }

        #[test]
        fn constraint_rate_law(q in arb_quat(), s in 0.8f64..1.2, eta in 0.1f64..5.0,
                               w in proptest::array::uniform3(-2.0f64..2.0)) {
            let q = Quaternion(q.0.map(|v| v * s));
            let d = quaternion_rhs(&q, &Vec3::from(w), eta);
            let dc: f64 = 2.0 * q.0.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
            let c = q.constraint();
            prop_assert!((dc - (-eta * (c + 1.0) * c)).abs() < 1e-12);
        }
    }
}
