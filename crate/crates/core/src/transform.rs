//! Rigid transforms stored as canonical unit quaternion + translation.
//!
//! The quaternion is kept in (w, x, y, z) order with `w >= 0`; when `w == 0`
//! the first nonzero vector component is made positive. This removes the
//! double-cover sign ambiguity so that equal rotations compare bit-equal.
//! 4x4 homogeneous matrices appear only at I/O boundaries.

use nalgebra::{Matrix3, Matrix4, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

/// Accepted deviation from unit norm / orthonormality on ingestion.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("quaternion norm {norm} deviates from 1 by more than {UNIT_TOL}")]
    NonUnitQuaternion { norm: f64 },
    #[error("rotation block is not orthonormal with det +1 (deviation {deviation})")]
    NonOrthonormal { deviation: f64 },
    #[error("matrix is not an affine rigid transform (bottom row {row:?})")]
    BadHomogeneousRow { row: [f64; 4] },
}

/// A rigid body transform (rotation + translation), meters and radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

fn canonicalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let c = q.coords; // (x, y, z, w) in nalgebra storage order
    let flip = if c.w != 0.0 {
        c.w < 0.0
    } else if c.x != 0.0 {
        c.x < 0.0
    } else if c.y != 0.0 {
        c.y < 0.0
    } else {
        c.z < 0.0
    };
    if flip {
        UnitQuaternion::new_unchecked(Quaternion::new(-c.w, -c.x, -c.y, -c.z))
    } else {
        q
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Build from rotation and translation; the quaternion sign is canonicalized.
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: canonicalize(rotation),
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    /// Build from raw (w, x, y, z) components, validating the unit-norm invariant.
    pub fn from_wxyz(
        wxyz: [f64; 4],
        translation: Vector3<f64>,
    ) -> Result<Self, TransformError> {
        let [w, x, y, z] = wxyz;
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(TransformError::NonUnitQuaternion { norm });
        }
        let q = UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z));
        Ok(Self::new(q, translation))
    }

    /// URDF-style fixed-frame roll/pitch/yaw (Rz(yaw) * Ry(pitch) * Rx(roll)).
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        let q = UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]);
        Self::new(q, Vector3::new(xyz[0], xyz[1], xyz[2]))
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Components in (w, x, y, z) order.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let c = self.rotation.coords;
        [c.w, c.x, c.y, c.z]
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Validate and convert a 4x4 homogeneous matrix.
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self, TransformError> {
        let row = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if row != [0.0, 0.0, 0.0, 1.0] {
            return Err(TransformError::BadHomogeneousRow { row });
        }
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let dev = (r.transpose() * r - Matrix3::identity()).abs().max();
        if dev > UNIT_TOL || (r.determinant() - 1.0).abs() > UNIT_TOL {
            return Err(TransformError::NonOrthonormal { deviation: dev });
        }
        let q = UnitQuaternion::from_matrix(&r);
        let t = Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]);
        Ok(Self::new(q, t))
    }

    pub fn inverse(&self) -> Self {
        let inv_rot = self.rotation.inverse();
        Self::new(inv_rot, -(inv_rot * self.translation))
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Axis-angle rotation vector v = theta * axis with ||v|| <= pi.
    ///
    /// At the theta = pi branch boundary the axis sign is fixed so its first
    /// nonzero component is positive.
    pub fn rotation_vector(&self) -> Vector3<f64> {
        let c = self.rotation.coords;
        let v = Vector3::new(c.x, c.y, c.z);
        let s = v.norm();
        if s < 1e-12 {
            // Small-angle: q ~ (1, v/2), theta*axis ~ 2v/w.
            return v * (2.0 / c.w.max(f64::MIN_POSITIVE));
        }
        let theta = 2.0 * s.atan2(c.w);
        // Canonical w >= 0 already keeps the first nonzero vector component
        // positive when w == 0(theta == pi).
        v * (theta / s)
    }

    pub fn from_rotation_vector(v: &Vector3<f64>, translation: Vector3<f64>) -> Self {
        let theta = v.norm();
        let q = if theta < 1e-12 {
            let half = v * 0.5;
            UnitQuaternion::new_normalize(Quaternion::new(1.0, half.x, half.y, half.z))
        } else {
            let axis = v / theta;
            let (sin_h, cos_h) = (0.5 * theta).sin_cos();
            UnitQuaternion::new_unchecked(Quaternion::new(
                cos_h,
                sin_h * axis.x,
                sin_h * axis.y,
                sin_h * axis.z,
            ))
        };
        Self::new(q, translation)
    }

    /// Geodesic angle between the two rotations, radians in [0, pi].
    pub fn rotation_angle_to(&self, other: &Self) -> f64 {
        self.rotation.angle_to(&other.rotation)
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * rhs.rotation,
            self.rotation * rhs.translation + self.translation,
        )
    }
}

impl std::ops::Mul for &RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: &RigidTransform) -> RigidTransform {
        *self * *rhs
    }
}

/// Shortest-arc spherical interpolation with canonical output.
///
/// `u = 0` and `u = 1` return the endpoints exactly (after canonicalization).
pub fn slerp_shortest(
    a: &UnitQuaternion<f64>,
    b: &UnitQuaternion<f64>,
    u: f64,
) -> UnitQuaternion<f64> {
    let a = canonicalize(*a);
    if u == 0.0 {
        return a;
    }
    let b = canonicalize(*b);
    if u == 1.0 {
        return b;
    }
    let mut dot = a.coords.dot(&b.coords);
    let b = if dot < 0.0 {
        dot = -dot;
        UnitQuaternion::new_unchecked(-b.into_inner())
    } else {
        b
    };
    let q = if dot > 1.0 - 1e-12 {
        // Nearly parallel: normalized linear interpolation is exact enough.
        UnitQuaternion::new_normalize(Quaternion::from(
            a.coords.lerp(&b.coords, u),
        ))
    } else {
        let omega = dot.clamp(-1.0, 1.0).acos();
        let sin_omega = omega.sin();
        let wa = ((1.0 - u) * omega).sin() / sin_omega;
        let wb = (u * omega).sin() / sin_omega;
        UnitQuaternion::new_normalize(Quaternion::from(a.coords * wa + b.coords * wb))
    };
    canonicalize(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn canonical_w_nonnegative() {
        let q = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 3.0);
        let neg = UnitQuaternion::new_unchecked(-q.into_inner());
        let a = RigidTransform::new(q, Vector3::zeros());
        let b = RigidTransform::new(neg, Vector3::zeros());
        assert_eq!(a.quaternion_wxyz(), b.quaternion_wxyz());
        assert!(a.quaternion_wxyz()[0] >= 0.0);
    }

    #[test]
    fn matrix_round_trip() {
        let t = RigidTransform::from_xyz_rpy([0.1, -0.2, 0.3], [0.4, -0.5, 0.6]);
        let back = RigidTransform::from_matrix(&t.to_matrix()).unwrap();
        assert_abs_diff_eq!(t.rotation_angle_to(&back), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((t.translation() - back.translation()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn from_matrix_rejects_shear() {
        let mut m = Matrix4::identity();
        m[(0, 1)] = 0.1;
        assert!(matches!(
            RigidTransform::from_matrix(&m),
            Err(TransformError::NonOrthonormal { .. })
        ));
    }

    #[test]
    fn compose_against_matrices() {
        let a = RigidTransform::from_xyz_rpy([1.0, 2.0, 3.0], [0.1, 0.2, 0.3]);
        let b = RigidTransform::from_xyz_rpy([-0.4, 0.5, 0.0], [0.0, -0.7, 1.1]);
        let ab = a * b;
        let m = a.to_matrix() * b.to_matrix();
        assert_abs_diff_eq!((ab.to_matrix() - m).abs().max(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = RigidTransform::from_xyz_rpy([0.3, 0.2, -0.9], [1.2, -0.3, 2.0]);
        let i = t * t.inverse();
        assert_abs_diff_eq!(i.translation().norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(i.rotation().angle(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_vector_quarter_turn() {
        let t = RigidTransform::from_xyz_rpy([0.0; 3], [0.0, 0.0, FRAC_PI_2]);
        let v = t.rotation_vector();
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.z, FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn rotation_vector_pi_boundary_positive_axis() {
        // 180 deg about -x must come back as (+pi, 0, 0).
        let t = RigidTransform::from_rotation_vector(&Vector3::new(-PI, 0.0, 0.0), Vector3::zeros());
        let v = t.rotation_vector();
        assert_abs_diff_eq!(v.x, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_vector_round_trip_below_pi() {
        let cases = [
            Vector3::new(0.3, -0.4, 0.5),
            Vector3::new(1e-9, 0.0, 0.0),
            Vector3::new(0.0, 3.1, 0.2),
            Vector3::new(-2.0, 1.0, 1.5),
        ];
        for v in cases {
            assert!(v.norm() < PI);
            let t = RigidTransform::from_rotation_vector(&v, Vector3::zeros());
            let back = t.rotation_vector();
            assert_abs_diff_eq!((v - back).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn slerp_endpoints_exact() {
        let a = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.3);
        let b = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 1.1);
        assert_eq!(slerp_shortest(&a, &b, 0.0), a);
        assert_eq!(slerp_shortest(&a, &b, 1.0), b);
    }

    #[test]
    fn slerp_antipodal_sign_is_identity_path() {
        let q = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.8);
        let neg = UnitQuaternion::new_unchecked(-q.into_inner());
        let mid = slerp_shortest(&q, &neg, 0.5);
        assert_abs_diff_eq!(mid.angle_to(&q), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn slerp_midpoint_single_axis() {
        let a = UnitQuaternion::identity();
        let b = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        let mid = slerp_shortest(&a, &b, 0.5);
        assert_abs_diff_eq!(mid.angle(), FRAC_PI_2 / 2.0, epsilon = 1e-12);
    }
}
