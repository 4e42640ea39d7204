//! Metric similarity alignment between coordinate worlds and rigid lifting
//! of pose trajectories into the robot base frame.
//!
//! The alignment solves `min over (s, R, t) of sum ||s R x + t - y||^2` in
//! closed form (SVD with determinant correction), reporting the residual RMS
//! and leaving acceptance policy to callers.

use nalgebra::{Matrix3, UnitQuaternion, Vector3, SVD};
use serde::Deserialize;
use thiserror::Error;

use crate::transform::RigidTransform;

#[derive(Debug, Error)]
pub enum FramesError {
    #[error("degenerate correspondence set ({n} points): {reason}")]
    DegenerateInput { n: usize, reason: String },
    #[error("point arrays differ in length: {source_len} vs {target_len}")]
    LengthMismatch { source_len: usize, target_len: usize },
}

/// Similarity transform y = s R x + t.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityTransform {
    pub scale: f64,
    rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn new(scale: f64, rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        // Reuse the rigid-transform canonicalization for the sign convention.
        let canonical = RigidTransform::new(rotation, translation);
        Self {
            scale,
            rotation: *canonical.rotation(),
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(1.0, UnitQuaternion::identity(), Vector3::zeros())
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }

    /// Inverse similarity: (1/s, R^T, -(1/s) R^T t).
    pub fn inverse(&self) -> Self {
        let inv_rot = self.rotation.inverse();
        Self::new(
            1.0 / self.scale,
            inv_rot,
            -(inv_rot * self.translation) / self.scale,
        )
    }

    /// Composition: `self` after `first` (self o first).
    pub fn compose(&self, first: &SimilarityTransform) -> Self {
        Self::new(
            self.scale * first.scale,
            self.rotation * first.rotation,
            self.scale * (self.rotation * first.translation) + self.translation,
        )
    }
}

/// Estimation output: the transform plus the least-squares residual RMS.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityFit {
    pub transform: SimilarityTransform,
    pub residual_rms: f64,
}

/// Closed-form least-squares similarity estimate mapping `source` onto
/// `target`. Requires n >= 3 non-collinear source points.
pub fn estimate_similarity(
    source: &[Vector3<f64>],
    target: &[Vector3<f64>],
) -> Result<SimilarityFit, FramesError> {
    if source.len() != target.len() {
        return Err(FramesError::LengthMismatch {
            source_len: source.len(),
            target_len: target.len(),
        });
    }
    let n = source.len();
    if n < 3 {
        return Err(FramesError::DegenerateInput {
            n,
            reason: "at least 3 point pairs required".to_owned(),
        });
    }
    let inv_n = 1.0 / n as f64;
    let mu_src: Vector3<f64> = source.iter().sum::<Vector3<f64>>() * inv_n;
    let mu_tgt: Vector3<f64> = target.iter().sum::<Vector3<f64>>() * inv_n;

    let mut var_src = 0.0;
    let mut cov = Matrix3::zeros();
    for (x, y) in source.iter().zip(target) {
        let dx = x - mu_src;
        let dy = y - mu_tgt;
        var_src += dx.norm_squared();
        cov += dy * dx.transpose();
    }
    var_src *= inv_n;
    cov *= inv_n;

    if var_src < 1e-30 {
        return Err(FramesError::DegenerateInput {
            n,
            reason: "source points are coincident".to_owned(),
        });
    }

    let svd = SVD::new(cov, true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let d = svd.singular_values;
    // Rank must be >= 2: a collinear source set cannot pin the rotation.
    if d[1] <= 1e-12 * d[0].max(f64::MIN_POSITIVE) {
        return Err(FramesError::DegenerateInput {
            n,
            reason: "source points are collinear".to_owned(),
        });
    }

    // Reflection guard: flip the smallest singular direction if needed.
    let det_sign = (u.determinant() * v_t.determinant()).signum();
    let s_diag = Vector3::new(1.0, 1.0, det_sign);
    let r = u * Matrix3::from_diagonal(&s_diag) * v_t;
    let scale = (d[0] + d[1] + det_sign * d[2]) / var_src;
    let rotation = UnitQuaternion::from_matrix(&r);
    let translation = mu_tgt - scale * (rotation * mu_src);
    let transform = SimilarityTransform::new(scale, rotation, translation);

    let ss: f64 = source
        .iter()
        .zip(target)
        .map(|(x, y)| (transform.apply_point(x) - y).norm_squared())
        .sum();
    Ok(SimilarityFit {
        transform,
        residual_rms: (ss * inv_n).sqrt(),
    })
}

/// Forward map y = s R x + t applied to every point.
pub fn apply_similarity(s: &SimilarityTransform, pts: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    pts.iter().map(|p| s.apply_point(p)).collect()
}

/// Calibrated transform from the RGB-D camera frame to the robot base frame.
#[derive(Debug, Clone, Copy)]
pub struct CameraExtrinsics {
    pub transform: RigidTransform,
}

/// Lift a camera-frame pose trajectory into the robot base frame:
/// `p_out[t] = M o p_in[t]`.
pub fn to_robot_frame(
    extrinsics: &CameraExtrinsics,
    traj: &[RigidTransform],
) -> Vec<RigidTransform> {
    traj.iter().map(|p| &extrinsics.transform * p).collect()
}

/// JSON wire format for correspondence point sets.
#[derive(Debug, Deserialize)]
pub struct CorrespondenceSet {
    pub source: Vec<[f64; 3]>,
    pub target: Vec<[f64; 3]>,
}

impl CorrespondenceSet {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn source_points(&self) -> Vec<Vector3<f64>> {
        self.source.iter().map(|p| Vector3::from(*p)).collect()
    }

    pub fn target_points(&self) -> Vec<Vector3<f64>> {
        self.target.iter().map(|p| Vector3::from(*p)).collect()
    }
}
