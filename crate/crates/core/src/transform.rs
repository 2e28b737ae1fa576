//! Rigid transforms as an explicit rotation matrix plus translation.
//!
//! Rotations are plain 3x3 matrices so that config files, tests, and the
//! Jacobian code all share one unambiguous representation. Roll/pitch/yaw
//! appears only at the file-format boundary (`R = Rz(yaw) Ry(pitch) Rx(roll)`).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `R'R - I` and `det R - 1` for accepting a rotation matrix.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("rotation is not orthonormal: max |R'R - I| = {defect:.3e}")]
    NotOrthonormal { defect: f64 },
    #[error("rotation determinant {det} is not +1")]
    NotProperRotation { det: f64 },
    #[error("transform contains non-finite entries")]
    NonFinite,
}

/// A proper rigid transform `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform, validating orthonormality and determinant.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, TransformError> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(TransformError::NonFinite);
        }
        let defect = (rotation.transpose() * rotation - Matrix3::identity())
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if defect >= ORTHONORMALITY_TOL {
            return Err(TransformError::NotOrthonormal { defect });
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() >= ORTHONORMALITY_TOL {
            return Err(TransformError::NotProperRotation { det });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_rpy_translation(rpy: [f64; 3], translation: [f64; 3]) -> Self {
        Self {
            rotation: rotation_from_rpy(rpy),
            translation: Vector3::from(translation),
        }
    }

    /// `(self.compose(other))(x) = self(other(x))`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn apply(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Angle (rad) of the relative rotation between two transforms.
    pub fn rotation_distance(&self, other: &RigidTransform) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }
}

/// Rotation about an arbitrary unit axis (Rodrigues).
pub fn rotation_about_axis(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    let k = Matrix3::new(
        0.0, -axis.z, axis.y, //
        axis.z, 0.0, -axis.x, //
        -axis.y, axis.x, 0.0,
    );
    Matrix3::identity() + k * s + k * k * (1.0 - c)
}

/// `R = Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn rotation_from_rpy([roll, pitch, yaw]: [f64; 3]) -> Matrix3<f64> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

/// Serde-facing form used by every config file: `{ rotation_rpy, translation }`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TransformSpec {
    pub rotation_rpy: [f64; 3],
    pub translation: [f64; 3],
}

impl TransformSpec {
    pub fn identity() -> Self {
        Self {
            rotation_rpy: [0.0; 3],
            translation: [0.0; 3],
        }
    }

    pub fn to_transform(&self) -> Result<RigidTransform, TransformError> {
        RigidTransform::new(
            rotation_from_rpy(self.rotation_rpy),
            Vector3::from(self.translation),
        )
    }
}
