//! Forward kinematics and Jacobians for a 7-joint revolute serial chain.
//!
//! The chain is described by a TOML document (see `configs/panda.toml` for the
//! shipped Franka Panda parameters): per joint a unit rotation axis and the
//! fixed parent-to-joint transform, plus joint limits, an optional base frame
//! and flange offset, and a `reference` block that makes every file
//! self-validating (FK at the reference configuration must reproduce the
//! declared flange pose).
//!
//! All functions here are pure; [`KinematicChain`] is immutable after load and
//! safe to share across threads.

use nalgebra::{SMatrix, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transform::{rotation_about_axis, RigidTransform, TransformError, TransformSpec};
use crate::{JointVector, DOF};

/// Number of frames returned by [`forward_kinematics`]: one per link plus the flange.
pub const FRAME_COUNT: usize = DOF + 1;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("failed to read chain file: {0}")]
    Io(#[from] std::io::Error),
    #[error("chain file parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("joints: wrong joint count, expected {DOF}, found {found}")]
    WrongJointCount { found: usize },
    #[error("joints[{index}].axis: expected unit vector, norm = {norm}")]
    NonUnitAxis { index: usize, norm: f64 },
    #[error("joints[{index}].fixed_transform: {source}")]
    BadJointTransform {
        index: usize,
        source: TransformError,
    },
    #[error("{field}: {source}")]
    BadTransform {
        field: &'static str,
        source: TransformError,
    },
    #[error("limits: limit ordering violated, lower[{index}] = {lower} >= upper[{index}] = {upper}")]
    LimitOrdering { index: usize, lower: f64, upper: f64 },
    #[error("joint angles contain a non-finite entry")]
    NonFiniteAngles,
    #[error(
        "reference: FK at reference q disagrees with declared flange pose \
         (translation error {translation_err:.3e} m, rotation error {rotation_err:.3e} rad)"
    )]
    ReferenceMismatch {
        translation_err: f64,
        rotation_err: f64,
    },
    #[error("link index {index} out of range 0..={max}")]
    LinkIndexOutOfRange { index: usize, max: usize },
}

/// Joint positions `q`, exactly 7 finite radian values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig {
    angles: [f64; DOF],
}

impl JointConfig {
    pub fn new(angles: [f64; DOF]) -> Result<Self, KinematicsError> {
        if !angles.iter().all(|a| a.is_finite()) {
            return Err(KinematicsError::NonFiniteAngles);
        }
        Ok(Self { angles })
    }

    pub fn zeros() -> Self {
        Self { angles: [0.0; DOF] }
    }

    pub fn angles(&self) -> &[f64; DOF] {
        &self.angles
    }

    pub fn as_vector(&self) -> JointVector {
        JointVector::from(self.angles)
    }

    pub fn from_vector(v: &JointVector) -> Result<Self, KinematicsError> {
        let mut angles = [0.0; DOF];
        angles.copy_from_slice(v.as_slice());
        Self::new(angles)
    }
}

/// Box limits on joint positions, `lower[i] < upper[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lower: [f64; DOF],
    pub upper: [f64; DOF],
}

impl JointLimits {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for i in 0..DOF {
            // NaN limits fail this check too.
            let ordered = self.lower[i].is_finite()
                && self.upper[i].is_finite()
                && self.lower[i] < self.upper[i];
            if !ordered {
                return Err(KinematicsError::LimitOrdering {
                    index: i,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, q: &JointConfig, tol: f64) -> bool {
        q.angles
            .iter()
            .enumerate()
            .all(|(i, &a)| a >= self.lower[i] - tol && a <= self.upper[i] + tol)
    }

    pub fn clamp(&self, q: &JointConfig) -> JointConfig {
        let mut angles = *q.angles();
        for ((a, &lo), &hi) in angles.iter_mut().zip(&self.lower).zip(&self.upper) {
            *a = a.clamp(lo, hi);
        }
        JointConfig { angles }
    }
}

/// One revolute joint: unit rotation axis in the joint frame, and the fixed
/// transform from the parent frame to the joint frame.
#[derive(Debug, Clone)]
pub struct JointDescription {
    pub axis: Vector3<f64>,
    pub fixed_transform: RigidTransform,
}

/// An immutable 7-revolute-joint serial chain.
#[derive(Debug, Clone)]
pub struct KinematicChain {
    pub name: String,
    pub base_frame: RigidTransform,
    pub joints: Vec<JointDescription>,
    pub flange_offset: RigidTransform,
    pub limits: JointLimits,
}

/// 6x7 geometric Jacobian of the flange: rows 0..3 linear (m/rad), rows 3..6
/// angular (rad/rad), expressed in the world (base) frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianMatrix {
    pub entries: SMatrix<f64, 6, 7>,
}

impl JacobianMatrix {
    pub fn linear(&self) -> SMatrix<f64, 3, 7> {
        self.entries.fixed_rows::<3>(0).into_owned()
    }

    pub fn angular(&self) -> SMatrix<f64, 3, 7> {
        self.entries.fixed_rows::<3>(3).into_owned()
    }
}

// ---- chain file schema -----------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default = "TransformSpec::identity")]
    pub base_frame: TransformSpec,
    pub flange_offset: TransformSpec,
    pub joints: Vec<JointSpec>,
    pub limits: JointLimits,
    pub reference: ReferenceSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointSpec {
    pub axis: [f64; 3],
    pub fixed_transform: TransformSpec,
}

/// Self-validation block: FK at `q` must reproduce `flange_pose`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub q: [f64; DOF],
    pub flange_pose: TransformSpec,
}

/// Tolerance used when checking the reference block of a chain file.
pub const REFERENCE_TOL: f64 = 1e-6;

/// Parses and validates a chain description document.
pub fn load_chain(document: &str) -> Result<KinematicChain, KinematicsError> {
    let file: ChainFile = toml::from_str(document)?;
    chain_from_file(&file)
}

pub fn load_chain_path(path: &std::path::Path) -> Result<KinematicChain, KinematicsError> {
    load_chain(&std::fs::read_to_string(path)?)
}

pub fn chain_from_file(file: &ChainFile) -> Result<KinematicChain, KinematicsError> {
    if file.joints.len() != DOF {
        return Err(KinematicsError::WrongJointCount {
            found: file.joints.len(),
        });
    }
    file.limits.validate()?;

    let base_frame = file
        .base_frame
        .to_transform()
        .map_err(|source| KinematicsError::BadTransform {
            field: "base_frame",
            source,
        })?;
    let flange_offset =
        file.flange_offset
            .to_transform()
            .map_err(|source| KinematicsError::BadTransform {
                field: "flange_offset",
                source,
            })?;

    let mut joints = Vec::with_capacity(DOF);
    for (index, spec) in file.joints.iter().enumerate() {
        let axis = Vector3::from(spec.axis);
        let norm = axis.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(KinematicsError::NonUnitAxis { index, norm });
        }
        let fixed_transform = spec
            .fixed_transform
            .to_transform()
            .map_err(|source| KinematicsError::BadJointTransform { index, source })?;
        joints.push(JointDescription {
            axis,
            fixed_transform,
        });
    }

    let chain = KinematicChain {
        name: file.name.clone(),
        base_frame,
        joints,
        flange_offset,
        limits: file.limits,
    };

    // Self-validation against the declared reference pose.
    let q_ref = JointConfig::new(file.reference.q)?;
    let declared =
        file.reference
            .flange_pose
            .to_transform()
            .map_err(|source| KinematicsError::BadTransform {
                field: "reference.flange_pose",
                source,
            })?;
    let actual = forward_kinematics(&chain, &q_ref)[DOF];
    let translation_err = (actual.translation - declared.translation).norm();
    let rotation_err = actual.rotation_distance(&declared);
    if translation_err > REFERENCE_TOL || rotation_err > REFERENCE_TOL {
        return Err(KinematicsError::ReferenceMismatch {
            translation_err,
            rotation_err,
        });
    }

    Ok(chain)
}

// ---- kinematics ------------------------------------------------------------

/// World pose of every link frame plus the flange (8 transforms).
///
/// Frame `i < 7` is the post-rotation frame of joint `i`; frame 7 is the
/// flange. Frame `i` depends only on `q[0..=i]`.
pub fn forward_kinematics(chain: &KinematicChain, q: &JointConfig) -> [RigidTransform; FRAME_COUNT] {
    let mut frames = [RigidTransform::identity(); FRAME_COUNT];
    let mut current = chain.base_frame;
    for (i, joint) in chain.joints.iter().enumerate() {
        current = current.compose(&joint.fixed_transform);
        let spin = RigidTransform {
            rotation: rotation_about_axis(&joint.axis, q.angles[i]),
            translation: Vector3::zeros(),
        };
        current = current.compose(&spin);
        frames[i] = current;
    }
    frames[DOF] = current.compose(&chain.flange_offset);
    frames
}

/// World joint axes and origins, used by both Jacobian routines.
fn joint_axes_and_origins(
    chain: &KinematicChain,
    frames: &[RigidTransform; FRAME_COUNT],
) -> [(Vector3<f64>, Vector3<f64>); DOF] {
    let mut out = [(Vector3::zeros(), Vector3::zeros()); DOF];
    for i in 0..DOF {
        // Rotation about a joint's own axis leaves that axis fixed, so the
        // post-rotation frame gives the same world axis as the pre-rotation one.
        let axis_world = frames[i].rotation * chain.joints[i].axis;
        out[i] = (axis_world, frames[i].translation);
    }
    out
}

/// Geometric Jacobian of the flange in the world frame.
///
/// Column `i` is `(z_i x (p_ee - p_i), z_i)` with `z_i` the world axis of
/// joint `i` and `p_i` its origin.
pub fn geometric_jacobian(chain: &KinematicChain, q: &JointConfig) -> JacobianMatrix {
    let frames = forward_kinematics(chain, q);
    geometric_jacobian_from_frames(chain, &frames)
}

pub fn geometric_jacobian_from_frames(
    chain: &KinematicChain,
    frames: &[RigidTransform; FRAME_COUNT],
) -> JacobianMatrix {
    let p_ee = frames[DOF].translation;
    let axes = joint_axes_and_origins(chain, frames);
    let mut entries = SMatrix::<f64, 6, 7>::zeros();
    for (i, (z, p)) in axes.iter().enumerate() {
        let linear = z.cross(&(p_ee - p));
        entries.fixed_view_mut::<3, 1>(0, i).copy_from(&linear);
        entries.fixed_view_mut::<3, 1>(3, i).copy_from(z);
    }
    JacobianMatrix { entries }
}

/// Geometric Jacobian with both blocks re-expressed in the flange frame,
/// for callers whose Cartesian deltas are tool-relative.
pub fn flange_frame_jacobian(chain: &KinematicChain, q: &JointConfig) -> JacobianMatrix {
    let frames = forward_kinematics(chain, q);
    let world = geometric_jacobian_from_frames(chain, &frames);
    let rt = frames[DOF].rotation.transpose();
    let mut entries = SMatrix::<f64, 6, 7>::zeros();
    entries
        .fixed_view_mut::<3, 7>(0, 0)
        .copy_from(&(rt * world.linear()));
    entries
        .fixed_view_mut::<3, 7>(3, 0)
        .copy_from(&(rt * world.angular()));
    JacobianMatrix { entries }
}

/// 3x7 position Jacobian of a point rigidly attached to a link.
///
/// `link_index` 0..=6 selects a link frame, 7 the flange; `local_point` is
/// expressed in that frame. Columns for joints beyond the link are zero.
pub fn point_jacobian(
    chain: &KinematicChain,
    q: &JointConfig,
    link_index: usize,
    local_point: &Vector3<f64>,
) -> Result<SMatrix<f64, 3, 7>, KinematicsError> {
    let frames = forward_kinematics(chain, q);
    point_jacobian_from_frames(chain, &frames, link_index, local_point)
}

pub fn point_jacobian_from_frames(
    chain: &KinematicChain,
    frames: &[RigidTransform; FRAME_COUNT],
    link_index: usize,
    local_point: &Vector3<f64>,
) -> Result<SMatrix<f64, 3, 7>, KinematicsError> {
    if link_index >= FRAME_COUNT {
        return Err(KinematicsError::LinkIndexOutOfRange {
            index: link_index,
            max: DOF,
        });
    }
    let p_world = frames[link_index].apply(local_point);
    // The flange moves with joint 6.
    let last_joint = link_index.min(DOF - 1);
    let axes = joint_axes_and_origins(chain, frames);
    let mut jac = SMatrix::<f64, 3, 7>::zeros();
    for (i, (z, p)) in axes.iter().enumerate().take(last_joint + 1) {
        let col = z.cross(&(p_world - p));
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&col);
    }
    Ok(jac)
}

/// World position of a point attached to a link, without allocating Jacobians.
pub fn link_point_world(
    frames: &[RigidTransform; FRAME_COUNT],
    link_index: usize,
    local_point: &Vector3<f64>,
) -> Vector3<f64> {
    frames[link_index].apply(local_point)
}
