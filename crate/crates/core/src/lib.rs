//! Runtime geometric safety shield for 7-DOF manipulator action streams.
//!
//! A policy emits Cartesian end-effector deltas; this crate clamps each one to
//! the safe set before it reaches the robot. Per control step it solves a
//! small strictly convex QP:
//!
//! ```text
//!     minimize   ||J(q) dq - u||^2 + lambda ||dq||^2
//!     subject to grad_h(q)' dq + gamma * h(q) >= 0     (collision barrier)
//!                q_min <= q + dq <= q_max              (joint limits)
//! ```
//!
//! where `h` is the minimum clearance between link-mounted collision spheres
//! and static obstacles. The gripper bit of the incoming action is never
//! touched.
//!
//! Crate layout:
//! - [`kinematics`] — serial-chain FK, geometric and point Jacobians
//! - [`collision`] — sphere/obstacle scenes, barrier value and gradient
//! - [`qp`] — dense active-set solver for the strictly convex QP
//! - [`filter`] — the per-step safety filter composing the three above
//! - [`sim`] — deterministic kinematic rollout harness and scenario fixtures
//! - [`encoding`] — depth-to-pseudo-color formatting and zero-mask images
//! - [`saliency`] — spatial-map evaluation metrics (entropy, Pearson, mass)

pub mod collision;
pub mod encoding;
pub mod filter;
pub mod kinematics;
pub mod qp;
pub mod saliency;
pub mod sim;
pub mod transform;

pub use collision::{BarrierEvaluation, CollisionScene, CollisionSphere, Obstacle};
pub use filter::{ActionCommand, FilterParams, FilterResult};
pub use kinematics::{JacobianMatrix, JointConfig, JointLimits, KinematicChain};
pub use qp::{QpProblem, QpSolution};
pub use sim::{EpisodeLog, PolicySpec, ScenarioConfig};
pub use transform::RigidTransform;

/// Joint-space dimension of the supported manipulator class.
pub const DOF: usize = 7;

/// 7-vector over joint space.
pub type JointVector = nalgebra::SVector<f64, 7>;
/// 6-vector of stacked (linear, angular) Cartesian displacement.
pub type SpatialVector = nalgebra::SVector<f64, 6>;
