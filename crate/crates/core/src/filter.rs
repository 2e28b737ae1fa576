//! The per-step action safety filter.
//!
//! Given the measured joints `q` and a policy action (Cartesian delta pose
//! plus gripper bit), solves
//!
//! ```text
//!     min  ||J(q) dq - u||^2 + lambda ||dq||^2
//!     s.t. grad_h_pair(q)' dq + gamma * h_pair(q) >= 0   per nearby pair
//!          max(q_min - q, -cap) <= dq <= min(q_max - q, cap)
//! ```
//!
//! and returns the safe joint displacement. `q` enters only through `J` and
//! the barrier linearization, so the problem stays a strictly convex QP.
//!
//! By default one barrier row is enforced per (sphere, obstacle) pair whose
//! clearance is below `activation_distance`; this is a superset of the
//! single-minimum constraint and avoids gradient chattering when the nearest
//! pair switches. `CbfConstraintMode::ActiveMinOnly` restores the literal
//! single-row behavior.
//!
//! The gripper command is decoupled from spatial motion and passes through
//! bit-identically.

use nalgebra::{SMatrix, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{evaluate_barrier, CollisionScene, SceneError};
use crate::kinematics::{
    forward_kinematics, geometric_jacobian_from_frames, JointConfig, KinematicChain,
    KinematicsError,
};
use crate::qp::{
    solve_qp_warm, BoxBounds, ConstraintId, LinearConstraint, QpError, QpProblem, QpSolution,
};
use crate::{JointVector, SpatialVector, DOF};

/// In-limits tolerance applied to the incoming state.
const LIMIT_TOL: f64 = 1e-8;
/// Multiplier magnitude above which a constraint counts as shaping the output.
const ACTIVE_MULTIPLIER_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("action invalid: {0}")]
    InvalidAction(String),
    #[error("filter params invalid: {0}")]
    InvalidParams(String),
    #[error("joint {index} = {value} outside limits [{lower}, {upper}]")]
    JointLimits {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("qp solve failed: {0}")]
    Qp(#[from] QpError),
}

/// Policy output: Cartesian delta pose plus a binary gripper command.
///
/// `translation` in meters, `rotation` an axis-angle delta (rad, norm < pi),
/// both expressed in the robot base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCommand {
    pub translation: [f64; 3],
    pub rotation: [f64; 3],
    pub gripper: bool,
}

impl ActionCommand {
    pub fn zero() -> Self {
        Self {
            translation: [0.0; 3],
            rotation: [0.0; 3],
            gripper: false,
        }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let all = self.translation.iter().chain(self.rotation.iter());
        if !all.clone().all(|v| v.is_finite()) {
            return Err(FilterError::InvalidAction("non-finite entry".into()));
        }
        let rot_norm = Vector3::from(self.rotation).norm();
        if rot_norm >= std::f64::consts::PI {
            return Err(FilterError::InvalidAction(format!(
                "rotation delta norm {rot_norm} must be < pi"
            )));
        }
        Ok(())
    }

    /// Stacked (translation, rotation) 6-vector tracked by the QP objective.
    pub fn spatial(&self) -> SpatialVector {
        SpatialVector::from([
            self.translation[0],
            self.translation[1],
            self.translation[2],
            self.rotation[0],
            self.rotation[1],
            self.rotation[2],
        ])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            translation: self.translation.map(|v| v * factor),
            rotation: self.rotation.map(|v| v * factor),
            gripper: self.gripper,
        }
    }
}

/// Which pairs contribute barrier rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CbfConstraintMode {
    /// One row per pair with clearance below `activation_distance`.
    #[default]
    AllPairsWithinActivation,
    /// Only the minimum-clearance pair contributes a row.
    ActiveMinOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    /// Damping of the least-squares objective; also lower-bounds the Hessian.
    pub lambda: f64,
    /// Barrier decay rate in (0, 1].
    pub gamma: f64,
    /// Pairs closer than this contribute constraint rows (m).
    pub activation_distance: f64,
    /// Infinity-norm cap on the joint step (rad).
    pub step_cap: f64,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    pub cbf_mode: CbfConstraintMode,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            // Small enough that damping costs well under 1% tracking error at
            // desk scale, large enough to keep the Hessian comfortably
            // positive definite near singular poses.
            lambda: 2e-4,
            gamma: 0.5,
            activation_distance: 0.15,
            step_cap: 0.02,
            qp_tol: 1e-9,
            qp_max_iter: 100,
            cbf_mode: CbfConstraintMode::default(),
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |msg: String| Err(FilterError::InvalidParams(msg));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.lambda) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if !positive(self.gamma) || self.gamma > 1.0 {
            return bad(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if !positive(self.activation_distance) {
            return bad(format!(
                "activation_distance must be > 0, got {}",
                self.activation_distance
            ));
        }
        if !positive(self.step_cap) {
            return bad(format!("step_cap must be > 0, got {}", self.step_cap));
        }
        if !positive(self.qp_tol) {
            return bad(format!("qp_tol must be > 0, got {}", self.qp_tol));
        }
        Ok(())
    }
}

/// How the filter arrived at its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Barrier-constrained tracking QP.
    Nominal,
    /// Start state had negative clearance; output is the box-clamped step of
    /// steepest barrier ascent, not a tracking step.
    UnsafeStartRecovery,
}

/// Condensed QP diagnostics carried in the filter output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub active_set_size: usize,
}

impl SolverSummary {
    fn from_solution(sol: &QpSolution) -> Self {
        Self {
            iterations: sol.iterations,
            kkt_residual: sol.kkt_residual,
            objective: sol.objective,
            active_set_size: sol.active_set.len(),
        }
    }

    fn none() -> Self {
        Self {
            iterations: 0,
            kkt_residual: 0.0,
            objective: 0.0,
            active_set_size: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterResult {
    pub dq_safe: JointVector,
    /// Bit-identical copy of the incoming gripper command.
    pub gripper: bool,
    pub mode: FilterMode,
    /// True when a barrier row shaped the output or tracking degraded beyond
    /// the unavoidable damped-least-squares floor.
    pub intervened: bool,
    /// `||J dq_safe - u||`.
    pub tracking_error: f64,
    pub barrier_before: f64,
    pub barrier_after: f64,
    /// (sphere id, obstacle id) of barrier rows active at the solution.
    pub active_constraints: Vec<(String, String)>,
    pub solver_stats: SolverSummary,
}

/// Per-controller state: carries the previous step's active rows as a warm
/// start for the next solve. One workspace per control loop.
#[derive(Debug, Default)]
pub struct FilterWorkspace {
    active_pairs: Vec<(String, String)>,
    active_box: Vec<ConstraintId>,
}

impl FilterWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn filter(
        &mut self,
        chain: &KinematicChain,
        scene: &CollisionScene,
        q: &JointConfig,
        action: &ActionCommand,
        params: &FilterParams,
    ) -> Result<FilterResult, FilterError> {
        filter_action_impl(chain, scene, q, action, params, Some(self))
    }
}

/// Runs the safety filter for one control step.
pub fn filter_action(
    chain: &KinematicChain,
    scene: &CollisionScene,
    q: &JointConfig,
    action: &ActionCommand,
    params: &FilterParams,
) -> Result<FilterResult, FilterError> {
    filter_action_impl(chain, scene, q, action, params, None)
}

fn filter_action_impl(
    chain: &KinematicChain,
    scene: &CollisionScene,
    q: &JointConfig,
    action: &ActionCommand,
    params: &FilterParams,
    mut workspace: Option<&mut FilterWorkspace>,
) -> Result<FilterResult, FilterError> {
    params.validate()?;
    action.validate()?;
    for (index, &value) in q.angles().iter().enumerate() {
        let (lower, upper) = (chain.limits.lower[index], chain.limits.upper[index]);
        if value < lower - LIMIT_TOL || value > upper + LIMIT_TOL {
            return Err(FilterError::JointLimits {
                index,
                value,
                lower,
                upper,
            });
        }
    }

    let frames = forward_kinematics(chain, q);
    let jac = geometric_jacobian_from_frames(chain, &frames);
    let barrier = evaluate_barrier(chain, q, scene)?;
    let box_bounds = step_box(chain, q, params);
    let u = action.spatial();

    if barrier.value < 0.0 {
        // Recovery: the tracking objective is abandoned; climb the barrier as
        // fast as the box allows.
        let mut dq = JointVector::zeros();
        for i in 0..DOF {
            if barrier.gradient[i] > 0.0 {
                dq[i] = box_bounds.hi[i];
            } else if barrier.gradient[i] < 0.0 {
                dq[i] = box_bounds.lo[i];
            }
        }
        let q_after = JointConfig::from_vector(&(q.as_vector() + dq))?;
        let after = evaluate_barrier(chain, &q_after, scene)?;
        if let Some(ws) = workspace.as_deref_mut() {
            ws.active_pairs.clear();
            ws.active_box.clear();
        }
        return Ok(FilterResult {
            dq_safe: dq,
            gripper: action.gripper,
            mode: FilterMode::UnsafeStartRecovery,
            intervened: true,
            tracking_error: (jac.entries * dq - u).norm(),
            barrier_before: barrier.value,
            barrier_after: after.value,
            active_constraints: vec![barrier.active_pair.clone()],
            solver_stats: SolverSummary::none(),
        });
    }

    // H = J'J + lambda I, f = -J'u.
    let jt = jac.entries.transpose();
    let mut h: SMatrix<f64, 7, 7> = jt * jac.entries;
    for i in 0..DOF {
        h[(i, i)] += params.lambda;
    }
    h = (h + h.transpose()) * 0.5;
    let f = -(jt * u);

    // One barrier row per nearby pair (or only the minimum pair). A pair
    // whose gradient vanishes (clearance independent of q, e.g. a base-link
    // sphere against the floor) cannot be controlled and, at a safe state,
    // its row `0 . dq >= -gamma h` holds trivially: skip it.
    let mut ineq = Vec::new();
    let mut pair_of_row: Vec<(String, String)> = Vec::new();
    {
        let mut push_row = |value: f64, gradient: &crate::JointVector, pair: &(String, String)| {
            if value < params.activation_distance && gradient.norm() > 1e-12 {
                ineq.push(LinearConstraint {
                    a: *gradient,
                    b: -params.gamma * value,
                });
                pair_of_row.push(pair.clone());
            }
        };
        match params.cbf_mode {
            CbfConstraintMode::AllPairsWithinActivation => {
                for pair in &barrier.per_pair {
                    let ids = (pair.sphere_id.clone(), pair.obstacle_id.clone());
                    push_row(pair.value, &pair.gradient, &ids);
                }
            }
            CbfConstraintMode::ActiveMinOnly => {
                push_row(barrier.value, &barrier.gradient, &barrier.active_pair);
            }
        }
    }

    let problem = QpProblem {
        h,
        f,
        ineq,
        box_bounds,
    };

    let hint: Vec<ConstraintId> = match workspace.as_deref() {
        Some(ws) => {
            let mut hint: Vec<ConstraintId> = pair_of_row
                .iter()
                .enumerate()
                .filter(|(_, pair)| ws.active_pairs.contains(pair))
                .map(|(row, _)| ConstraintId::Ineq(row))
                .collect();
            hint.extend_from_slice(&ws.active_box);
            hint
        }
        None => Vec::new(),
    };

    let sol = solve_qp_warm(&problem, params.qp_tol, params.qp_max_iter, &hint)?;
    let dq = sol.x;

    // Unconstrained damped-least-squares step and its tracking floor; the
    // filter counts as intervening only for degradation beyond that floor.
    let chol = h.cholesky().ok_or(QpError::NotPositiveDefinite)?;
    let dq_raw = chol.solve(&(-f));
    let tracking_error = (jac.entries * dq - u).norm();
    let tracking_floor = (jac.entries * dq_raw - u).norm();

    let mut active_constraints = Vec::new();
    let mut active_box = Vec::new();
    for (id, &mu) in sol.active_set.iter().zip(&sol.multipliers) {
        if mu <= ACTIVE_MULTIPLIER_TOL {
            continue;
        }
        match id {
            ConstraintId::Ineq(row) => active_constraints.push(pair_of_row[*row].clone()),
            other => active_box.push(*other),
        }
    }
    let intervened = !active_constraints.is_empty()
        || (tracking_error - tracking_floor) > 1e-6 * (1.0 + u.norm());

    let q_after = JointConfig::from_vector(&(q.as_vector() + dq))?;
    let after = evaluate_barrier(chain, &q_after, scene)?;

    if let Some(ws) = workspace {
        ws.active_pairs = active_constraints.clone();
        ws.active_box = active_box;
    }

    Ok(FilterResult {
        dq_safe: dq,
        gripper: action.gripper,
        mode: FilterMode::Nominal,
        intervened,
        tracking_error,
        barrier_before: barrier.value,
        barrier_after: after.value,
        active_constraints,
        solver_stats: SolverSummary::from_solution(&sol),
    })
}

/// Joint-step bounds: limits shifted to displacement space, capped at
/// `step_cap` per joint.
pub fn step_box(chain: &KinematicChain, q: &JointConfig, params: &FilterParams) -> BoxBounds {
    let mut bounds = BoxBounds::unbounded();
    for i in 0..DOF {
        bounds.lo[i] = (chain.limits.lower[i] - q.angles()[i]).max(-params.step_cap);
        bounds.hi[i] = (chain.limits.upper[i] - q.angles()[i]).min(params.step_cap);
        // A state pinned to a limit by LIMIT_TOL slack must still admit dq = 0.
        bounds.lo[i] = bounds.lo[i].min(0.0);
        bounds.hi[i] = bounds.hi[i].max(0.0);
    }
    bounds
}

/// The raw damped-least-squares step `(J'J + lambda I)^{-1} J' u`, used by the
/// no-filter baseline.
pub fn dls_step(
    chain: &KinematicChain,
    q: &JointConfig,
    action: &ActionCommand,
    lambda: f64,
) -> Result<JointVector, FilterError> {
    action.validate()?;
    let frames = forward_kinematics(chain, q);
    let jac = geometric_jacobian_from_frames(chain, &frames);
    let jt = jac.entries.transpose();
    let mut h: SMatrix<f64, 7, 7> = jt * jac.entries;
    for i in 0..DOF {
        h[(i, i)] += lambda;
    }
    let chol = h.cholesky().ok_or(QpError::NotPositiveDefinite)?;
    Ok(chol.solve(&(jt * action.spatial())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{CollisionSphere, Obstacle, ObstacleShape};
    use approx::assert_relative_eq;

    fn panda() -> KinematicChain {
        crate::kinematics::load_chain(
            &std::fs::read_to_string(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../configs/panda.toml"
            ))
            .unwrap(),
        )
        .unwrap()
    }

    fn ready_pose() -> JointConfig {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        JointConfig::new([
            0.0,
            -FRAC_PI_4,
            0.0,
            -3.0 * FRAC_PI_4,
            0.0,
            FRAC_PI_2,
            FRAC_PI_4,
        ])
        .unwrap()
    }

    fn far_scene() -> CollisionScene {
        CollisionScene {
            schema_version: 1,
            name: "far".into(),
            margin: 0.01,
            spheres: vec![CollisionSphere {
                id: "flange".into(),
                link: 7,
                center: [0.0; 3],
                radius: 0.05,
            }],
            obstacles: vec![Obstacle {
                id: "floor".into(),
                shape: ObstacleShape::HalfSpace {
                    normal: [0.0, 0.0, 1.0],
                    offset: -10.0,
                },
            }],
        }
    }

    fn push_action(dx: f64) -> ActionCommand {
        ActionCommand {
            translation: [dx, 0.0, 0.0],
            rotation: [0.0; 3],
            gripper: false,
        }
    }

    #[test]
    fn unconstrained_filter_matches_dls_closed_form() {
        let chain = panda();
        let q = ready_pose();
        let scene = far_scene();
        // Cap chosen above the raw step so no box row activates.
        let params = FilterParams {
            step_cap: 0.1,
            ..FilterParams::default()
        };
        let action = push_action(0.01);
        let result = filter_action(&chain, &scene, &q, &action, &params).unwrap();
        let raw = dls_step(&chain, &q, &action, params.lambda).unwrap();
        assert!((result.dq_safe - raw).amax() < 1e-8, "dq mismatch");
        assert!(!result.intervened);
        assert_eq!(result.mode, FilterMode::Nominal);
    }

    #[test]
    fn joint_limit_box_is_respected() {
        let chain = panda();
        let mut angles = *ready_pose().angles();
        angles[3] = chain.limits.lower[3]; // pinned at a limit
        let q = JointConfig::new(angles).unwrap();
        let scene = far_scene();
        let params = FilterParams::default();
        // A -z push demands joint 3 to fold further toward its lower limit.
        let action = ActionCommand {
            translation: [0.0, 0.0, -0.02],
            rotation: [0.0; 3],
            gripper: false,
        };
        let result = filter_action(&chain, &scene, &q, &action, &params).unwrap();
        let q_next = q.as_vector() + result.dq_safe;
        for i in 0..DOF {
            assert!(q_next[i] >= chain.limits.lower[i] - 1e-8);
            assert!(q_next[i] <= chain.limits.upper[i] + 1e-8);
        }
        assert!(result.dq_safe.amax() <= params.step_cap + 1e-12);
    }

    #[test]
    fn wall_push_respects_discrete_barrier_decay() {
        let chain = panda();
        let q = ready_pose();
        let flange_x = forward_kinematics(&chain, &q)[7].translation.x;
        // Wall plane at flange_x + 0.061, solid on the +x side: clearance is
        // 0.001 after subtracting radius 0.05 and margin 0.01.
        let mut scene = far_scene();
        scene.obstacles.push(Obstacle {
            id: "wall".into(),
            shape: ObstacleShape::HalfSpace {
                normal: [-1.0, 0.0, 0.0],
                offset: -(flange_x + 0.001 + 0.05 + 0.01),
            },
        });
        let params = FilterParams::default();
        let before = evaluate_barrier(&chain, &q, &scene).unwrap().value;
        assert_relative_eq!(before, 0.001, epsilon = 1e-12);

        let action = push_action(0.01); // straight into the wall
        let result = filter_action(&chain, &scene, &q, &action, &params).unwrap();
        assert!(result.intervened);
        assert!(
            result.barrier_after >= (1.0 - params.gamma) * before - 1e-3,
            "barrier_after = {}, bound = {}",
            result.barrier_after,
            (1.0 - params.gamma) * before - 1e-3
        );
    }

    #[test]
    fn gripper_bit_passes_through() {
        let chain = panda();
        let q = ready_pose();
        let scene = far_scene();
        let params = FilterParams::default();
        for gripper in [false, true] {
            let action = ActionCommand {
                translation: [0.005, 0.0, 0.0],
                rotation: [0.0, 0.0, 0.01],
                gripper,
            };
            let result = filter_action(&chain, &scene, &q, &action, &params).unwrap();
            assert_eq!(result.gripper, gripper);
        }
    }

    #[test]
    fn unsafe_start_returns_recovery_step() {
        let chain = panda();
        let q = ready_pose();
        let flange = forward_kinematics(&chain, &q)[7].translation;
        // Floor above the flange sphere: start in violation.
        let mut scene = far_scene();
        scene.obstacles[0].shape = ObstacleShape::HalfSpace {
            normal: [0.0, 0.0, 1.0],
            offset: flange.z + 0.02,
        };
        let params = FilterParams::default();
        let result = filter_action(&chain, &scene, &q, &push_action(0.01), &params).unwrap();
        assert_eq!(result.mode, FilterMode::UnsafeStartRecovery);
        assert!(result.intervened);
        assert!(result.barrier_before < 0.0);
        assert!(
            result.barrier_after > result.barrier_before,
            "recovery must climb the barrier"
        );
        assert!(result.dq_safe.amax() <= params.step_cap + 1e-12);
    }

    #[test]
    fn rejects_out_of_limits_state() {
        let chain = panda();
        let mut angles = *ready_pose().angles();
        angles[1] = chain.limits.upper[1] + 0.1;
        let q = JointConfig::new(angles).unwrap();
        let err = filter_action(
            &panda(),
            &far_scene(),
            &q,
            &push_action(0.01),
            &FilterParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, FilterError::JointLimits { index: 1, .. }));
    }

    #[test]
    fn rejects_oversized_rotation_delta() {
        let action = ActionCommand {
            translation: [0.0; 3],
            rotation: [3.0, 1.0, 0.0],
            gripper: false,
        };
        assert!(action.validate().is_err());
    }

    #[test]
    fn workspace_warm_start_is_transparent() {
        let chain = panda();
        let q = ready_pose();
        let flange_x = forward_kinematics(&chain, &q)[7].translation.x;
        let mut scene = far_scene();
        scene.obstacles.push(Obstacle {
            id: "wall".into(),
            shape: ObstacleShape::HalfSpace {
                normal: [-1.0, 0.0, 0.0],
                offset: -(flange_x + 0.02 + 0.05 + 0.01),
            },
        });
        let params = FilterParams::default();
        let action = push_action(0.01);

        let cold = filter_action(&chain, &scene, &q, &action, &params).unwrap();
        let mut ws = FilterWorkspace::new();
        let first = ws.filter(&chain, &scene, &q, &action, &params).unwrap();
        let second = ws.filter(&chain, &scene, &q, &action, &params).unwrap();
        assert_eq!(cold.dq_safe, first.dq_safe);
        assert_eq!(first.dq_safe, second.dq_safe);
    }
}
