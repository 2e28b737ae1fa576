//! Collision scenes and the clearance barrier `h(q)`.
//!
//! A scene is a set of spheres rigidly attached to chain links plus static
//! world obstacles. The barrier value is the minimum over all (sphere,
//! obstacle) pairs of
//!
//! ```text
//!     signed_distance(center, obstacle) - radius - margin
//! ```
//!
//! so `h >= 0` means every sphere keeps at least `radius + margin` clearance
//! from every obstacle surface. Penetrating states yield negative values
//! rather than errors so that unfiltered rollouts can quantify violations.
//!
//! The gradient of a pair's value with respect to `q` is the obstacle
//! direction pulled back through the sphere's point Jacobian; the reported
//! top-level gradient is the active (minimum) pair's, with a lexicographic
//! id tie-break within 1e-12.

use nalgebra::{SMatrix, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    forward_kinematics, point_jacobian_from_frames, JointConfig, KinematicChain, KinematicsError,
    FRAME_COUNT,
};
use crate::{JointVector, DOF};

/// Two per-pair values within this distance of each other count as tied and
/// fall back to the lexicographic (sphere id, obstacle id) order.
pub const MIN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read scene file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene file parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("spheres[{index}].radius must be > 0, got {radius}")]
    NonPositiveRadius { index: usize, radius: f64 },
    #[error("spheres[{index}].link must be 0..={max}, got {link}")]
    LinkOutOfRange { index: usize, link: usize, max: usize },
    #[error("duplicate {kind} id \"{id}\"")]
    DuplicateId { kind: &'static str, id: String },
    #[error("obstacles[{index}] ({id}): {reason}")]
    BadObstacle {
        index: usize,
        id: String,
        reason: String,
    },
    #[error("margin must be >= 0, got {0}")]
    NegativeMargin(f64),
    #[error("scene needs at least one sphere and one obstacle")]
    EmptyScene,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// A sphere rigidly attached to a chain link (link 7 = flange frame).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionSphere {
    pub id: String,
    pub link: usize,
    pub center: [f64; 3],
    pub radius: f64,
}

impl CollisionSphere {
    pub fn local_center(&self) -> Vector3<f64> {
        Vector3::from(self.center)
    }
}

/// Static world obstacle.
///
/// `HalfSpace` is solid on the side opposite its normal: the signed distance
/// of a point `p` is `normal . p - offset`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObstacleShape {
    HalfSpace {
        normal: [f64; 3],
        offset: f64,
    },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
    },
    VerticalCylinder {
        axis_point: [f64; 3],
        radius: f64,
        half_height: f64,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: String,
    #[serde(flatten)]
    pub shape: ObstacleShape,
}

/// Immutable scene: spheres, obstacles, and the clearance margin (m).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionScene {
    pub schema_version: u32,
    pub name: String,
    pub margin: f64,
    pub spheres: Vec<CollisionSphere>,
    pub obstacles: Vec<Obstacle>,
}

/// Result of one sphere-center-to-obstacle distance query.
#[derive(Debug, Clone, Copy)]
pub struct PairDistance {
    /// Surface clearance of the sphere: signed center distance minus radius.
    pub distance: f64,
    /// Unit gradient of the center's signed distance (points away from the obstacle).
    pub direction: Vector3<f64>,
}

/// One (sphere, obstacle) pair's barrier value and gradient.
#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub sphere_id: String,
    pub obstacle_id: String,
    /// `pair_distance - margin`.
    pub value: f64,
    pub gradient: JointVector,
}

/// Barrier value, gradient, and the per-pair breakdown.
#[derive(Debug, Clone)]
pub struct BarrierEvaluation {
    pub value: f64,
    pub gradient: JointVector,
    pub active_pair: (String, String),
    pub per_pair: Vec<PairEvaluation>,
}

// ---- scene loading ----------------------------------------------------------

pub fn load_scene(document: &str) -> Result<CollisionScene, SceneError> {
    let scene: CollisionScene = toml::from_str(document)?;
    validate_scene(&scene)?;
    Ok(scene)
}

pub fn load_scene_path(path: &std::path::Path) -> Result<CollisionScene, SceneError> {
    load_scene(&std::fs::read_to_string(path)?)
}

pub fn validate_scene(scene: &CollisionScene) -> Result<(), SceneError> {
    if scene.margin < 0.0 {
        return Err(SceneError::NegativeMargin(scene.margin));
    }
    if scene.spheres.is_empty() || scene.obstacles.is_empty() {
        return Err(SceneError::EmptyScene);
    }
    let mut ids = std::collections::BTreeSet::new();
    for (index, s) in scene.spheres.iter().enumerate() {
        if s.radius <= 0.0 {
            return Err(SceneError::NonPositiveRadius {
                index,
                radius: s.radius,
            });
        }
        if s.link >= FRAME_COUNT {
            return Err(SceneError::LinkOutOfRange {
                index,
                link: s.link,
                max: DOF,
            });
        }
        if !ids.insert(s.id.clone()) {
            return Err(SceneError::DuplicateId {
                kind: "sphere",
                id: s.id.clone(),
            });
        }
    }
    ids.clear();
    for (index, o) in scene.obstacles.iter().enumerate() {
        let bad = |reason: String| SceneError::BadObstacle {
            index,
            id: o.id.clone(),
            reason,
        };
        match &o.shape {
            ObstacleShape::HalfSpace { normal, .. } => {
                let n = Vector3::from(*normal).norm();
                if (n - 1.0).abs() > 1e-9 {
                    return Err(bad(format!("normal must be unit length, norm = {n}")));
                }
            }
            ObstacleShape::Box { half_extents, .. } => {
                if half_extents.iter().any(|&h| h <= 0.0) {
                    return Err(bad("half_extents must all be > 0".into()));
                }
            }
            ObstacleShape::VerticalCylinder {
                radius,
                half_height,
                ..
            } => {
                if *radius <= 0.0 || *half_height <= 0.0 {
                    return Err(bad("radius and half_height must be > 0".into()));
                }
            }
            ObstacleShape::Sphere { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(bad("radius must be > 0".into()));
                }
            }
        }
        if !ids.insert(o.id.clone()) {
            return Err(SceneError::DuplicateId {
                kind: "obstacle",
                id: o.id.clone(),
            });
        }
    }
    Ok(())
}

// ---- distance fields ---------------------------------------------------------

/// Fallback gradient direction on distance-field singularities (box center,
/// cylinder axis, sphere center): deterministic world +z.
const SINGULARITY_DIRECTION: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

/// Signed distance from a sphere to an obstacle surface and the unit gradient
/// of the center's distance field.
pub fn pair_distance(
    sphere_world_center: &Vector3<f64>,
    sphere_radius: f64,
    obstacle: &ObstacleShape,
) -> PairDistance {
    let (signed, direction) = signed_distance(sphere_world_center, obstacle);
    PairDistance {
        distance: signed - sphere_radius,
        direction,
    }
}

/// Signed distance of a point to the obstacle surface (negative inside) and
/// its unit gradient.
fn signed_distance(p: &Vector3<f64>, obstacle: &ObstacleShape) -> (f64, Vector3<f64>) {
    match obstacle {
        ObstacleShape::HalfSpace { normal, offset } => {
            let n = Vector3::from(*normal);
            (n.dot(p) - offset, n)
        }
        ObstacleShape::Sphere { center, radius } => {
            let d = p - Vector3::from(*center);
            let norm = d.norm();
            if norm < 1e-15 {
                (-radius, SINGULARITY_DIRECTION)
            } else {
                (norm - radius, d / norm)
            }
        }
        ObstacleShape::Box {
            center,
            half_extents,
        } => {
            let q = p - Vector3::from(*center);
            let h = Vector3::from(*half_extents);
            let d = Vector3::new(q.x.abs() - h.x, q.y.abs() - h.y, q.z.abs() - h.z);
            let outside = Vector3::new(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0));
            let outside_norm = outside.norm();
            if outside_norm > 0.0 {
                let grad = Vector3::new(
                    outside.x * sign_or_zero(q.x),
                    outside.y * sign_or_zero(q.y),
                    outside.z * sign_or_zero(q.z),
                ) / outside_norm;
                (outside_norm, grad)
            } else {
                // Interior: distance to the nearest face, gradient along that
                // face normal. Ties resolved by the lowest axis index; the
                // exact center (all lever arms zero) falls back to +z.
                let (mut axis, mut best) = (0, d.x);
                if d.y > best {
                    axis = 1;
                    best = d.y;
                }
                if d.z > best {
                    axis = 2;
                    best = d.z;
                }
                let s = sign_or_zero(q[axis]);
                if s == 0.0 {
                    (best, SINGULARITY_DIRECTION)
                } else {
                    let mut grad = Vector3::zeros();
                    grad[axis] = s;
                    (best, grad)
                }
            }
        }
        ObstacleShape::VerticalCylinder {
            axis_point,
            radius,
            half_height,
        } => {
            let a = Vector3::from(*axis_point);
            let radial = Vector2::new(p.x - a.x, p.y - a.y);
            let rho = radial.norm();
            let dr = rho - radius;
            let dz = (p.z - a.z).abs() - half_height;
            let radial_dir = if rho < 1e-15 {
                None
            } else {
                Some(radial / rho)
            };
            let z_sign = sign_or_zero(p.z - a.z);
            if dr > 0.0 || dz > 0.0 {
                // Outside in at least one of the two coordinates. `or > 0`
                // implies `rho >= radius > 0`, so the radial direction exists
                // whenever it carries weight.
                let or = dr.max(0.0);
                let oz = dz.max(0.0);
                let dist = (or * or + oz * oz).sqrt();
                let rd = radial_dir.unwrap_or_else(Vector2::zeros);
                let grad = Vector3::new(rd.x * or, rd.y * or, z_sign * oz) / dist;
                (dist, grad)
            } else {
                // Interior: nearest of wall vs caps.
                if dr >= dz {
                    match radial_dir {
                        Some(rd) => (dr, Vector3::new(rd.x, rd.y, 0.0)),
                        None => (dr, SINGULARITY_DIRECTION),
                    }
                } else if z_sign == 0.0 {
                    (dz, SINGULARITY_DIRECTION)
                } else {
                    (dz, Vector3::new(0.0, 0.0, z_sign))
                }
            }
        }
    }
}

fn sign_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

// ---- barrier ------------------------------------------------------------------

/// How per-pair values are aggregated into the scalar barrier.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BarrierAggregation {
    /// Hard minimum with the active pair's gradient.
    #[default]
    HardMin,
    /// Log-sum-exp underestimate of the minimum with temperature `beta`,
    /// smooth at pair-switch points: `-1/beta * ln(sum exp(-beta v_i))`.
    SoftMin { beta: f64 },
}

/// Evaluates the barrier over all (sphere, obstacle) pairs.
pub fn evaluate_barrier(
    chain: &KinematicChain,
    q: &JointConfig,
    scene: &CollisionScene,
) -> Result<BarrierEvaluation, SceneError> {
    evaluate_barrier_with(chain, q, scene, BarrierAggregation::HardMin)
}

pub fn evaluate_barrier_with(
    chain: &KinematicChain,
    q: &JointConfig,
    scene: &CollisionScene,
    aggregation: BarrierAggregation,
) -> Result<BarrierEvaluation, SceneError> {
    let frames = forward_kinematics(chain, q);
    let mut per_pair = Vec::with_capacity(scene.spheres.len() * scene.obstacles.len());

    for sphere in &scene.spheres {
        let local = sphere.local_center();
        let center_world = frames[sphere.link].apply(&local);
        let jac: SMatrix<f64, 3, 7> =
            point_jacobian_from_frames(chain, &frames, sphere.link, &local)?;
        for obstacle in &scene.obstacles {
            let pd = pair_distance(&center_world, sphere.radius, &obstacle.shape);
            let gradient = (pd.direction.transpose() * jac).transpose();
            per_pair.push(PairEvaluation {
                sphere_id: sphere.id.clone(),
                obstacle_id: obstacle.id.clone(),
                value: pd.distance - scene.margin,
                gradient,
            });
        }
    }

    if per_pair.is_empty() {
        return Err(SceneError::EmptyScene);
    }

    // Active pair: minimum value, ties broken lexicographically on ids.
    let mut active = 0;
    for (i, pair) in per_pair.iter().enumerate().skip(1) {
        let best = &per_pair[active];
        let better = pair.value < best.value - MIN_TIE_TOL
            || ((pair.value - best.value).abs() <= MIN_TIE_TOL
                && (pair.sphere_id.as_str(), pair.obstacle_id.as_str())
                    < (best.sphere_id.as_str(), best.obstacle_id.as_str()));
        if better {
            active = i;
        }
    }

    let (value, gradient) = match aggregation {
        BarrierAggregation::HardMin => (per_pair[active].value, per_pair[active].gradient),
        BarrierAggregation::SoftMin { beta } => {
            // Shift by the minimum for overflow safety; gradient is the
            // softmax-weighted combination of the pair gradients.
            let vmin = per_pair[active].value;
            let mut den = 0.0;
            let mut grad = JointVector::zeros();
            for pair in &per_pair {
                let w = (-beta * (pair.value - vmin)).exp();
                den += w;
                grad += pair.gradient * w;
            }
            (vmin - den.ln() / beta, grad / den)
        }
    };

    Ok(BarrierEvaluation {
        value,
        gradient,
        active_pair: (
            per_pair[active].sphere_id.clone(),
            per_pair[active].obstacle_id.clone(),
        ),
        per_pair,
    })
}
