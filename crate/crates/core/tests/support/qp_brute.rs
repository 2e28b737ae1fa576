//! Shared brute-force machinery for checking the QP solver: a random problem
//! generator, a projected-gradient oracle with exact (Dykstra) projections,
//! and an independent KKT certificate. Nothing here touches solver internals.

use aegis_core::qp::{BoxBounds, ConstraintId, LinearConstraint, QpProblem};
use aegis_core::{JointVector, DOF};
use nalgebra::SMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PGD_STEP: f64 = 1e-4;
pub const PGD_MAX_ITERS: usize = 1_000_000;

/// Random strictly convex problem, feasible by construction: every general
/// inequality is satisfied (with slack) at a designated interior point.
pub fn random_problem(seed: u64, force_zero_feasible: bool) -> (QpProblem, JointVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = SMatrix::<f64, 7, 7>::zeros();
    for i in 0..DOF {
        for j in 0..DOF {
            a[(i, j)] = rng.gen_range(-3.0..3.0);
        }
    }
    let mut h = a * a.transpose();
    for i in 0..DOF {
        h[(i, i)] += 20.0;
    }
    h = (h + h.transpose()) * 0.5;

    let mut f = JointVector::zeros();
    for i in 0..DOF {
        f[i] = rng.gen_range(-50.0..50.0);
    }

    let mut box_bounds = BoxBounds::unbounded();
    if rng.gen_bool(0.8) {
        for i in 0..DOF {
            box_bounds.lo[i] = rng.gen_range(-1.5..-0.2);
            box_bounds.hi[i] = rng.gen_range(0.2..1.5);
        }
    }

    let mut interior = JointVector::zeros();
    if !force_zero_feasible {
        for i in 0..DOF {
            let lo = box_bounds.lo[i].max(-1.0);
            let hi = box_bounds.hi[i].min(1.0);
            interior[i] = rng.gen_range(lo * 0.5..hi * 0.5);
        }
    }

    let n_ineq = rng.gen_range(0..=6);
    let mut ineq = Vec::with_capacity(n_ineq);
    for _ in 0..n_ineq {
        let mut normal = JointVector::zeros();
        for i in 0..DOF {
            normal[i] = rng.gen_range(-1.0..1.0);
        }
        if normal.norm() < 1e-6 {
            normal[0] = 1.0;
        }
        let slack = rng.gen_range(0.0..0.6);
        ineq.push(LinearConstraint {
            a: normal,
            b: normal.dot(&interior) - slack,
        });
    }

    (
        QpProblem {
            h,
            f,
            ineq,
            box_bounds,
        },
        interior,
    )
}

pub fn objective(p: &QpProblem, x: &JointVector) -> f64 {
    0.5 * (p.h * x).dot(x) + p.f.dot(x)
}

/// Euclidean projection onto the feasible polyhedron by Dykstra's
/// alternating scheme over the box and each half-space.
pub fn dykstra_project(p: &QpProblem, point: &JointVector) -> JointVector {
    let sets = p.ineq.len() + 1;
    let mut x = *point;
    let mut increments = vec![JointVector::zeros(); sets];
    for _ in 0..200 {
        let mut moved: f64 = 0.0;
        for s in 0..sets {
            let y = x + increments[s];
            let projected = if s == 0 {
                let mut out = y;
                for i in 0..DOF {
                    out[i] = out[i].clamp(p.box_bounds.lo[i], p.box_bounds.hi[i]);
                }
                out
            } else {
                let c = &p.ineq[s - 1];
                let slack = c.a.dot(&y) - c.b;
                if slack >= 0.0 {
                    y
                } else {
                    y - c.a * (slack / c.a.norm_squared())
                }
            };
            increments[s] = y - projected;
            moved = moved.max((projected - x).amax());
            x = projected;
        }
        if moved < 1e-15 {
            break;
        }
    }
    x
}

/// Projected gradient descent at fixed step with a 10^6 iteration budget,
/// exiting early once the iterate stops moving at machine precision.
pub fn pgd_oracle(p: &QpProblem) -> JointVector {
    let mut x = dykstra_project(p, &JointVector::zeros());
    for iter in 0..PGD_MAX_ITERS {
        let grad = p.h * x + p.f;
        let next = dykstra_project(p, &(x - grad * PGD_STEP));
        let movement = (next - x).amax();
        x = next;
        if movement < 1e-14 && iter > 50 {
            break;
        }
    }
    x
}

/// Recomputes stationarity, dual-sign, and complementarity residuals from raw
/// problem data and the reported solution.
pub fn kkt_certificate(
    p: &QpProblem,
    x: &JointVector,
    active: &[ConstraintId],
    mult: &[f64],
) -> f64 {
    let mut stationarity = p.h * x + p.f;
    for (id, &mu) in active.iter().zip(mult) {
        stationarity -= constraint_normal(p, id) * mu;
    }
    let mut residual = stationarity.amax();
    for (id, &mu) in active.iter().zip(mult) {
        residual = residual.max(-mu);
        let slack = match id {
            ConstraintId::Ineq(i) => p.ineq[*i].a.dot(x) - p.ineq[*i].b,
            ConstraintId::BoxLower(i) => x[*i] - p.box_bounds.lo[*i],
            ConstraintId::BoxUpper(i) => p.box_bounds.hi[*i] - x[*i],
        };
        residual = residual.max((mu * slack).abs());
    }
    residual
}

fn constraint_normal(p: &QpProblem, id: &ConstraintId) -> JointVector {
    match id {
        ConstraintId::Ineq(i) => p.ineq[*i].a,
        ConstraintId::BoxLower(i) => {
            let mut a = JointVector::zeros();
            a[*i] = 1.0;
            a
        }
        ConstraintId::BoxUpper(i) => {
            let mut a = JointVector::zeros();
            a[*i] = -1.0;
            a
        }
    }
}

pub fn primal_violation(p: &QpProblem, x: &JointVector) -> f64 {
    let mut v: f64 = 0.0;
    for c in &p.ineq {
        v = v.max(c.b - c.a.dot(x));
    }
    for i in 0..DOF {
        v = v.max(p.box_bounds.lo[i] - x[i]);
        v = v.max(x[i] - p.box_bounds.hi[i]);
    }
    v
}
