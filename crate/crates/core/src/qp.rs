//! Dense active-set solver for strictly convex quadratic programs
//!
//! ```text
//!     minimize   1/2 x' H x + f' x
//!     subject to a_i' x >= b_i          (general inequalities)
//!                lo <= x <= hi          (box)
//! ```
//!
//! with `H` symmetric positive definite (here always `J'J + lambda I`). The
//! implementation is the dual active-set scheme of Goldfarb and Idnani: start
//! at the unconstrained minimizer, repeatedly add the most violated constraint
//! and take primal/dual steps, dropping blocking constraints as their
//! multipliers reach zero. A Cholesky factor of `H` is computed once and the
//! QR factorization of the active-constraint normals is updated by Givens
//! rotations per active-set change.
//!
//! Every solve ends with a fresh KKT recomputation from the final active set;
//! the reported `kkt_residual` is evaluated on the original (unnormalized)
//! problem data. Infeasibility is certified: it is reported only when the
//! incoming constraint normal is a nonpositive combination of the active
//! normals, which bounds the constraint away from its required value on the
//! whole feasible set.
//!
//! The solver is deterministic: identical problems produce bit-identical
//! solutions. Ties in step selection break toward the lowest constraint index.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{JointVector, DOF};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100;
/// Primal feasibility tolerance guaranteed on success.
pub const FEASIBILITY_TOL: f64 = 1e-8;

const ZERO_STEP_TOL: f64 = 1e-12;
const BLOCKING_TOL: f64 = 1e-13;

/// One general inequality `a' x >= b`.
#[derive(Debug, Clone, Copy)]
pub struct LinearConstraint {
    pub a: JointVector,
    pub b: f64,
}

/// Elementwise bounds; entries may be infinite to disable a side.
#[derive(Debug, Clone, Copy)]
pub struct BoxBounds {
    pub lo: [f64; DOF],
    pub hi: [f64; DOF],
}

impl BoxBounds {
    pub fn unbounded() -> Self {
        Self {
            lo: [f64::NEG_INFINITY; DOF],
            hi: [f64::INFINITY; DOF],
        }
    }
}

/// Identifies a constraint of a [`QpProblem`] across solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintId {
    Ineq(usize),
    BoxLower(usize),
    BoxUpper(usize),
}

impl std::fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintId::Ineq(i) => write!(f, "ineq[{i}]"),
            ConstraintId::BoxLower(i) => write!(f, "box.lo[{i}]"),
            ConstraintId::BoxUpper(i) => write!(f, "box.hi[{i}]"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: SMatrix<f64, 7, 7>,
    pub f: JointVector,
    pub ineq: Vec<LinearConstraint>,
    pub box_bounds: BoxBounds,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: JointVector,
    /// Constraints active (held at equality) at the solution.
    pub active_set: Vec<ConstraintId>,
    /// Lagrange multipliers aligned with `active_set`, in original row scaling.
    pub multipliers: Vec<f64>,
    /// Total add/drop operations performed.
    pub iterations: usize,
    /// max of stationarity, dual-sign, and complementarity residuals on the
    /// original problem data.
    pub kkt_residual: f64,
    pub objective: f64,
}

#[derive(Debug, Error)]
pub enum QpError {
    #[error("H is not symmetric: max |H - H'| = {defect:.3e}")]
    NotSymmetric { defect: f64 },
    #[error("H is not positive definite")]
    NotPositiveDefinite,
    #[error("box bounds inverted at index {index}: lo = {lo}, hi = {hi}")]
    BadBox { index: usize, lo: f64, hi: f64 },
    #[error("constraint {id} has non-finite or zero-norm data")]
    BadConstraint { id: ConstraintId },
    #[error(
        "problem certified infeasible: {violated} cannot be satisfied given active {active:?}"
    )]
    Infeasible {
        violated: ConstraintId,
        active: Vec<ConstraintId>,
        /// Coefficients expressing the violated normal over the active ones.
        certificate: Vec<f64>,
    },
    #[error("iteration limit {max_iter} reached (kkt residual {kkt_residual:.3e})")]
    MaxIterations {
        max_iter: usize,
        kkt_residual: f64,
        active: Vec<ConstraintId>,
    },
}

/// Internal row form: normalized normal, normalized bound, original norm.
struct Row {
    a: JointVector,
    b: f64,
    norm: f64,
    id: ConstraintId,
}

fn build_rows(problem: &QpProblem) -> Result<Vec<Row>, QpError> {
    let mut rows = Vec::with_capacity(problem.ineq.len() + 2 * DOF);
    for (i, c) in problem.ineq.iter().enumerate() {
        let id = ConstraintId::Ineq(i);
        let norm = c.a.norm();
        if !norm.is_finite() || norm == 0.0 || !c.b.is_finite() {
            return Err(QpError::BadConstraint { id });
        }
        rows.push(Row {
            a: c.a / norm,
            b: c.b / norm,
            norm,
            id,
        });
    }
    for i in 0..DOF {
        let lo = problem.box_bounds.lo[i];
        let hi = problem.box_bounds.hi[i];
        if lo > hi {
            return Err(QpError::BadBox { index: i, lo, hi });
        }
        if lo.is_finite() {
            let mut a = JointVector::zeros();
            a[i] = 1.0;
            rows.push(Row {
                a,
                b: lo,
                norm: 1.0,
                id: ConstraintId::BoxLower(i),
            });
        }
        if hi.is_finite() {
            let mut a = JointVector::zeros();
            a[i] = -1.0;
            rows.push(Row {
                a,
                b: -hi,
                norm: 1.0,
                id: ConstraintId::BoxUpper(i),
            });
        }
    }
    Ok(rows)
}

/// Solves the QP to the requested stationarity tolerance.
pub fn solve_qp(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution, QpError> {
    solve_qp_warm(problem, tol, max_iter, &[])
}

/// Same as [`solve_qp`] but prefers `hint` constraints when choosing which
/// violated constraint to activate. The hint only reorders the search;
/// correctness never depends on it.
pub fn solve_qp_warm(
    problem: &QpProblem,
    tol: f64,
    max_iter: usize,
    hint: &[ConstraintId],
) -> Result<QpSolution, QpError> {
    let sym_defect = (problem.h - problem.h.transpose())
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if sym_defect > 1e-12 {
        return Err(QpError::NotSymmetric { defect: sym_defect });
    }
    let h = (problem.h + problem.h.transpose()) * 0.5;
    let chol = h.cholesky().ok_or(QpError::NotPositiveDefinite)?;
    let rows = build_rows(problem)?;

    // J = L^{-T}; maintained as J * Q over the run.
    let l_inv = chol
        .l()
        .solve_lower_triangular(&SMatrix::<f64, 7, 7>::identity())
        .expect("Cholesky factor has positive diagonal");
    let mut jmat = l_inv.transpose();

    let mut x = chol.solve(&(-problem.f));
    let mut rmat = SMatrix::<f64, 7, 7>::zeros();
    let mut active: Vec<usize> = Vec::with_capacity(DOF);
    let mut mult: Vec<f64> = Vec::with_capacity(DOF);
    let mut iterations = 0usize;

    'outer: loop {
        // Most violated constraint, preferring hinted rows.
        let pick = |restrict_to_hint: bool| -> Option<usize> {
            let mut best: Option<(usize, f64)> = None;
            for (k, row) in rows.iter().enumerate() {
                if active.contains(&k) {
                    continue;
                }
                if restrict_to_hint && !hint.contains(&row.id) {
                    continue;
                }
                let s = row.a.dot(&x) - row.b;
                let threshold = -ZERO_STEP_TOL * (1.0 + x.amax());
                if s < threshold {
                    match best {
                        Some((_, sb)) if s >= sb => {}
                        _ => best = Some((k, s)),
                    }
                }
            }
            best.map(|(k, _)| k)
        };
        let k = if hint.is_empty() {
            pick(false)
        } else {
            pick(true).or_else(|| pick(false))
        };
        let Some(k) = k else {
            break 'outer;
        };

        let a_new = rows[k].a;
        let mut slack = a_new.dot(&x) - rows[k].b;
        let mut u_plus = 0.0;

        loop {
            if iterations >= max_iter {
                let (sol, _) = finish(problem, &rows, &chol, x, &active, &mult, tol);
                return Err(QpError::MaxIterations {
                    max_iter,
                    kkt_residual: sol.kkt_residual,
                    active: sol.active_set,
                });
            }
            iterations += 1;

            let p = active.len();
            let d = jmat.transpose() * a_new;

            // Primal step direction from the unconstrained part of d.
            let mut z = JointVector::zeros();
            for i in p..DOF {
                z += jmat.column(i) * d[i];
            }
            // Dual step direction: R r = d[0..p] by back substitution.
            let mut r = vec![0.0; p];
            for i in (0..p).rev() {
                let mut s = d[i];
                for j in i + 1..p {
                    s -= rmat[(i, j)] * r[j];
                }
                r[i] = s / rmat[(i, i)];
            }

            // Longest dual step before a multiplier hits zero.
            let mut t1 = f64::INFINITY;
            let mut blocker = usize::MAX;
            for i in 0..p {
                if r[i] > BLOCKING_TOL {
                    let t = mult[i] / r[i];
                    if t < t1 {
                        t1 = t;
                        blocker = i;
                    }
                }
            }

            let ztn = z.dot(&a_new);
            let t2 = if ztn > ZERO_STEP_TOL {
                -slack / ztn
            } else {
                f64::INFINITY
            };

            if !t1.is_finite() && !t2.is_finite() {
                // a_new = sum r_i a_i with every r_i <= 0: the constraint is
                // bounded away from its rhs over the entire feasible set.
                return Err(QpError::Infeasible {
                    violated: rows[k].id,
                    active: active.iter().map(|&i| rows[i].id).collect(),
                    certificate: r,
                });
            }

            if !t2.is_finite() {
                // Dual-only step: drop the blocking constraint and retry.
                for i in 0..p {
                    mult[i] -= t1 * r[i];
                }
                u_plus += t1;
                delete_constraint(&mut jmat, &mut rmat, &mut active, &mut mult, blocker);
                continue;
            }

            let t = t1.min(t2);
            x += z * t;
            for i in 0..p {
                mult[i] -= t * r[i];
            }
            u_plus += t;

            if t2 <= t1 {
                // Full step: activate the new constraint.
                insert_constraint(&mut jmat, &mut rmat, p, d);
                active.push(k);
                mult.push(u_plus);
                continue 'outer;
            }
            // Partial step: drop the blocker, then keep working on row k.
            delete_constraint(&mut jmat, &mut rmat, &mut active, &mut mult, blocker);
            slack = a_new.dot(&x) - rows[k].b;
        }
    }

    let (mut solution, feasibility) = finish(problem, &rows, &chol, x, &active, &mult, tol);
    solution.iterations = iterations;
    if solution.kkt_residual > tol || feasibility > FEASIBILITY_TOL {
        return Err(QpError::MaxIterations {
            max_iter,
            kkt_residual: solution.kkt_residual.max(feasibility),
            active: solution.active_set,
        });
    }
    Ok(solution)
}

/// Applies the same Givens rotation to a pair of columns of `m`.
fn rotate_columns(m: &mut SMatrix<f64, 7, 7>, i: usize, j: usize, c: f64, s: f64) {
    for row in 0..DOF {
        let vi = m[(row, i)];
        let vj = m[(row, j)];
        m[(row, i)] = c * vi + s * vj;
        m[(row, j)] = -s * vi + c * vj;
    }
}

fn givens(f: f64, g: f64) -> (f64, f64, f64) {
    let h = f.hypot(g);
    (f / h, g / h, h)
}

/// Rotates `d` so entries beyond position `p` vanish, mirrors the rotations on
/// `jmat`, and writes the new column of `rmat`.
fn insert_constraint(
    jmat: &mut SMatrix<f64, 7, 7>,
    rmat: &mut SMatrix<f64, 7, 7>,
    p: usize,
    mut d: JointVector,
) {
    for i in (p + 1..DOF).rev() {
        if d[i] == 0.0 {
            continue;
        }
        let (c, s, h) = givens(d[i - 1], d[i]);
        d[i - 1] = h;
        d[i] = 0.0;
        rotate_columns(jmat, i - 1, i, c, s);
    }
    for i in 0..=p {
        rmat[(i, p)] = d[i];
    }
}

/// Removes active constraint `idx`, restoring R to upper triangular form.
fn delete_constraint(
    jmat: &mut SMatrix<f64, 7, 7>,
    rmat: &mut SMatrix<f64, 7, 7>,
    active: &mut Vec<usize>,
    mult: &mut Vec<f64>,
    idx: usize,
) {
    let p = active.len();
    active.remove(idx);
    mult.remove(idx);
    for j in idx..p - 1 {
        for i in 0..=j + 1 {
            rmat[(i, j)] = rmat[(i, j + 1)];
        }
    }
    for i in 0..DOF {
        rmat[(i, p - 1)] = 0.0;
    }
    for i in idx..p - 1 {
        let f = rmat[(i, i)];
        let g = rmat[(i + 1, i)];
        if g == 0.0 {
            continue;
        }
        let (c, s, h) = givens(f, g);
        rmat[(i, i)] = h;
        rmat[(i + 1, i)] = 0.0;
        for col in i + 1..p - 1 {
            let vi = rmat[(i, col)];
            let vj = rmat[(i + 1, col)];
            rmat[(i, col)] = c * vi + s * vj;
            rmat[(i + 1, col)] = -s * vi + c * vj;
        }
        rotate_columns(jmat, i, i + 1, c, s);
    }
}

/// Recomputes (x, u) from the final active set with fresh arithmetic and
/// evaluates the KKT residual on the original problem data. Falls back to the
/// incremental iterates if the polished system degrades.
fn finish(
    problem: &QpProblem,
    rows: &[Row],
    chol: &nalgebra::Cholesky<f64, nalgebra::Const<7>>,
    x_inc: JointVector,
    active: &[usize],
    mult_inc: &[f64],
    tol: f64,
) -> (QpSolution, f64) {
    let p = active.len();
    let polished = polish(problem, rows, chol, active);

    let evaluate = |x: &JointVector, mult_norm: &[f64]| -> (f64, f64, Vec<f64>) {
        // Map multipliers back to original row scaling.
        let mult_orig: Vec<f64> = active
            .iter()
            .zip(mult_norm)
            .map(|(&k, &u)| u / rows[k].norm)
            .collect();
        let mut stat = problem.h * x + problem.f;
        for (&k, &u) in active.iter().zip(&mult_orig) {
            stat -= rows[k].a * (rows[k].norm * u);
        }
        let mut residual = stat.amax();
        let mut feas = 0.0_f64;
        for row in rows {
            let s = row.a.dot(x) - row.b;
            feas = feas.max(-s * row.norm.max(1.0));
        }
        for (&k, &u) in active.iter().zip(&mult_orig) {
            residual = residual.max(-u);
            let s = (rows[k].a.dot(x) - rows[k].b) * rows[k].norm;
            residual = residual.max((u * s).abs());
        }
        (residual, feas, mult_orig)
    };

    let (x, mult_norm) = match polished {
        Some((xp, up)) => {
            let ok_dual = up.iter().all(|&u| u >= -tol);
            if ok_dual {
                (xp, up)
            } else {
                (x_inc, mult_inc.to_vec())
            }
        }
        None => (x_inc, mult_inc.to_vec()),
    };

    let (kkt_residual, feasibility, mult_orig) = evaluate(&x, &mult_norm);
    let objective = 0.5 * (problem.h * x).dot(&x) + problem.f.dot(&x);
    let mut ids: Vec<ConstraintId> = active.iter().map(|&k| rows[k].id).collect();
    let mut pairs: Vec<(ConstraintId, f64)> = ids.drain(..).zip(mult_orig).collect();
    pairs.sort_by_key(|(id, _)| *id);
    let (active_set, multipliers): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();

    (
        QpSolution {
            x,
            active_set,
            multipliers,
            iterations: p,
            kkt_residual,
            objective,
        },
        feasibility,
    )
}

/// Equality-constrained resolve on the active set:
/// `H x + f = N u`, `N' x = b`. Returns normalized-row multipliers.
fn polish(
    problem: &QpProblem,
    rows: &[Row],
    chol: &nalgebra::Cholesky<f64, nalgebra::Const<7>>,
    active: &[usize],
) -> Option<(JointVector, Vec<f64>)> {
    let p = active.len();
    if p == 0 {
        return Some((chol.solve(&(-problem.f)), Vec::new()));
    }
    let mut n_cols: Vec<JointVector> = Vec::with_capacity(p);
    let mut b_act = Vec::with_capacity(p);
    for &k in active {
        n_cols.push(rows[k].a);
        b_act.push(rows[k].b);
    }
    // S = N' H^{-1} N (p x p), rhs = b + N' H^{-1} f
    let hinv_n: Vec<JointVector> = n_cols.iter().map(|a| chol.solve(a)).collect();
    let hinv_f = chol.solve(&problem.f);
    let mut s = nalgebra::DMatrix::<f64>::zeros(p, p);
    let mut rhs = nalgebra::DVector::<f64>::zeros(p);
    for i in 0..p {
        for j in 0..p {
            s[(i, j)] = n_cols[i].dot(&hinv_n[j]);
        }
        rhs[i] = b_act[i] + n_cols[i].dot(&hinv_f);
    }
    let u = s.cholesky()?.solve(&rhs);
    let mut nu = JointVector::zeros();
    for i in 0..p {
        nu += n_cols[i] * u[i];
    }
    let x = chol.solve(&(nu - problem.f));
    Some((x, u.iter().copied().collect()))
}

/// Plain-text dump of a problem (and optional solution) for bug reports.
pub fn debug_dump(problem: &QpProblem, solution: Option<&QpSolution>) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "qp problem (n = {DOF})").unwrap();
    writeln!(out, "H =").unwrap();
    for i in 0..DOF {
        let row: Vec<String> = (0..DOF)
            .map(|j| format!("{:+.17e}", problem.h[(i, j)]))
            .collect();
        writeln!(out, "  [{}]", row.join(", ")).unwrap();
    }
    let fv: Vec<String> = problem.f.iter().map(|v| format!("{v:+.17e}")).collect();
    writeln!(out, "f = [{}]", fv.join(", ")).unwrap();
    for (i, c) in problem.ineq.iter().enumerate() {
        let av: Vec<String> = c.a.iter().map(|v| format!("{v:+.17e}")).collect();
        writeln!(out, "ineq[{i}]: [{}] . x >= {:+.17e}", av.join(", "), c.b).unwrap();
    }
    writeln!(out, "box.lo = {:?}", problem.box_bounds.lo).unwrap();
    writeln!(out, "box.hi = {:?}", problem.box_bounds.hi).unwrap();
    if let Some(sol) = solution {
        let xv: Vec<String> = sol.x.iter().map(|v| format!("{v:+.17e}")).collect();
        writeln!(out, "x = [{}]", xv.join(", ")).unwrap();
        writeln!(out, "objective = {:+.17e}", sol.objective).unwrap();
        writeln!(out, "kkt_residual = {:.3e}", sol.kkt_residual).unwrap();
        for (id, u) in sol.active_set.iter().zip(&sol.multipliers) {
            writeln!(out, "active {id}: u = {u:+.17e}").unwrap();
        }
    }
    out
}

/// Per-controller solver state: carries the previous active set as a warm
/// start hint. One workspace per concurrent control loop.
#[derive(Debug, Default)]
pub struct QpWorkspace {
    last_active: Vec<ConstraintId>,
}

impl QpWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(
        &mut self,
        problem: &QpProblem,
        tol: f64,
        max_iter: usize,
    ) -> Result<QpSolution, QpError> {
        let result = solve_qp_warm(problem, tol, max_iter, &self.last_active);
        if let Ok(sol) = &result {
            self.last_active.clear();
            self.last_active.extend_from_slice(&sol.active_set);
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_problem(f: JointVector) -> QpProblem {
        QpProblem {
            h: SMatrix::identity(),
            f,
            ineq: vec![],
            box_bounds: BoxBounds::unbounded(),
        }
    }

    #[test]
    fn unconstrained_minimizer_of_distance_to_point() {
        let c = JointVector::from([0.4, -1.2, 0.0, 3.0, -0.5, 0.25, 1.0]);
        let sol = solve_qp(&identity_problem(-c), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_relative_eq!(sol.x, c, epsilon = 1e-12);
        assert!(sol.active_set.is_empty());
        assert!(sol.kkt_residual <= DEFAULT_TOL);
    }

    #[test]
    fn clipped_coordinate_activates_upper_bound() {
        let mut f = JointVector::zeros();
        f[0] = -2.0;
        let mut problem = identity_problem(f);
        problem.box_bounds.hi[0] = 1.0;
        let sol = solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-12);
        for i in 1..DOF {
            assert_relative_eq!(sol.x[i], 0.0, epsilon = 1e-12);
        }
        assert_eq!(sol.active_set, vec![ConstraintId::BoxUpper(0)]);
        assert_relative_eq!(sol.multipliers[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn contradictory_constraints_certified_infeasible() {
        let mut problem = identity_problem(JointVector::zeros());
        let mut a = JointVector::zeros();
        a[0] = 1.0;
        problem.ineq.push(LinearConstraint { a, b: 1.0 });
        problem.box_bounds.hi[0] = 0.0;
        let err = solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap_err();
        match err {
            QpError::Infeasible {
                violated,
                active,
                certificate,
            } => {
                assert!(!active.is_empty());
                assert!(!certificate.is_empty());
                let _ = violated;
            }
            other => panic!("expected infeasible, got {other}"),
        }
    }

    #[test]
    fn equality_like_box_is_respected() {
        let mut f = JointVector::zeros();
        f[2] = 5.0;
        let mut problem = identity_problem(f);
        problem.box_bounds.lo[2] = 0.25;
        problem.box_bounds.hi[2] = 0.25;
        let sol = solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_relative_eq!(sol.x[2], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn general_inequality_becomes_active() {
        // min 1/2||x||^2 s.t. x0 + x1 >= 2 -> x = (1, 1, 0, ...)
        let mut problem = identity_problem(JointVector::zeros());
        let mut a = JointVector::zeros();
        a[0] = 1.0;
        a[1] = 1.0;
        problem.ineq.push(LinearConstraint { a, b: 2.0 });
        let sol = solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(sol.x[1], 1.0, epsilon = 1e-10);
        assert_eq!(sol.active_set, vec![ConstraintId::Ineq(0)]);
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn warm_start_hint_does_not_change_the_answer() {
        let mut problem = identity_problem(JointVector::from([-3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        problem.box_bounds.hi[0] = 1.0;
        let cold = solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let warm = solve_qp_warm(
            &problem,
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
            &[ConstraintId::BoxUpper(0), ConstraintId::Ineq(3)],
        )
        .unwrap();
        assert_eq!(cold.x, warm.x);

        let mut ws = QpWorkspace::new();
        let first = ws.solve(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let second = ws.solve(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(first.x, second.x);
    }

    #[test]
    fn rejects_asymmetric_h() {
        let mut problem = identity_problem(JointVector::zeros());
        problem.h[(0, 1)] = 0.5;
        assert!(matches!(
            solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER),
            Err(QpError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn rejects_indefinite_h() {
        let mut problem = identity_problem(JointVector::zeros());
        problem.h[(3, 3)] = -1.0;
        assert!(matches!(
            solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER),
            Err(QpError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn debug_dump_mentions_active_set() {
        let mut f = JointVector::zeros();
        f[0] = -2.0;
        let mut problem = identity_problem(f);
        problem.box_bounds.hi[0] = 1.0;
        let sol = solve_qp(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let dump = debug_dump(&problem, Some(&sol));
        assert!(dump.contains("box.hi[0]"));
        assert!(dump.contains("objective"));
    }
}
