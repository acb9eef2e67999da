//! Douglas–Rachford splitting for the relaxed functional on `z = (x, h)`.
//!
//! `f(z) = ½‖M z − (0, y)‖²` and `g(z) = α(R(x) + ‖h‖₁,κ)`. The resolvent of
//! `f` solves `(I + γM*M) p = z + γM*(0, y)`; the resolvent of `g` is
//! separable.

use std::time::Instant;

use super::linsolve::SpdSolver;
use super::{
    ensure_finite, random_start, RelaxedProblem, SolveResult, SolverConfig, StallGuard, TraceRow,
    DENSE_SOLVE_LIMIT,
};
use crate::error::Result;
use crate::regularizers::Penalty;
use crate::{Matrix, Vector};

pub(super) fn solve(problem: &RelaxedProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let start = Instant::now();
    let m = problem.product_map();
    let (dx, dh) = (problem.w().domain_dim(), problem.w().codomain_dim());
    let dim = dx + dh;
    let gamma = cfg.gamma;

    let mut zero_y = Vector::zeros(dh + problem.y_delta().len());
    zero_y
        .rows_mut(dh, problem.y_delta().len())
        .copy_from(problem.y_delta());
    let shift = m.adjoint_raw(&zero_y) * gamma;

    let solver = if dx <= DENSE_SOLVE_LIMIT && dh <= DENSE_SOLVE_LIMIT {
        let mat = m.materialize_with_budget(usize::MAX)?;
        let s = Matrix::identity(dim, dim) + gamma * mat.tr_mul(&mat);
        SpdSolver::dense(s, "douglas-rachford resolvent")?
    } else {
        let op = m.clone();
        SpdSolver::cg(
            dim,
            Box::new(move |v: &Vector| v + gamma * op.adjoint_raw(&op.apply_raw(v))),
        )
    };
    let prox_f = |z: &Vector, guess: &Vector| {
        solver.solve(&(z + &shift), guess, "douglas-rachford resolvent")
    };
    let t = gamma * problem.alpha();
    let prox_g = |r: &Vector| {
        let mut out = Vector::zeros(dim);
        let x = r.rows(0, dx).into_owned();
        let h = r.rows(dx, dh).into_owned();
        out.rows_mut(0, dx)
            .copy_from(&problem.penalty().prox(&x, t));
        out.rows_mut(dx, dh)
            .copy_from(&problem.l1().prox_raw(&h, t));
        out
    };

    let mut z = random_start(dim, cfg.seed, 1);
    let mut p = Vector::zeros(dim);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut guard = StallGuard::new(cfg.stall_window);

    while iterations < cfg.max_iters {
        iterations += 1;
        p = prox_f(&z, &p)?;
        let q = prox_g(&(2.0 * &p - &z));
        let step = cfg.lambda_relax * (&q - &p);
        let fpr = step.norm();
        z += step;
        ensure_finite(&z, "douglas-rachford iterate")?;
        let scale = z.norm();
        residual = if fpr == 0.0 {
            0.0
        } else {
            fpr / scale.max(f64::MIN_POSITIVE)
        };
        if cfg.trace {
            let (x, h) = split(&p, dx, dh);
            trace.push(TraceRow {
                iter: iterations,
                objective: problem.objective(&x, &h)?,
                fpr,
                primal_res: problem.data_residual(&x, &h)?,
                dual_res: (&q - &p).norm(),
            });
        }
        if residual <= cfg.tol {
            converged = true;
            break;
        }
        if guard.stalled(iterations, residual) {
            break;
        }
    }

    p = prox_f(&z, &p)?;
    let gap = (&prox_g(&(2.0 * &p - &z)) - &p).norm();
    let (x, h) = split(&p, dx, dh);
    ensure_finite(&p, "douglas-rachford output")?;
    let wx = problem.w().apply_raw(&x);
    Ok(SolveResult {
        objective: problem.objective(&x, &h)?,
        primal_residual: problem.data_residual(&x, &h)?,
        dual_residual: gap,
        x,
        h,
        wx,
        iterations,
        fixed_point_residual: residual,
        converged,
        wall_time: start.elapsed(),
        trace,
    })
}

fn split(z: &Vector, dx: usize, dh: usize) -> (Vector, Vector) {
    (z.rows(0, dx).into_owned(), z.rows(dx, dh).into_owned())
}
