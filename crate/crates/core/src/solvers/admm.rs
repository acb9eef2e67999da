//! ADMM for the strict functional with the splitting `h = Wx`.
//!
//! Scaled-dual form: the `x`-step solves
//! `((AW)*(AW) + αI + ρW*W) x = (AW)*y + ρW*(h − u)`, the `h`-step
//! soft-thresholds `Wx + u` at `(α/ρ)κ`, and `u ← u + Wx − h`. The stopping
//! test is the relative change of `h + u`.

use std::time::Instant;

use super::linsolve::SpdSolver;
use super::{
    ensure_finite, random_start, SolveResult, SolverConfig, StallGuard, StrictProblem, TraceRow,
    DENSE_SOLVE_LIMIT,
};
use crate::error::Result;
use crate::{Matrix, Vector};

pub(super) fn solve(problem: &StrictProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let start = Instant::now();
    let (w, a) = (problem.w(), problem.a());
    let (dx, dh) = (w.domain_dim(), w.codomain_dim());
    let (alpha, rho) = (problem.alpha(), cfg.rho);

    let aty = w.adjoint_raw(&a.adjoint_raw(problem.y_delta()));
    let solver = if dx <= DENSE_SOLVE_LIMIT && dh <= DENSE_SOLVE_LIMIT {
        let wm = w.materialize_with_budget(usize::MAX)?;
        let awm = a.materialize_with_budget(usize::MAX)? * &wm;
        let s = awm.tr_mul(&awm) + alpha * Matrix::identity(dx, dx) + rho * wm.tr_mul(&wm);
        SpdSolver::dense(s, "admm x-update")?
    } else {
        let (w, a) = (w.clone(), a.clone());
        SpdSolver::cg(
            dx,
            Box::new(move |v: &Vector| {
                let wv = w.apply_raw(v);
                w.adjoint_raw(&a.adjoint_raw(&a.apply_raw(&wv)))
                    + alpha * v
                    + rho * w.adjoint_raw(&wv)
            }),
        )
    };

    let mut h = random_start(dh, cfg.seed, 2);
    let mut u = random_start(dh, cfg.seed, 3);
    let mut x = Vector::zeros(dx);
    let mut wx = Vector::zeros(dh);
    let mut governing = &h + &u;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut guard = StallGuard::new(cfg.stall_window);
    let threshold = alpha / rho;

    while iterations < cfg.max_iters {
        iterations += 1;
        let rhs = &aty + rho * w.adjoint_raw(&(&h - &u));
        x = solver.solve(&rhs, &x, "admm x-update")?;
        wx = w.apply_raw(&x);
        let h_prev = std::mem::replace(&mut h, problem.l1().prox_raw(&(&wx + &u), threshold));
        let gap = &wx - &h;
        u += &gap;
        ensure_finite(&u, "admm dual iterate")?;
        primal = gap.norm();
        dual = rho * w.adjoint_raw(&(&h - &h_prev)).norm();
        // ADMM is Douglas–Rachford on the dual with governing sequence h + u.
        let next = &h + &u;
        residual = relative((&next - &governing).norm(), next.norm());
        governing = next;
        if cfg.trace {
            trace.push(TraceRow {
                iter: iterations,
                objective: problem.objective(&x)?,
                fpr: residual,
                primal_res: primal,
                dual_res: dual,
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

    ensure_finite(&x, "admm output")?;
    Ok(SolveResult {
        objective: problem.objective(&x)?,
        x,
        h,
        wx,
        iterations,
        fixed_point_residual: residual,
        converged,
        primal_residual: primal,
        dual_residual: dual,
        wall_time: start.elapsed(),
        trace,
    })
}

fn relative(value: f64, scale: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        value / scale.max(f64::MIN_POSITIVE)
    }
}
