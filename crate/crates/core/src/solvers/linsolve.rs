//! Symmetric positive definite inner solves shared by both splitting methods.

use nalgebra::{Cholesky, Dyn};

use super::CG_TOLERANCE;
use crate::error::{Error, Result};
use crate::{Matrix, Vector};

type Apply = Box<dyn Fn(&Vector) -> Vector + Send + Sync>;

pub(crate) enum SpdSolver {
    Dense(Cholesky<f64, Dyn>),
    Cg { apply: Apply, max_iters: usize },
}

impl SpdSolver {
    pub(crate) fn dense(matrix: Matrix, context: &'static str) -> Result<Self> {
        let dim = matrix.nrows();
        Cholesky::new(matrix)
            .map(SpdSolver::Dense)
            .ok_or(Error::LinearSolve {
                context,
                residual: f64::NAN,
                iterations: dim,
            })
    }

    pub(crate) fn cg(dim: usize, apply: Apply) -> Self {
        SpdSolver::Cg {
            apply,
            max_iters: 10 * dim.max(10),
        }
    }

    /// Solve `S p = rhs`, warm-started from `guess` when iterative.
    pub(crate) fn solve(
        &self,
        rhs: &Vector,
        guess: &Vector,
        context: &'static str,
    ) -> Result<Vector> {
        match self {
            SpdSolver::Dense(chol) => Ok(chol.solve(rhs)),
            SpdSolver::Cg { apply, max_iters } => {
                conjugate_gradient(apply, rhs, guess, *max_iters, context)
            }
        }
    }
}

fn conjugate_gradient(
    apply: &Apply,
    rhs: &Vector,
    guess: &Vector,
    max_iters: usize,
    context: &'static str,
) -> Result<Vector> {
    let target = CG_TOLERANCE * rhs.norm();
    let mut x = guess.clone();
    let mut r = rhs - apply(&x);
    let mut rr = r.norm_squared();
    if rr.sqrt() <= target {
        return Ok(x);
    }
    let mut p = r.clone();
    for _ in 0..max_iters {
        let sp = apply(&p);
        let curvature = p.dot(&sp);
        if !(curvature > 0.0) {
            break;
        }
        let step = rr / curvature;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &sp, 1.0);
        let rr_next = r.norm_squared();
        if rr_next.sqrt() <= target {
            return Ok(x);
        }
        p = &r + (rr_next / rr) * p;
        rr = rr_next;
    }
    Err(Error::LinearSolve {
        context,
        residual: rr.sqrt() / rhs.norm().max(f64::MIN_POSITIVE),
        iterations: max_iters,
    })
}
