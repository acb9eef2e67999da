//! Minimizers for the relaxed and strict co-regularization functionals.

mod admm;
mod douglas_rachford;
mod linsolve;
mod trace;

use std::time::Duration;

use crate::error::{check_len, Error, Result};
use crate::operators::LinearMap;
use crate::regularizers::{Penalty, QuadraticPenalty, WeightedL1};
use crate::Vector;

pub use trace::{write_trace_csv, TraceRow};

/// Largest system dimension per block for which inner solves use a cached
/// dense Cholesky factor; larger problems use conjugate gradients.
pub const DENSE_SOLVE_LIMIT: usize = 512;

/// Relative tolerance of conjugate-gradient inner solves.
pub const CG_TOLERANCE: f64 = 1e-12;

/// Iteration cap and tolerance of [`reference_solve`].
pub const REFERENCE_MAX_ITERS: usize = 500_000;
pub const REFERENCE_TOL: f64 = 1e-14;

/// Stall window of [`reference_solve`]: the relative-change floor set by
/// roundoff often lies above `REFERENCE_TOL`.
pub const REFERENCE_STALL_WINDOW: usize = 25_000;

/// Largest signal dimension accepted by [`reference_solve`].
pub const REFERENCE_MAX_DIM: usize = 256;

/// Step-size constants of the balanced parameter rule, see
/// [`SolverConfig::balanced_relaxed`] and [`SolverConfig::balanced_strict`].
pub const BALANCED_DR_SCALE: f64 = 5.0;
pub const BALANCED_ADMM_SCALE: f64 = 0.6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative iterate-change stopping threshold.
    pub tol: f64,
    /// Douglas–Rachford step size `γ`.
    pub gamma: f64,
    /// Douglas–Rachford relaxation in `(0, 2)`.
    pub lambda_relax: f64,
    /// ADMM penalty `ρ`.
    pub rho: f64,
    /// `0` starts from zero; any other value draws a seeded random start.
    pub seed: u64,
    /// Record one [`TraceRow`] per iteration.
    pub trace: bool,
    /// Stop unconverged once the residual has not halved for this many
    /// iterations; `0` disables the check.
    pub stall_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 20_000,
            tol: 1e-10,
            gamma: 1.0,
            lambda_relax: 1.0,
            rho: 1.0,
            seed: 0,
            trace: false,
            stall_window: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if !(self.lambda_relax > 0.0 && self.lambda_relax < 2.0) {
            return bad("lambda_relax must lie in (0, 2)");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        Ok(())
    }

    /// Douglas–Rachford step `γ = 5 / (√α ‖M‖)`, balancing the `α`-strongly
    /// convex penalty against the curvature of the data term.
    pub fn balanced_relaxed(mut self, alpha: f64, product_norm: f64) -> Self {
        self.gamma = BALANCED_DR_SCALE / (alpha.sqrt() * product_norm.max(f64::MIN_POSITIVE));
        self
    }

    /// ADMM penalty `ρ = 0.6 √α ‖W‖`.
    pub fn balanced_strict(mut self, alpha: f64, w_norm: f64) -> Self {
        self.rho = BALANCED_ADMM_SCALE * alpha.sqrt() * w_norm;
        self
    }
}

/// Output of a solve.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x: Vector,
    /// Relaxed model: the `h` iterate. Strict model: the exactly sparse output
    /// of the final thresholding step.
    pub h: Vector,
    /// `W x`, the quantity the strict-model error bounds refer to.
    pub wx: Vector,
    pub objective: f64,
    pub iterations: usize,
    /// Relative change of the governing iterate in the last step: `z` for
    /// Douglas–Rachford, `h + u` for ADMM.
    pub fixed_point_residual: f64,
    pub converged: bool,
    /// `‖Wx − h‖` for ADMM, `‖M(x,h) − (0,y)‖` for Douglas–Rachford.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub wall_time: Duration,
    pub trace: Vec<TraceRow>,
}

fn validate_chain(
    w: &LinearMap,
    a: &LinearMap,
    y_delta: &Vector,
    alpha: f64,
    l1: &WeightedL1,
) -> Result<()> {
    check_len("W codomain vs A domain", w.codomain_dim(), a.domain_dim())?;
    check_len("measurement vector", a.codomain_dim(), y_delta.len())?;
    check_len("weighted l1 dimension", w.codomain_dim(), l1.dim())?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if y_delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurement vector"));
    }
    Ok(())
}

/// `B(x, h) = ½‖Wx − h‖² + ½‖Ah − y‖² + α(R(x) + ‖h‖₁,κ)`.
#[derive(Clone, Debug)]
pub struct RelaxedProblem {
    w: LinearMap,
    a: LinearMap,
    y_delta: Vector,
    alpha: f64,
    l1: WeightedL1,
    r: QuadraticPenalty,
}

impl RelaxedProblem {
    pub fn new(
        w: LinearMap,
        a: LinearMap,
        y_delta: Vector,
        alpha: f64,
        l1: WeightedL1,
    ) -> Result<Self> {
        validate_chain(&w, &a, &y_delta, alpha, &l1)?;
        Ok(RelaxedProblem {
            w,
            a,
            y_delta,
            alpha,
            l1,
            r: QuadraticPenalty,
        })
    }

    pub fn w(&self) -> &LinearMap {
        &self.w
    }

    pub fn a(&self) -> &LinearMap {
        &self.a
    }

    pub fn y_delta(&self) -> &Vector {
        &self.y_delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn l1(&self) -> &WeightedL1 {
        &self.l1
    }

    pub fn penalty(&self) -> &QuadraticPenalty {
        &self.r
    }

    /// The product operator `M(x, h) = (Wx − h, Ah)`.
    pub fn product_map(&self) -> LinearMap {
        LinearMap::product(self.w.clone(), self.a.clone()).expect("dimensions validated")
    }

    pub fn objective(&self, x: &Vector, h: &Vector) -> Result<f64> {
        check_len("relaxed objective x", self.w.domain_dim(), x.len())?;
        check_len("relaxed objective h", self.w.codomain_dim(), h.len())?;
        let coupling = (self.w.apply_raw(x) - h).norm_squared();
        let data = (self.a.apply_raw(h) - &self.y_delta).norm_squared();
        Ok(0.5 * coupling + 0.5 * data + self.alpha * (self.r.eval(x) + self.l1.eval(h)?))
    }

    /// `‖M(x,h) − (0,y)‖`.
    pub fn data_residual(&self, x: &Vector, h: &Vector) -> Result<f64> {
        let coupling = (self.w.apply(x)? - h).norm_squared();
        let data = (self.a.apply(h)? - &self.y_delta).norm_squared();
        Ok((coupling + data).sqrt())
    }

    pub fn solve(&self, cfg: &SolverConfig) -> Result<SolveResult> {
        douglas_rachford::solve(self, cfg)
    }
}

/// `A(x) = ½‖AWx − y‖² + α(R(x) + ‖Wx‖₁,κ)`.
#[derive(Clone, Debug)]
pub struct StrictProblem {
    w: LinearMap,
    a: LinearMap,
    y_delta: Vector,
    alpha: f64,
    l1: WeightedL1,
    r: QuadraticPenalty,
}

impl StrictProblem {
    pub fn new(
        w: LinearMap,
        a: LinearMap,
        y_delta: Vector,
        alpha: f64,
        l1: WeightedL1,
    ) -> Result<Self> {
        validate_chain(&w, &a, &y_delta, alpha, &l1)?;
        Ok(StrictProblem {
            w,
            a,
            y_delta,
            alpha,
            l1,
            r: QuadraticPenalty,
        })
    }

    pub fn w(&self) -> &LinearMap {
        &self.w
    }

    pub fn a(&self) -> &LinearMap {
        &self.a
    }

    pub fn y_delta(&self) -> &Vector {
        &self.y_delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn l1(&self) -> &WeightedL1 {
        &self.l1
    }

    pub fn penalty(&self) -> &QuadraticPenalty {
        &self.r
    }

    pub fn objective(&self, x: &Vector) -> Result<f64> {
        check_len("strict objective x", self.w.domain_dim(), x.len())?;
        let wx = self.w.apply_raw(x);
        let data = (self.a.apply_raw(&wx) - &self.y_delta).norm_squared();
        Ok(0.5 * data + self.alpha * (self.r.eval(x) + self.l1.eval(&wx)?))
    }

    /// `‖AWx − y‖`.
    pub fn data_residual(&self, x: &Vector) -> Result<f64> {
        Ok((self.a.apply(&self.w.apply(x)?)? - &self.y_delta).norm())
    }

    pub fn solve(&self, cfg: &SolverConfig) -> Result<SolveResult> {
        admm::solve(self, cfg)
    }
}

/// Common interface used by [`reference_solve`].
pub trait Solvable {
    fn signal_dim(&self) -> usize;
    fn run(&self, cfg: &SolverConfig) -> Result<SolveResult>;
}

impl Solvable for RelaxedProblem {
    fn signal_dim(&self) -> usize {
        self.w.domain_dim().max(self.w.codomain_dim())
    }

    fn run(&self, cfg: &SolverConfig) -> Result<SolveResult> {
        self.solve(cfg)
    }
}

impl Solvable for StrictProblem {
    fn signal_dim(&self) -> usize {
        self.w.domain_dim().max(self.w.codomain_dim())
    }

    fn run(&self, cfg: &SolverConfig) -> Result<SolveResult> {
        self.solve(cfg)
    }
}

/// High-accuracy run of the matching splitting method (up to 500,000
/// iterations, tolerance 1e-14). Step parameters and seed are taken from
/// `cfg`. A run that hits the cap or stalls at the roundoff floor for
/// [`REFERENCE_STALL_WINDOW`] iterations is returned with `converged == false`.
pub fn reference_solve<P: Solvable>(problem: &P, cfg: &SolverConfig) -> Result<SolveResult> {
    if problem.signal_dim() > REFERENCE_MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "reference solves are limited to dimension {REFERENCE_MAX_DIM}, got {}",
            problem.signal_dim()
        )));
    }
    let cfg = SolverConfig {
        max_iters: REFERENCE_MAX_ITERS,
        tol: REFERENCE_TOL,
        stall_window: REFERENCE_STALL_WINDOW,
        ..cfg.clone()
    };
    problem.run(&cfg)
}

fn random_start(len: usize, seed: u64, salt: u64) -> Vector {
    use rand::Rng;
    if seed == 0 {
        return Vector::zeros(len);
    }
    let mut rng = crate::rng::seeded(crate::rng::derive_seed(seed, &[salt]));
    Vector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

fn ensure_finite(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Tracks whether the residual is still making progress.
struct StallGuard {
    window: usize,
    best: f64,
    last_progress: usize,
}

impl StallGuard {
    fn new(window: usize) -> Self {
        StallGuard {
            window,
            best: f64::INFINITY,
            last_progress: 0,
        }
    }

    /// Returns `true` when the run should stop.
    fn stalled(&mut self, iteration: usize, residual: f64) -> bool {
        if residual <= 0.5 * self.best || self.best == f64::INFINITY {
            self.best = residual;
            self.last_progress = iteration;
        }
        self.window > 0 && iteration - self.last_progress >= self.window
    }
}
