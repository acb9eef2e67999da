use std::time::Duration;

use rayon::prelude::*;

use super::{Instance, Model, StepRule};
use crate::certificates::RateConstants;
use crate::error::{Error, Result};
use crate::solvers::{reference_solve, RelaxedProblem, SolveResult, SolverConfig, StrictProblem};

/// Records with an error at or below this value are left out of rate fits.
pub const FIT_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub model: Model,
    /// Strictly decreasing, positive.
    pub deltas: Vec<f64>,
    /// `α = C·δ`.
    pub big_c: f64,
    pub trials: usize,
    pub solver: SolverConfig,
    pub step_rule: StepRule,
    /// Use [`reference_solve`] instead of `solver.max_iters`/`solver.tol`.
    pub reference: bool,
    /// Worker threads; the output does not depend on it.
    pub jobs: usize,
    /// A bound `b·δ` passes when `err ≤ b·δ·(1 + rel) + abs`.
    pub bound_rel_slack: f64,
    pub bound_abs_slack: f64,
}

impl SweepConfig {
    /// Seven points `1e-2 · 10^{-k/2}`, `k = 0..6`.
    pub fn default_deltas() -> Vec<f64> {
        (0..7)
            .map(|k| 1e-2 * 10f64.powf(-(k as f64) / 2.0))
            .collect()
    }

    pub fn new(model: Model) -> Self {
        SweepConfig {
            model,
            deltas: Self::default_deltas(),
            big_c: 1.0,
            trials: 3,
            solver: SolverConfig {
                max_iters: 200_000,
                ..SolverConfig::default()
            },
            step_rule: StepRule::Balanced,
            reference: false,
            jobs: 1,
            bound_rel_slack: 1e-6,
            bound_abs_slack: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one noise level is required".into(),
            ));
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter(
                "noise levels must be positive".into(),
            ));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(
                "noise levels must be strictly decreasing".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.big_c > 0.0 && self.big_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {}",
                self.big_c
            )));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidParameter("jobs must be at least 1".into()));
        }
        self.solver.validate()
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub delta: f64,
    pub alpha: f64,
    /// `½‖x − x⋆‖²`.
    pub bregman_x: f64,
    /// `‖h − h⋆‖` (relaxed) or `‖Wx − Wx⋆‖` (strict).
    pub err_h: f64,
    /// `‖M(x,h) − (0,yδ)‖` (relaxed) or `‖AWx − yδ‖` (strict).
    pub residual: f64,
    pub iterations: usize,
    pub bound_c_rhs: Option<f64>,
    pub bound_d_rhs: Option<f64>,
    pub pass_c: Option<bool>,
    pub pass_d: Option<bool>,
}

/// Per-record run diagnostics kept out of the CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialInfo {
    pub delta_index: usize,
    pub trial: usize,
    pub converged: bool,
    pub fixed_point_residual: f64,
    pub wall_time: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    /// Ordered by `δ` descending, then trial ascending.
    pub records: Vec<SweepRecord>,
    pub info: Vec<TrialInfo>,
    /// Fit of the per-`δ` median `err_h`; `None` with fewer than two usable points.
    pub fit: Option<RateFit>,
}

impl SweepOutcome {
    pub fn all_converged(&self) -> bool {
        self.info.iter().all(|t| t.converged)
    }

    /// `(δ, median err_h)` per noise level, in sweep order.
    pub fn medians(&self) -> Vec<(f64, f64)> {
        medians_by_delta(&self.records)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn medians_by_delta(records: &[SweepRecord]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in records {
        match out.last_mut() {
            Some((d, errs)) if *d == r.delta => errs.push(r.err_h),
            _ => out.push((r.delta, vec![r.err_h])),
        }
    }
    out.into_iter().map(|(d, e)| (d, median(&e))).collect()
}

/// Least-squares line through `(log δ, log err)`, skipping `err ≤ 1e-14`.
pub fn fit_rate(points: &[(f64, f64)]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, e)| *d > 0.0 && *e > FIT_FLOOR && e.is_finite())
        .map(|(d, e)| (d.ln(), e.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(RateFit {
        slope,
        intercept,
        r_squared,
        points_used: n,
    })
}

/// Runs every `(δ, trial)` pair. With `constants`, each record also carries
/// `c·δ`, `d·δ` and whether the measured errors stay below them.
pub fn run_sweep(
    cfg: &SweepConfig,
    inst: &Instance,
    constants: Option<&RateConstants>,
) -> Result<SweepOutcome> {
    cfg.validate()?;
    let step_norm = match (cfg.step_rule, cfg.model) {
        (StepRule::Fixed, _) => 0.0,
        (StepRule::Balanced, Model::Relaxed) => {
            crate::operators::LinearMap::product(inst.w.clone(), inst.a.clone())?
                .operator_norm(1e-10)
        }
        (StepRule::Balanced, Model::Strict) => inst.w.operator_norm(1e-10),
    };
    let tasks: Vec<(usize, usize)> = (0..cfg.deltas.len())
        .flat_map(|d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let run = |&(di, trial): &(usize, usize)| {
        run_one(cfg, inst, constants, step_norm, di, trial).map_err(|e| Error::Sweep {
            delta: cfg.deltas[di],
            trial,
            source: Box::new(e),
        })
    };
    let results: Vec<Result<(SweepRecord, TrialInfo)>> = if cfg.jobs == 1 {
        tasks.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    };
    let mut records = Vec::with_capacity(results.len());
    let mut info = Vec::with_capacity(results.len());
    for r in results {
        let (rec, ti) = r?;
        records.push(rec);
        info.push(ti);
    }
    let fit = fit_rate(&medians_by_delta(&records));
    Ok(SweepOutcome { records, info, fit })
}

fn run_one(
    cfg: &SweepConfig,
    inst: &Instance,
    constants: Option<&RateConstants>,
    step_norm: f64,
    di: usize,
    trial: usize,
) -> Result<(SweepRecord, TrialInfo)> {
    let delta = cfg.deltas[di];
    let alpha = cfg.big_c * delta;
    let y_delta = inst.noisy_data(delta, di, trial)?;
    let mut solver = cfg.solver.clone();
    if cfg.step_rule == StepRule::Balanced {
        solver = match cfg.model {
            Model::Relaxed => solver.balanced_relaxed(alpha, step_norm),
            Model::Strict => solver.balanced_strict(alpha, step_norm),
        };
    }
    let (result, residual, err_h): (SolveResult, f64, f64) = match cfg.model {
        Model::Relaxed => {
            let p = RelaxedProblem::new(
                inst.w.clone(),
                inst.a.clone(),
                y_delta,
                alpha,
                inst.l1.clone(),
            )?;
            let r = if cfg.reference {
                reference_solve(&p, &solver)?
            } else {
                p.solve(&solver)?
            };
            let residual = p.data_residual(&r.x, &r.h)?;
            let err = (&r.h - &inst.phantom.h_star).norm();
            (r, residual, err)
        }
        Model::Strict => {
            let p = StrictProblem::new(
                inst.w.clone(),
                inst.a.clone(),
                y_delta,
                alpha,
                inst.l1.clone(),
            )?;
            let r = if cfg.reference {
                reference_solve(&p, &solver)?
            } else {
                p.solve(&solver)?
            };
            let residual = p.data_residual(&r.x)?;
            let err = (&r.wx - &inst.phantom.h_star).norm();
            (r, residual, err)
        }
    };
    let bregman_x =
        crate::regularizers::QuadraticPenalty.bregman(&result.x, &inst.phantom.x_star)?;
    let within =
        |err: f64, rhs: f64| err <= rhs * (1.0 + cfg.bound_rel_slack) + cfg.bound_abs_slack;
    let (bound_c_rhs, bound_d_rhs, pass_c, pass_d) = match constants {
        Some(k) => {
            let (c, d) = (k.c * delta, k.d * delta);
            (
                Some(c),
                Some(d),
                Some(within(bregman_x, c)),
                Some(within(err_h, d)),
            )
        }
        None => (None, None, None, None),
    };
    let record = SweepRecord {
        delta,
        alpha,
        bregman_x,
        err_h,
        residual,
        iterations: result.iterations,
        bound_c_rhs,
        bound_d_rhs,
        pass_c,
        pass_d,
    };
    let info = TrialInfo {
        delta_index: di,
        trial,
        converged: result.converged,
        fixed_point_residual: result.fixed_point_residual,
        wall_time: result.wall_time,
    };
    Ok((record, info))
}
