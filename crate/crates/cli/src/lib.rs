//! Command-line front end: `solve`, `sweep`, `certify` and `oracle`.
//!
//! Exit codes: 0 success, 1 usage error, 2 solver non-convergence or
//! failure, 3 certificate invalid.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use coreg::certificates::{
    check_restricted_injectivity, find_certificate_relaxed, find_certificate_strict, rate_constants_relaxed,
    rate_constants_strict, RateConstants,
};
use coreg::experiments::{
    determinism_hash, emit_csv, emit_svg, run_sweep, write_timing, Instance, Model, StepRule, SweepConfig,
};
use coreg::solvers::{reference_solve, write_trace_csv, RelaxedProblem, SolveResult, StrictProblem};
use coreg::{Error, LinearMap, Vector};

/// `println!` that drops write errors, so a closed pipe ends output quietly.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub use config::{Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;

/// Absolute objective tolerance of the `oracle` comparison.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "coreg", version, about = "Sparse co-regularization from indirect compressed data")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Solve one instance at a single noise level.
    Solve(Flags),
    /// Run a noise-level sweep with α = Cδ and fit the error rate.
    Sweep(Flags),
    /// Search source certificates and report the rate constants.
    Certify(Flags),
    /// Compare a solve against a high-accuracy reference solve.
    Oracle(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// relaxed | strict
    #[arg(long)]
    model: Option<String>,
    /// Signal length (power of two).
    #[arg(long)]
    n: Option<String>,
    /// Number of measurements.
    #[arg(long)]
    m: Option<String>,
    /// Number of nonzero wavelet coefficients of h⋆.
    #[arg(long)]
    sparsity: Option<String>,
    /// Base seed for sensing matrix, phantom and noise.
    #[arg(long)]
    seed: Option<String>,
    /// Parameter choice α = C·δ.
    #[arg(long = "C")]
    big_c: Option<String>,
    /// Noise level for `solve` and `oracle`.
    #[arg(long)]
    delta: Option<String>,
    /// Explicit α, overriding C·δ.
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated, strictly decreasing noise levels for `sweep`.
    #[arg(long)]
    deltas: Option<String>,
    /// Trials per noise level in `sweep`.
    #[arg(long)]
    trials: Option<String>,
    /// Worker threads for `sweep`.
    #[arg(long)]
    jobs: Option<String>,
    /// identity | integration
    #[arg(long)]
    w: Option<String>,
    /// Grid spacing of the integration operator.
    #[arg(long = "w-scale")]
    w_scale: Option<String>,
    /// identity | bernoulli
    #[arg(long)]
    a: Option<String>,
    /// Uniform ℓ¹ weight.
    #[arg(long)]
    kappa: Option<String>,
    /// balanced | fixed
    #[arg(long = "step-rule")]
    step_rule: Option<String>,
    /// Iteration cap per solve.
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    /// Relative stopping tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// Douglas–Rachford step (fixed step rule).
    #[arg(long)]
    gamma: Option<String>,
    /// ADMM penalty (fixed step rule).
    #[arg(long)]
    rho: Option<String>,
    /// Douglas–Rachford relaxation in (0, 2).
    #[arg(long = "lambda-relax")]
    lambda_relax: Option<String>,
    /// Solver initialization seed (0 starts from zero).
    #[arg(long = "init-seed")]
    init_seed: Option<String>,
    /// Use reference-accuracy solves in `sweep`.
    #[arg(long)]
    reference: bool,
    /// Compute certificate bounds for every sweep record.
    #[arg(long)]
    bounds: bool,
    /// Output directory of `solve`.
    #[arg(long)]
    out: Option<String>,
    /// Sweep CSV path.
    #[arg(long)]
    csv: Option<String>,
    /// Sweep plot path.
    #[arg(long)]
    svg: Option<String>,
    /// Wall-time sidecar of `sweep`.
    #[arg(long)]
    timing: Option<String>,
    /// Per-iteration trace CSV of `solve`.
    #[arg(long)]
    trace: Option<String>,
    /// Write the `certify` report to this file.
    #[arg(long)]
    report: Option<String>,
    /// Plain-text key=value file; flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the canonical configuration and exit.
    #[arg(long = "print-config")]
    print_config: bool,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let opts: [(&'static str, &Option<String>); 28] = [
            ("model", &self.model),
            ("n", &self.n),
            ("m", &self.m),
            ("sparsity", &self.sparsity),
            ("seed", &self.seed),
            ("C", &self.big_c),
            ("delta", &self.delta),
            ("alpha", &self.alpha),
            ("deltas", &self.deltas),
            ("trials", &self.trials),
            ("jobs", &self.jobs),
            ("w", &self.w),
            ("w_scale", &self.w_scale),
            ("a", &self.a),
            ("kappa", &self.kappa),
            ("step_rule", &self.step_rule),
            ("max_iters", &self.max_iters),
            ("tol", &self.tol),
            ("gamma", &self.gamma),
            ("rho", &self.rho),
            ("lambda_relax", &self.lambda_relax),
            ("init_seed", &self.init_seed),
            ("out", &self.out),
            ("csv", &self.csv),
            ("svg", &self.svg),
            ("timing", &self.timing),
            ("trace", &self.trace),
            ("report", &self.report),
        ];
        let mut out: Vec<(&'static str, &str)> = opts
            .iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (*k, v)))
            .collect();
        if self.reference {
            out.push(("reference", "true"));
        }
        if self.bounds {
            out.push(("bounds", "true"));
        }
        out
    }
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_)
            | Error::Parse(_)
            | Error::DimensionMismatch { .. }
            | Error::NotPowerOfTwo(_)
            | Error::NotInvertible(_)
            | Error::IndexOutOfRange { .. }
            | Error::BudgetExceeded { .. }
            | Error::Descriptor(_)
            | Error::Io(_) => EXIT_USAGE,
            Error::BoxViolation { .. }
            | Error::NoMargin
            | Error::InvalidSubgradient(_)
            | Error::UndefinedConstants(_) => EXIT_CERTIFICATE,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

/// Parses arguments (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, flags) = match cli.command {
        Sub::Solve(f) => (Command::Solve, f),
        Sub::Sweep(f) => (Command::Sweep, f),
        Sub::Certify(f) => (Command::Certify, f),
        Sub::Oracle(f) => (Command::Oracle, f),
    };
    let cfg = match build_config(command, &flags) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprintln!("run `coreg {command} --help` for usage");
            return EXIT_USAGE;
        }
    };
    if flags.print_config {
        print!("{}", cfg.to_canonical());
        return EXIT_OK;
    }
    let result = match command {
        Command::Solve => cmd_solve(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Certify => cmd_certify(&cfg),
        Command::Oracle => cmd_oracle(&cfg),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn build_config(command: Command, flags: &Flags) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::new(command);
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        cfg.apply_text(&text)?;
        cfg.command = command;
    }
    for (k, v) in flags.pairs() {
        cfg.set(k, v).map_err(|e| format!("--{}: {e}", k.replace('_', "-")))?;
    }
    if matches!(command, Command::Solve | Command::Sweep) && cfg.model.is_none() {
        return Err("missing required flag --model <relaxed|strict>".into());
    }
    if !(cfg.delta >= 0.0 && cfg.delta.is_finite()) {
        return Err(format!("--delta must be a nonnegative number, got {}", cfg.delta));
    }
    if let Some(a) = cfg.alpha {
        if !(a > 0.0 && a.is_finite()) {
            return Err(format!("--alpha must be positive, got {a}"));
        }
    }
    Ok(cfg)
}

/// Keys that do not affect results; kept out of output metadata so the
/// determinism hash is independent of paths and thread count.
const RUN_LOCAL_KEYS: [&str; 7] = ["jobs", "out", "csv", "svg", "timing", "trace", "report"];

fn metadata(cfg: &RunConfig, inst: &Instance) -> Vec<(String, String)> {
    let mut out = vec![
        ("version".to_string(), coreg::VERSION.to_string()),
        ("w_descriptor".to_string(), inst.w.to_descriptor()),
        ("a_descriptor".to_string(), inst.a.to_descriptor()),
        ("basis".to_string(), format!("db2(n={})", inst.basis.dim())),
        ("phantom_bias".to_string(), "coarsest 25% of wavelet indices".to_string()),
        ("phantom_seed".to_string(), inst.spec.phantom_seed().to_string()),
        ("sensing_seed".to_string(), inst.spec.sensing_seed().to_string()),
    ];
    for k in config::KEYS.iter().filter(|k| !RUN_LOCAL_KEYS.contains(k)) {
        out.push((k.to_string(), cfg.get(k).unwrap_or_default()));
    }
    out
}

fn write_vector(path: &Path, header: &[(String, String)], v: &Vector) -> Result<(), Failure> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for (k, val) in header {
        writeln!(f, "# {k}={val}")?;
    }
    for x in v.iter() {
        writeln!(f, "{x:?}")?;
    }
    f.flush()?;
    Ok(())
}

fn solve_once(cfg: &RunConfig, inst: &Instance, y: Vector, alpha: f64, reference: bool) -> Result<SolveResult, Failure> {
    let mut solver = cfg.solver_config();
    let model = cfg.model_or_relaxed();
    if cfg.step_rule == StepRule::Balanced {
        solver = match model {
            Model::Relaxed => {
                let norm = LinearMap::product(inst.w.clone(), inst.a.clone())?.operator_norm(1e-10);
                solver.balanced_relaxed(alpha, norm)
            }
            Model::Strict => solver.balanced_strict(alpha, inst.w.operator_norm(1e-10)),
        };
    }
    let w = inst.w.clone();
    let a = inst.a.clone();
    Ok(match model {
        Model::Relaxed => {
            let p = RelaxedProblem::new(w, a, y, alpha, inst.l1.clone())?;
            if reference {
                reference_solve(&p, &solver)?
            } else {
                p.solve(&solver)?
            }
        }
        Model::Strict => {
            let p = StrictProblem::new(w, a, y, alpha, inst.l1.clone())?;
            if reference {
                reference_solve(&p, &solver)?
            } else {
                p.solve(&solver)?
            }
        }
    })
}

fn cmd_solve(cfg: &RunConfig) -> Result<i32, Failure> {
    let inst = cfg.instance_spec().build()?;
    let alpha = cfg.alpha_for_solve();
    let y = inst.noisy_data(cfg.delta, 0, 0)?;
    let r = solve_once(cfg, &inst, y, alpha, false)?;

    let model = cfg.model_or_relaxed();
    let err_h = match model {
        Model::Relaxed => (&r.h - &inst.phantom.h_star).norm(),
        Model::Strict => (&r.wx - &inst.phantom.h_star).norm(),
    };
    let diag: Vec<(&str, String)> = vec![
        ("converged", r.converged.to_string()),
        ("iterations", r.iterations.to_string()),
        ("alpha", format!("{alpha:?}")),
        ("objective", format!("{:?}", r.objective)),
        ("fixed_point_residual", format!("{:?}", r.fixed_point_residual)),
        ("primal_residual", format!("{:?}", r.primal_residual)),
        ("dual_residual", format!("{:?}", r.dual_residual)),
        ("err_h", format!("{err_h:?}")),
        ("bregman_x", format!("{:?}", 0.5 * (&r.x - &inst.phantom.x_star).norm_squared())),
        ("wall_time_s", format!("{:?}", r.wall_time.as_secs_f64())),
    ];
    for (k, v) in &diag {
        out!("{k}={v}");
    }

    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("coreg-out"));
    fs::create_dir_all(&dir)?;
    let mut header = metadata(cfg, &inst);
    header.push(("alpha_used".to_string(), format!("{alpha:?}")));
    write_vector(&dir.join("x.txt"), &header, &r.x)?;
    write_vector(&dir.join("h.txt"), &header, &r.h)?;
    write_vector(&dir.join("wx.txt"), &header, &r.wx)?;
    let mut f = fs::File::create(dir.join("diagnostics.txt"))?;
    for (k, v) in &header {
        writeln!(f, "# {k}={v}")?;
    }
    for (k, v) in &diag {
        writeln!(f, "{k}={v}")?;
    }
    if let Some(path) = &cfg.trace {
        write_trace_csv(&r.trace, std::io::BufWriter::new(fs::File::create(path)?))?;
    }
    Ok(if r.converged { EXIT_OK } else { EXIT_SOLVER })
}

/// Certificate, injectivity and (when defined) constants for `model`, as
/// report lines. The boolean is the overall validity.
fn certify(inst: &Instance, model: Model, big_c: f64) -> Result<(Vec<(String, String)>, Option<RateConstants>, bool), Failure> {
    let x_star = &inst.phantom.x_star;
    let mut lines: Vec<(String, String)> = vec![("model".to_string(), model.to_string())];
    let relaxed;
    let strict;
    let (cert_valid, omega, support) = match model {
        Model::Relaxed => {
            let c = find_certificate_relaxed(&inst.w, &inst.a, &inst.basis, &inst.l1, x_star)?;
            lines.extend(c.summary().into_iter().map(|(k, v)| (format!("cert.{k}"), v)));
            relaxed = Some(c);
            strict = None;
            let c = relaxed.as_ref().unwrap();
            (c.valid, c.omega().cloned(), c.support.clone())
        }
        Model::Strict => {
            let c = find_certificate_strict(&inst.w, &inst.a, &inst.basis, &inst.l1, x_star)?;
            lines.extend(c.summary().into_iter().map(|(k, v)| (format!("cert.{k}"), v)));
            strict = Some(c);
            relaxed = None;
            let c = strict.as_ref().unwrap();
            (c.valid, c.omega().cloned(), c.support.clone())
        }
    };
    // Without a certificate, injectivity is still reported on the support.
    let inj = check_restricted_injectivity(&inst.a, &inst.basis, omega.as_ref().unwrap_or(&support))?;
    lines.extend(inj.summary().into_iter().map(|(k, v)| (format!("inj.{k}"), v)));
    let mut rc = None;
    if cert_valid && inj.injective && omega.is_some() {
        let k = match (&relaxed, &strict) {
            (Some(c), _) => rate_constants_relaxed(c, &inj, big_c, inj.a_norm),
            (_, Some(c)) => rate_constants_strict(c, &inj, big_c, inj.a_norm),
            _ => unreachable!(),
        };
        match k {
            Ok(k) => {
                lines.extend(k.summary().into_iter().map(|(key, v)| (format!("const.{key}"), v)));
                rc = Some(k);
            }
            Err(e) => lines.push(("const.error".to_string(), e.to_string())),
        }
    }
    let valid = cert_valid && inj.injective && rc.is_some();
    lines.push(("valid".to_string(), valid.to_string()));
    Ok((lines, rc, valid))
}

/// Parses `key=value` report lines back into pairs.
pub fn parse_report(text: &str) -> Result<Vec<(String, String)>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| format!("malformed report line `{l}`"))
        })
        .collect()
}

fn cmd_certify(cfg: &RunConfig) -> Result<i32, Failure> {
    let inst = cfg.instance_spec().build()?;
    let (lines, _, valid) = certify(&inst, cfg.model_or_relaxed(), cfg.big_c)?;
    let text: String = lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    print!("{text}");
    if let Some(path) = &cfg.report {
        fs::write(path, &text)?;
    }
    Ok(if valid { EXIT_OK } else { EXIT_CERTIFICATE })
}

fn cmd_sweep(cfg: &RunConfig) -> Result<i32, Failure> {
    let inst = cfg.instance_spec().build()?;
    let model = cfg.model_or_relaxed();
    let sweep = SweepConfig {
        model,
        deltas: cfg.deltas.clone(),
        big_c: cfg.big_c,
        trials: cfg.trials,
        solver: cfg.solver_config(),
        step_rule: cfg.step_rule,
        reference: cfg.reference,
        jobs: cfg.jobs,
        ..SweepConfig::new(model)
    };
    sweep.validate()?;
    let mut meta = metadata(cfg, &inst);
    let constants = if cfg.bounds {
        let (lines, rc, valid) = certify(&inst, model, cfg.big_c)?;
        meta.extend(lines.into_iter().map(|(k, v)| (format!("certificate.{k}"), v)));
        if !valid {
            eprintln!("warning: no valid certificate; bound columns left empty");
        }
        rc
    } else {
        None
    };
    let outcome = run_sweep(&sweep, &inst, constants.as_ref())?;

    let csv_path = cfg.csv.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let mut buf = Vec::new();
    emit_csv(&outcome.records, outcome.fit.as_ref(), &meta, &mut buf)?;
    fs::write(&csv_path, &buf)?;
    let text = String::from_utf8(buf).expect("CSV output is UTF-8");
    let svg_path = cfg.svg.clone().unwrap_or_else(|| csv_path.with_extension("svg"));
    emit_svg(&outcome.records, outcome.fit.as_ref(), std::io::BufWriter::new(fs::File::create(&svg_path)?))?;
    let timing_path = cfg.timing.clone().unwrap_or_else(|| csv_path.with_extension("timing.csv"));
    write_timing(&outcome.records, &outcome.info, std::io::BufWriter::new(fs::File::create(&timing_path)?))?;

    match &outcome.fit {
        Some(f) => {
            out!("slope={:?}", f.slope);
            out!("r_squared={:?}", f.r_squared);
            out!("points_used={}", f.points_used);
        }
        None => out!("slope="),
    }
    out!("records={}", outcome.records.len());
    out!("converged={}", outcome.all_converged());
    out!("hash={}", determinism_hash(&text));
    out!("csv={}", csv_path.display());
    Ok(if outcome.all_converged() { EXIT_OK } else { EXIT_SOLVER })
}

fn cmd_oracle(cfg: &RunConfig) -> Result<i32, Failure> {
    let inst = cfg.instance_spec().build()?;
    let alpha = cfg.alpha_for_solve();
    let y = inst.noisy_data(cfg.delta, 0, 0)?;
    let fast = solve_once(cfg, &inst, y.clone(), alpha, false)?;
    let reference = solve_once(cfg, &inst, y, alpha, true)?;
    let gap = fast.objective - reference.objective;
    let pass = gap <= ORACLE_TOLERANCE;
    out!("objective={:?}", fast.objective);
    out!("reference_objective={:?}", reference.objective);
    out!("objective_gap={gap:?}");
    out!("solution_distance={:?}", (&fast.x - &reference.x).norm());
    out!("reference_converged={}", reference.converged);
    out!("reference_iterations={}", reference.iterations);
    out!("pass={pass}");
    Ok(if pass { EXIT_OK } else { EXIT_SOLVER })
}
