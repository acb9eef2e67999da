//! Run configuration with a canonical `key=value` text form.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use coreg::experiments::{AKind, InstanceSpec, Model, StepRule, SweepConfig, WKind};
use coreg::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Certify,
    Oracle,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Certify => "certify",
            Command::Oracle => "oracle",
        })
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "solve" => Ok(Command::Solve),
            "sweep" => Ok(Command::Sweep),
            "certify" => Ok(Command::Certify),
            "oracle" => Ok(Command::Oracle),
            other => Err(format!("unknown command `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<Model>,
    pub n: usize,
    pub m: usize,
    pub sparsity: usize,
    pub seed: u64,
    pub big_c: f64,
    pub delta: f64,
    /// Overrides `α = C·δ` when set.
    pub alpha: Option<f64>,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub jobs: usize,
    pub w: WKind,
    pub w_scale: f64,
    pub a: AKind,
    pub kappa: f64,
    pub step_rule: StepRule,
    pub max_iters: usize,
    pub tol: f64,
    pub gamma: f64,
    pub rho: f64,
    pub lambda_relax: f64,
    pub init_seed: u64,
    pub reference: bool,
    pub bounds: bool,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub timing: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Regularization weight per unit `C` used for `δ = 0` without `--alpha`.
pub const NOISELESS_ALPHA: f64 = 1e-6;

/// Keys in canonical order.
pub const KEYS: [&str; 31] = [
    "command",
    "model",
    "n",
    "m",
    "sparsity",
    "seed",
    "C",
    "delta",
    "alpha",
    "deltas",
    "trials",
    "jobs",
    "w",
    "w_scale",
    "a",
    "kappa",
    "step_rule",
    "max_iters",
    "tol",
    "gamma",
    "rho",
    "lambda_relax",
    "init_seed",
    "reference",
    "bounds",
    "out",
    "csv",
    "svg",
    "timing",
    "trace",
    "report",
];

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let solver = SolverConfig::default();
        RunConfig {
            command,
            model: None,
            n: 256,
            m: 128,
            sparsity: 8,
            seed: 7,
            big_c: 1.0,
            delta: 1e-5,
            alpha: None,
            deltas: SweepConfig::default_deltas(),
            trials: 3,
            jobs: 1,
            w: WKind::Integration,
            w_scale: 1.0,
            a: AKind::Bernoulli,
            kappa: 1.0,
            step_rule: StepRule::Balanced,
            max_iters: 200_000,
            tol: solver.tol,
            gamma: solver.gamma,
            rho: solver.rho,
            lambda_relax: solver.lambda_relax,
            init_seed: solver.seed,
            reference: false,
            bounds: false,
            out: None,
            csv: None,
            svg: None,
            timing: None,
            trace: None,
            report: None,
        }
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        Some(match key {
            "command" => self.command.to_string(),
            "model" => self.model.map(|m| m.to_string()).unwrap_or_default(),
            "n" => self.n.to_string(),
            "m" => self.m.to_string(),
            "sparsity" => self.sparsity.to_string(),
            "seed" => self.seed.to_string(),
            "C" => format!("{:?}", self.big_c),
            "delta" => format!("{:?}", self.delta),
            "alpha" => self.alpha.map(|a| format!("{a:?}")).unwrap_or_default(),
            "deltas" => self.deltas.iter().map(|d| format!("{d:?}")).collect::<Vec<_>>().join(","),
            "trials" => self.trials.to_string(),
            "jobs" => self.jobs.to_string(),
            "w" => self.w.to_string(),
            "w_scale" => format!("{:?}", self.w_scale),
            "a" => self.a.to_string(),
            "kappa" => format!("{:?}", self.kappa),
            "step_rule" => self.step_rule.to_string(),
            "max_iters" => self.max_iters.to_string(),
            "tol" => format!("{:?}", self.tol),
            "gamma" => format!("{:?}", self.gamma),
            "rho" => format!("{:?}", self.rho),
            "lambda_relax" => format!("{:?}", self.lambda_relax),
            "init_seed" => self.init_seed.to_string(),
            "reference" => self.reference.to_string(),
            "bounds" => self.bounds.to_string(),
            "out" => path(&self.out),
            "csv" => path(&self.csv),
            "svg" => path(&self.svg),
            "timing" => path(&self.timing),
            "trace" => path(&self.trace),
            "report" => path(&self.report),
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.trim()
                .parse()
                .map_err(|_| format!("invalid value `{v}` for `{key}`"))
        }
        fn flag(key: &str, v: &str) -> Result<bool, String> {
            match v.trim() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!("invalid value `{v}` for `{key}` (expected true|false)")),
            }
        }
        fn path(v: &str) -> Option<PathBuf> {
            let v = v.trim();
            (!v.is_empty()).then(|| PathBuf::from(v))
        }
        let v = value;
        match key {
            "command" => self.command = v.trim().parse()?,
            "model" => {
                self.model = if v.trim().is_empty() {
                    None
                } else {
                    Some(v.trim().parse().map_err(|e: coreg::Error| e.to_string())?)
                }
            }
            "n" => self.n = num(key, v)?,
            "m" => self.m = num(key, v)?,
            "sparsity" => self.sparsity = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "C" => self.big_c = num(key, v)?,
            "delta" => self.delta = num(key, v)?,
            "alpha" => self.alpha = if v.trim().is_empty() { None } else { Some(num(key, v)?) },
            "deltas" => self.deltas = parse_list(v)?,
            "trials" => self.trials = num(key, v)?,
            "jobs" => self.jobs = num(key, v)?,
            "w" => self.w = v.trim().parse().map_err(|e: coreg::Error| e.to_string())?,
            "w_scale" => self.w_scale = num(key, v)?,
            "a" => self.a = v.trim().parse().map_err(|e: coreg::Error| e.to_string())?,
            "kappa" => self.kappa = num(key, v)?,
            "step_rule" => self.step_rule = v.trim().parse().map_err(|e: coreg::Error| e.to_string())?,
            "max_iters" => self.max_iters = num(key, v)?,
            "tol" => self.tol = num(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "rho" => self.rho = num(key, v)?,
            "lambda_relax" => self.lambda_relax = num(key, v)?,
            "init_seed" => self.init_seed = num(key, v)?,
            "reference" => self.reference = flag(key, v)?,
            "bounds" => self.bounds = flag(key, v)?,
            "out" => self.out = path(v),
            "csv" => self.csv = path(v),
            "svg" => self.svg = path(v),
            "timing" => self.timing = path(v),
            "trace" => self.trace = path(v),
            "report" => self.report = path(v),
            other => return Err(format!("unknown configuration key `{other}`")),
        }
        Ok(())
    }

    /// One `key=value` line per key, in [`KEYS`] order.
    pub fn to_canonical(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
            self.set(k.trim(), v).map_err(|e| format!("config line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    pub fn from_canonical(text: &str) -> Result<Self, String> {
        let command = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("command="))
            .ok_or("missing `command` key")?
            .parse()?;
        let mut cfg = RunConfig::new(command);
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn instance_spec(&self) -> InstanceSpec {
        InstanceSpec {
            n: self.n,
            m: self.m,
            sparsity: self.sparsity,
            seed: self.seed,
            w: self.w,
            w_scale: self.w_scale,
            a: self.a,
            kappa: self.kappa,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            gamma: self.gamma,
            lambda_relax: self.lambda_relax,
            rho: self.rho,
            seed: self.init_seed,
            trace: self.trace.is_some(),
            stall_window: 0,
        }
    }

    /// `α` for a single solve: the override, else `C·δ`, else (noiseless
    /// data) `C·NOISELESS_ALPHA`.
    pub fn alpha_for_solve(&self) -> f64 {
        match self.alpha {
            Some(a) => a,
            None if self.delta > 0.0 => self.big_c * self.delta,
            None => self.big_c * NOISELESS_ALPHA,
        }
    }

    pub fn model_or_relaxed(&self) -> Model {
        self.model.unwrap_or(Model::Relaxed)
    }
}

pub fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("invalid noise level `{s}`")))
        .collect()
}
