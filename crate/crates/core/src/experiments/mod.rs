//! Noise-level sweeps: phantoms, exact-level noise, `α = Cδ` runs, rate fits
//! and CSV/SVG output.

mod csv;
mod svg;
mod sweep;

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::basis::WaveletBasis;
use crate::error::{check_len, Error, Result};
use crate::operators::LinearMap;
use crate::regularizers::WeightedL1;
use crate::rng::{derive_seed, seeded};
use crate::Vector;

pub use csv::{determinism_hash, emit_csv, parse_csv, write_timing, ParsedCsv, CSV_COLUMNS};
pub use svg::emit_svg;
pub use sweep::{
    fit_rate, median, run_sweep, RateFit, SweepConfig, SweepOutcome, SweepRecord, TrialInfo,
};

/// Fraction of wavelet indices (coarsest first) from which phantom supports are drawn.
pub const PHANTOM_COARSE_FRACTION: f64 = 0.25;

/// Phantom coefficient magnitudes are uniform in this interval.
pub const PHANTOM_MAGNITUDE: (f64, f64) = (0.5, 1.5);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Relaxed,
    Strict,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Relaxed => "relaxed",
            Model::Strict => "strict",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relaxed" => Ok(Model::Relaxed),
            "strict" => Ok(Model::Strict),
            other => Err(Error::Parse(format!(
                "unknown model `{other}` (expected relaxed|strict)"
            ))),
        }
    }
}

/// How step parameters are chosen per solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    /// Use the `SolverConfig` values unchanged.
    Fixed,
    /// Scale `γ` and `ρ` with `√α`, see `SolverConfig::balanced_relaxed`.
    Balanced,
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepRule::Fixed => "fixed",
            StepRule::Balanced => "balanced",
        })
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(StepRule::Fixed),
            "balanced" => Ok(StepRule::Balanced),
            other => Err(Error::Parse(format!(
                "unknown step rule `{other}` (expected fixed|balanced)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub x_star: Vector,
    pub h_star: Vector,
    pub sparsity: usize,
    pub seed: u64,
}

/// `W⁻¹h` for the operators that have an exact inverse.
pub fn invert(w: &LinearMap, h: &Vector) -> Result<Vector> {
    match w {
        LinearMap::Identity(n) => {
            check_len("identity inverse", *n, h.len())?;
            Ok(h.clone())
        }
        LinearMap::Integration(op) => op.apply_inverse(h),
        other => Err(Error::NotInvertible(format!(
            "phantoms need an identity or integration operator, got {:?}",
            other.kind()
        ))),
    }
}

/// Draws `sparsity` distinct indices among the coarsest quarter of wavelet
/// coefficients with values `±U[0.5, 1.5]`, synthesizes `h⋆` and sets
/// `x⋆ = W⁻¹h⋆`.
pub fn make_phantom(
    n: usize,
    sparsity: usize,
    seed: u64,
    basis: &WaveletBasis,
    w: &LinearMap,
) -> Result<Phantom> {
    check_len("phantom basis", n, basis.dim())?;
    check_len("phantom operator", n, w.codomain_dim())?;
    if sparsity > n / 8 {
        return Err(Error::InvalidParameter(format!(
            "sparsity {sparsity} exceeds n/8 = {}",
            n / 8
        )));
    }
    let pool = ((n as f64 * PHANTOM_COARSE_FRACTION) as usize).max(1);
    let mut rng = seeded(seed);
    let mut coeffs = Vector::zeros(n);
    let mut idx = sample(&mut rng, pool, sparsity).into_vec();
    idx.sort_unstable();
    for i in idx {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        coeffs[i] = sign * rng.random_range(PHANTOM_MAGNITUDE.0..PHANTOM_MAGNITUDE.1);
    }
    let h_star = basis.synthesize_raw(&coeffs)?;
    let x_star = invert(w, &h_star)?;
    Ok(Phantom {
        x_star,
        h_star,
        sparsity,
        seed,
    })
}

/// `y⋆ + δ·g/‖g‖` with seeded standard normal `g`.
pub fn add_noise(y_star: &Vector, delta: f64, seed: u64) -> Result<Vector> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be nonnegative, got {delta}"
        )));
    }
    if delta == 0.0 || y_star.is_empty() {
        return Ok(y_star.clone());
    }
    let mut rng = seeded(seed);
    let g = Vector::from_fn(y_star.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let scale = delta / g.norm();
    Ok(y_star + g * scale)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WKind {
    Identity,
    Integration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AKind {
    Identity,
    Bernoulli,
}

impl fmt::Display for WKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WKind::Identity => "identity",
            WKind::Integration => "integration",
        })
    }
}

impl FromStr for WKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(WKind::Identity),
            "integration" => Ok(WKind::Integration),
            other => Err(Error::Parse(format!(
                "unknown W operator `{other}` (expected identity|integration)"
            ))),
        }
    }
}

impl fmt::Display for AKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AKind::Identity => "identity",
            AKind::Bernoulli => "bernoulli",
        })
    }
}

impl FromStr for AKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(AKind::Identity),
            "bernoulli" => Ok(AKind::Bernoulli),
            other => Err(Error::Parse(format!(
                "unknown A operator `{other}` (expected identity|bernoulli)"
            ))),
        }
    }
}

/// Parameters fixing a synthetic instance. All randomness is derived from `seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub m: usize,
    pub sparsity: usize,
    pub seed: u64,
    pub w: WKind,
    /// Grid spacing of the integration operator.
    pub w_scale: f64,
    pub a: AKind,
    /// Uniform weight `κ_λ`.
    pub kappa: f64,
}

impl InstanceSpec {
    /// Integration `W` with unit spacing and Bernoulli `A`.
    pub fn integration(n: usize, m: usize, sparsity: usize, seed: u64) -> Self {
        InstanceSpec {
            n,
            m,
            sparsity,
            seed,
            w: WKind::Integration,
            w_scale: 1.0,
            a: AKind::Bernoulli,
            kappa: 1.0,
        }
    }

    pub fn sensing_seed(&self) -> u64 {
        derive_seed(self.seed, &[1])
    }

    pub fn phantom_seed(&self) -> u64 {
        derive_seed(self.seed, &[2])
    }

    /// Seed of the noise draw for `(δ index, trial)`.
    pub fn noise_seed(&self, delta_index: usize, trial: usize) -> u64 {
        derive_seed(self.seed, &[3, delta_index as u64, trial as u64])
    }

    pub fn build(&self) -> Result<Instance> {
        let basis = WaveletBasis::db2(self.n)?;
        let w = match self.w {
            WKind::Identity => LinearMap::identity(self.n),
            WKind::Integration => {
                if !(self.w_scale > 0.0 && self.w_scale.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "W scale must be positive, got {}",
                        self.w_scale
                    )));
                }
                LinearMap::integration_scaled(self.n, self.w_scale)
            }
        };
        let a = match self.a {
            AKind::Identity => {
                if self.m != self.n {
                    return Err(Error::InvalidParameter(format!(
                        "identity A needs m = n, got m = {} and n = {}",
                        self.m, self.n
                    )));
                }
                LinearMap::identity(self.n)
            }
            AKind::Bernoulli => {
                if self.m == 0 {
                    return Err(Error::InvalidParameter("m must be at least 1".into()));
                }
                LinearMap::bernoulli(self.m, self.n, self.sensing_seed())
            }
        };
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        let l1 = WeightedL1::uniform(&basis, self.kappa)?;
        let phantom = make_phantom(self.n, self.sparsity, self.phantom_seed(), &basis, &w)?;
        let y_star = a.apply(&phantom.h_star)?;
        Ok(Instance {
            spec: self.clone(),
            basis,
            w,
            a,
            l1,
            phantom,
            y_star,
        })
    }
}

/// A fully built synthetic instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub basis: WaveletBasis,
    pub w: LinearMap,
    pub a: LinearMap,
    pub l1: WeightedL1,
    pub phantom: Phantom,
    pub y_star: Vector,
}

impl Instance {
    pub fn noisy_data(&self, delta: f64, delta_index: usize, trial: usize) -> Result<Vector> {
        add_noise(
            &self.y_star,
            delta,
            self.spec.noise_seed(delta_index, trial),
        )
    }
}
