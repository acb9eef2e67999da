//! Penalty functionals: the weighted ℓ¹ norm in wavelet coordinates and the
//! quadratic penalty `R(x) = ‖x‖²/2`, with proximal maps, subgradients and
//! Bregman distances.

use crate::basis::{CoefficientVector, WaveletBasis};
use crate::error::{check_len, Error, Result};
use crate::index_set::IndexSet;
use crate::Vector;

/// Relative tolerance for `|η_λ| = κ_λ` when forming `Ω[η]`.
pub const SATURATION_TOLERANCE: f64 = 1e-12;

/// Tolerance for the sign equalities `η_λ = κ_λ sign⟨φ_λ, h⋆⟩` on the support.
pub const SIGN_TOLERANCE: f64 = 1e-8;

/// Convex penalty on the signal space with a cheap proximal map.
///
/// The Douglas–Rachford solver only needs `eval` and `prox`; other convex,
/// weakly lower semicontinuous penalties can be plugged in through this trait.
pub trait Penalty {
    fn eval(&self, x: &Vector) -> f64;

    /// `argmin_z ½‖z − x‖² + t·R(z)`.
    fn prox(&self, x: &Vector, t: f64) -> Vector;
}

/// `R(x) = ‖x‖²/2`, with `∂R(x) = {x}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QuadraticPenalty;

impl QuadraticPenalty {
    pub fn gradient(&self, x: &Vector) -> Vector {
        x.clone()
    }

    /// `D(x, x⋆) = ‖x − x⋆‖²/2`, the Bregman distance at the subgradient `x⋆`.
    pub fn bregman(&self, x: &Vector, x_star: &Vector) -> Result<f64> {
        check_len("quadratic bregman", x_star.len(), x.len())?;
        Ok(0.5 * (x - x_star).norm_squared())
    }
}

impl Penalty for QuadraticPenalty {
    fn eval(&self, x: &Vector) -> f64 {
        0.5 * x.norm_squared()
    }

    fn prox(&self, x: &Vector, t: f64) -> Vector {
        x / (1.0 + t)
    }
}

/// `‖h‖₁,κ = Σ_λ κ_λ |⟨φ_λ, h⟩|` with weights bounded below by `a > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedL1 {
    kappa: Vector,
    lower_bound: f64,
    basis: WaveletBasis,
}

impl WeightedL1 {
    /// Constant weights `κ_λ = k`.
    pub fn uniform(basis: &WaveletBasis, k: f64) -> Result<Self> {
        Self::new(basis, Vector::from_element(basis.dim(), k))
    }

    /// Lower bound taken as `min κ_λ`.
    pub fn new(basis: &WaveletBasis, kappa: Vector) -> Result<Self> {
        let a = kappa.iter().copied().fold(f64::INFINITY, f64::min);
        Self::with_lower_bound(basis, kappa, a)
    }

    pub fn with_lower_bound(basis: &WaveletBasis, kappa: Vector, lower_bound: f64) -> Result<Self> {
        check_len("weights", basis.dim(), kappa.len())?;
        if !(lower_bound > 0.0 && lower_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight lower bound must be positive and finite, got {lower_bound}"
            )));
        }
        if let Some((i, k)) = kappa
            .iter()
            .enumerate()
            .find(|(_, &k)| !(k >= lower_bound && k.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "weight kappa[{i}] = {k} is below the lower bound {lower_bound}"
            )));
        }
        Ok(WeightedL1 {
            kappa,
            lower_bound,
            basis: basis.clone(),
        })
    }

    pub fn kappa(&self) -> &Vector {
        &self.kappa
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }

    pub fn eval(&self, h: &Vector) -> Result<f64> {
        let c = self.basis.analyze(h)?;
        Ok(self.eval_coeffs(c.values()))
    }

    pub fn eval_coeffs(&self, coeffs: &Vector) -> f64 {
        coeffs
            .iter()
            .zip(self.kappa.iter())
            .map(|(c, k)| k * c.abs())
            .sum()
    }

    /// `argmin_g ½‖g − h‖² + t‖g‖₁,κ`: soft-thresholding of the wavelet
    /// coefficients at `t·κ_λ`, then synthesis.
    pub fn prox(&self, h: &Vector, t: f64) -> Result<Vector> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "prox step must be positive, got {t}"
            )));
        }
        check_len("weighted l1 prox", self.dim(), h.len())?;
        Ok(self.prox_raw(h, t))
    }

    pub(crate) fn prox_raw(&self, h: &Vector, t: f64) -> Vector {
        let mut c = h.clone();
        self.basis.analyze_in_place(c.as_mut_slice());
        self.soft_threshold(c.as_mut_slice(), t);
        self.basis.synthesize_in_place(c.as_mut_slice());
        c
    }

    pub(crate) fn soft_threshold(&self, coeffs: &mut [f64], t: f64) {
        for (c, k) in coeffs.iter_mut().zip(self.kappa.iter()) {
            *c = soft_threshold(*c, t * k);
        }
    }

    /// Subgradient at `h⋆` with `η_λ = κ_λ sign⟨φ_λ, h⋆⟩` on the support and
    /// `fill_λ` elsewhere (zero when `fill` is `None`).
    pub fn canonical_subgradient(
        &self,
        h_star: &Vector,
        fill: Option<&Vector>,
    ) -> Result<Subgradient> {
        let c = self.basis.analyze(h_star)?;
        let support = c.support();
        let mut eta = match fill {
            Some(f) => {
                check_len("subgradient fill", self.dim(), f.len())?;
                f.clone()
            }
            None => Vector::zeros(self.dim()),
        };
        for (i, v) in eta.iter_mut().enumerate() {
            if support.contains(i) {
                *v = self.kappa[i] * c.values()[i].signum();
            }
        }
        self.subgradient(eta)
    }

    /// Wraps coefficients `η` satisfying `|η_λ| ≤ κ_λ` and computes `Ω[η]`, `m[η]`.
    pub fn subgradient(&self, eta: Vector) -> Result<Subgradient> {
        check_len("subgradient", self.dim(), eta.len())?;
        for (i, (&e, &k)) in eta.iter().zip(self.kappa.iter()).enumerate() {
            if !e.is_finite() || e.abs() > k * (1.0 + SATURATION_TOLERANCE) {
                return Err(Error::BoxViolation {
                    index: i,
                    value: e,
                    bound: k,
                });
            }
        }
        let (omega, margin) = saturation(&eta, &self.kappa);
        let margin = margin.ok_or(Error::NoMargin)?;
        Ok(Subgradient {
            eta: self.basis.coefficients(eta)?,
            omega,
            margin,
        })
    }

    /// Checks `η ∈ ∂‖h⋆‖₁,κ`.
    pub fn validate_subgradient(&self, eta: &Subgradient, h_star: &Vector) -> Result<()> {
        check_len("subgradient", self.dim(), eta.eta.len())?;
        let c = self.basis.analyze(h_star)?;
        for i in c.support().iter() {
            let want = self.kappa[i] * c.values()[i].signum();
            let got = eta.eta.values()[i];
            if (want - got).abs() > SIGN_TOLERANCE * self.kappa[i] {
                return Err(Error::InvalidSubgradient(format!(
                    "eta[{i}] = {got} but kappa·sign(h*) = {want}"
                )));
            }
        }
        Ok(())
    }

    /// `D_η(h, h⋆) = ‖h‖₁,κ − ‖h⋆‖₁,κ − ⟨η, h − h⋆⟩ = ‖h‖₁,κ − ⟨η, h⟩ ≥ 0`.
    pub fn bregman(&self, eta: &Subgradient, h: &Vector, h_star: &Vector) -> Result<f64> {
        self.validate_subgradient(eta, h_star)?;
        let ch = self.basis.analyze(h)?;
        let cs = self.basis.analyze(h_star)?;
        let e = eta.eta.values();
        let d = self.eval_coeffs(ch.values())
            - self.eval_coeffs(cs.values())
            - e.dot(&(ch.values() - cs.values()));
        Ok(d.max(0.0))
    }
}

/// `sign(v)·max(|v| − t, 0)`.
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `Ω[η]` and `m[η]`; the margin is `None` when every index is saturated.
pub fn saturation(eta: &Vector, kappa: &Vector) -> (IndexSet, Option<f64>) {
    let mut omega = Vec::new();
    let mut margin: Option<f64> = None;
    for (i, (&e, &k)) in eta.iter().zip(kappa.iter()).enumerate() {
        let gap = k - e.abs();
        if gap <= SATURATION_TOLERANCE * k {
            omega.push(i);
        } else {
            margin = Some(margin.map_or(gap, |m| m.min(gap)));
        }
    }
    (omega.into(), margin)
}

/// An element `η ∈ ∂‖h⋆‖₁,κ` in wavelet coordinates, with its saturated set
/// `Ω[η] = {λ : |η_λ| = κ_λ}` and margin `m[η] = min_{λ∉Ω} κ_λ − |η_λ| > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgradient {
    eta: CoefficientVector,
    omega: IndexSet,
    margin: f64,
}

impl Subgradient {
    pub fn eta(&self) -> &CoefficientVector {
        &self.eta
    }

    pub fn omega(&self) -> &IndexSet {
        &self.omega
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// `η` as a vector of `H`.
    pub fn to_signal(&self) -> Vector {
        self.eta.synthesize()
    }

    /// `m[η]·Σ_{λ∉Ω[η]} |⟨φ_λ, h⟩|`, the lower bound on `D_η(h, h⋆)`.
    pub fn bregman_lower_bound(&self, h: &Vector) -> Result<f64> {
        let c = self.eta.basis().analyze(h)?;
        let off: f64 = c
            .values()
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.omega.contains(*i))
            .map(|(_, v)| v.abs())
            .sum();
        Ok(self.margin * off)
    }
}
