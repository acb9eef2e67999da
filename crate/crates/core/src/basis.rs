//! Orthonormal periodic Daubechies-2 wavelet basis on `R^n`.
//!
//! Coefficient layout after a full-depth analysis of a length-`n` signal is
//! `[scaling, detail(level 0: 1 coeff), detail(level 1: 2 coeffs), ..., detail(finest: n/2)]`,
//! so small indices are coarse scales.

use crate::error::{check_len, Error, Result};
use crate::index_set::IndexSet;
use crate::Vector;

/// Relative threshold below which a coefficient counts as zero in [`CoefficientVector::support`].
pub const SUPPORT_TOLERANCE: f64 = 1e-12;

/// Low-pass db2 (D4) analysis filter.
///
/// Solution of `Σh = √2`, `Σh² = 1`, `Σ h_k h_{k+2} = 0` together with two
/// vanishing moments of the associated high-pass filter.
pub fn db2_lowpass() -> [f64; 4] {
    let s3 = 3f64.sqrt();
    let norm = 4.0 * 2f64.sqrt();
    [
        (1.0 + s3) / norm,
        (3.0 + s3) / norm,
        (3.0 - s3) / norm,
        (1.0 - s3) / norm,
    ]
}

/// Quadrature mirror of `lo`: `g_k = (-1)^k h_{3-k}`.
pub fn quadrature_mirror(lo: &[f64; 4]) -> [f64; 4] {
    [lo[3], -lo[2], lo[1], -lo[0]]
}

/// Largest violation among the orthonormality and vanishing-moment conditions.
pub fn filter_defect(lo: &[f64; 4]) -> f64 {
    let hi = quadrature_mirror(lo);
    let sum: f64 = lo.iter().sum();
    let energy: f64 = lo.iter().map(|h| h * h).sum();
    let shift2 = lo[0] * lo[2] + lo[1] * lo[3];
    let moment0: f64 = hi.iter().sum();
    let moment1: f64 = hi.iter().enumerate().map(|(k, g)| k as f64 * g).sum();
    [
        (sum - 2f64.sqrt()).abs(),
        (energy - 1.0).abs(),
        shift2.abs(),
        moment0.abs(),
        moment1.abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Full-depth periodic db2 wavelet basis of `R^n`, `n` a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletBasis {
    n: usize,
    levels: usize,
    lo: [f64; 4],
    hi: [f64; 4],
}

impl WaveletBasis {
    pub fn db2(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let lo = db2_lowpass();
        debug_assert!(filter_defect(&lo) < 1e-14);
        Ok(WaveletBasis {
            n,
            levels: n.trailing_zeros() as usize,
            lo,
            hi: quadrature_mirror(&lo),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn vanishing_moments(&self) -> usize {
        2
    }

    pub fn lowpass(&self) -> &[f64; 4] {
        &self.lo
    }

    pub fn highpass(&self) -> &[f64; 4] {
        &self.hi
    }

    /// Coefficients `⟨φ_λ, h⟩` for all `λ`.
    pub fn analyze(&self, h: &Vector) -> Result<CoefficientVector> {
        check_len("wavelet analyze", self.n, h.len())?;
        let mut out = h.clone();
        self.analyze_in_place(out.as_mut_slice());
        Ok(CoefficientVector {
            coeffs: out,
            basis: self.clone(),
        })
    }

    /// `Σ_λ c_λ φ_λ`.
    pub fn synthesize(&self, c: &CoefficientVector) -> Result<Vector> {
        check_len("wavelet synthesize", self.n, c.len())?;
        let mut out = c.coeffs.clone();
        self.synthesize_in_place(out.as_mut_slice());
        Ok(out)
    }

    /// Synthesize from raw coefficients.
    pub fn synthesize_raw(&self, coeffs: &Vector) -> Result<Vector> {
        check_len("wavelet synthesize", self.n, coeffs.len())?;
        let mut out = coeffs.clone();
        self.synthesize_in_place(out.as_mut_slice());
        Ok(out)
    }

    /// The basis element `φ_λ` as a vector of `R^n`.
    pub fn element(&self, lambda: usize) -> Result<Vector> {
        if lambda >= self.n {
            return Err(Error::IndexOutOfRange {
                index: lambda,
                dim: self.n,
            });
        }
        let mut e = Vector::zeros(self.n);
        e[lambda] = 1.0;
        self.synthesize_in_place(e.as_mut_slice());
        Ok(e)
    }

    /// Wraps raw coefficients into a [`CoefficientVector`] of this basis.
    pub fn coefficients(&self, coeffs: Vector) -> Result<CoefficientVector> {
        check_len("coefficient vector", self.n, coeffs.len())?;
        Ok(CoefficientVector {
            coeffs,
            basis: self.clone(),
        })
    }

    pub(crate) fn analyze_in_place(&self, data: &mut [f64]) {
        let mut scratch = vec![0.0; self.n];
        let mut len = self.n;
        while len > 1 {
            let half = len / 2;
            for k in 0..half {
                let mut a = 0.0;
                let mut d = 0.0;
                for j in 0..4 {
                    let x = data[(2 * k + j) % len];
                    a += self.lo[j] * x;
                    d += self.hi[j] * x;
                }
                scratch[k] = a;
                scratch[half + k] = d;
            }
            data[..len].copy_from_slice(&scratch[..len]);
            len = half;
        }
    }

    pub(crate) fn synthesize_in_place(&self, data: &mut [f64]) {
        let mut scratch = vec![0.0; self.n];
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            scratch[..len].iter_mut().for_each(|v| *v = 0.0);
            for k in 0..half {
                let a = data[k];
                let d = data[half + k];
                for j in 0..4 {
                    scratch[(2 * k + j) % len] += self.lo[j] * a + self.hi[j] * d;
                }
            }
            data[..len].copy_from_slice(&scratch[..len]);
            len *= 2;
        }
    }
}

/// Signal coordinates in a [`WaveletBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    coeffs: Vector,
    basis: WaveletBasis,
}

impl CoefficientVector {
    pub fn zeros(basis: &WaveletBasis) -> Self {
        CoefficientVector {
            coeffs: Vector::zeros(basis.dim()),
            basis: basis.clone(),
        }
    }

    /// Standard unit coefficient vector `e_λ`.
    pub fn unit(basis: &WaveletBasis, lambda: usize) -> Result<Self> {
        if lambda >= basis.dim() {
            return Err(Error::IndexOutOfRange {
                index: lambda,
                dim: basis.dim(),
            });
        }
        let mut c = Self::zeros(basis);
        c.coeffs[lambda] = 1.0;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn values(&self) -> &Vector {
        &self.coeffs
    }

    pub fn values_mut(&mut self) -> &mut Vector {
        &mut self.coeffs
    }

    pub fn into_values(self) -> Vector {
        self.coeffs
    }

    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    pub fn synthesize(&self) -> Vector {
        let mut out = self.coeffs.clone();
        self.basis.synthesize_in_place(out.as_mut_slice());
        out
    }

    /// `{λ : |c_λ| > 1e-12·‖c‖}`.
    pub fn support(&self) -> IndexSet {
        support_of(self.coeffs.as_slice())
    }

    /// `π_Ω`: zero all coefficients outside `omega`. Indices `≥ n` in `omega` are ignored.
    pub fn project(&self, omega: &IndexSet) -> CoefficientVector {
        let mut out = self.clone();
        for (i, v) in out.coeffs.iter_mut().enumerate() {
            if !omega.contains(i) {
                *v = 0.0;
            }
        }
        out
    }

    pub fn dot(&self, other: &CoefficientVector) -> f64 {
        self.coeffs.dot(&other.coeffs)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }
}

/// Support of a raw coefficient slice under the relative zero test.
pub fn support_of(coeffs: &[f64]) -> IndexSet {
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let cut = SUPPORT_TOLERANCE * norm;
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > cut)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_vector(n: usize, seed: u64) -> Vector {
        let mut rng = crate::rng::seeded(seed);
        Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rejects_non_dyadic_dimension() {
        assert!(matches!(
            WaveletBasis::db2(12),
            Err(Error::NotPowerOfTwo(12))
        ));
        assert!(WaveletBasis::db2(0).is_err());
    }

    #[test]
    fn filter_conditions_hold() {
        let lo = db2_lowpass();
        assert!(filter_defect(&lo) < 1e-14);
        let sq: f64 = lo.iter().map(|h| h * h).sum();
        assert!((sq - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_maps_to_zero() {
        let b = WaveletBasis::db2(16).unwrap();
        let c = b.analyze(&Vector::zeros(16)).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
        assert!(b.synthesize(&c).unwrap().iter().all(|&v| v == 0.0));
        assert!(c.support().is_empty());
    }

    #[test]
    fn round_trip_and_parseval() {
        for &n in &[1usize, 2, 4, 8, 64, 256, 1024] {
            let b = WaveletBasis::db2(n).unwrap();
            for seed in 0..50 {
                let g = random_vector(n, seed);
                let h = random_vector(n, seed + 1000);
                let cg = b.analyze(&g).unwrap();
                let ch = b.analyze(&h).unwrap();
                assert!((cg.norm() - g.norm()).abs() <= 1e-10);
                assert!((cg.dot(&ch) - g.dot(&h)).abs() <= 1e-10);
                let back = b.synthesize(&cg).unwrap();
                assert!((back - &g).amax() <= 1e-10);
            }
        }
    }

    #[test]
    fn unit_coefficients_probe_basis_elements() {
        let b = WaveletBasis::db2(32).unwrap();
        for lambda in 0..32 {
            let phi = b.element(lambda).unwrap();
            assert!((phi.norm() - 1.0).abs() < 1e-12);
            let c = b.analyze(&phi).unwrap();
            let e = CoefficientVector::unit(&b, lambda).unwrap();
            assert!((c.values() - e.values()).amax() <= 1e-10);
        }
    }

    #[test]
    fn affine_signals_have_vanishing_details_on_one_level() {
        let b = WaveletBasis::db2(64).unwrap();
        let hi = b.highpass();
        let len = 64;
        for &(a0, a1) in &[(1.0, 0.0), (0.3, -2.0), (-1.5, 0.25)] {
            let x: Vec<f64> = (0..len).map(|i| a0 + a1 * i as f64).collect();
            for k in 0..len / 2 {
                let d: f64 = (0..4).map(|j| hi[j] * x[(2 * k + j) % len]).sum();
                if 2 * k + 3 < len {
                    assert!(d.abs() <= 1e-12, "detail {k} = {d}");
                }
            }
        }
    }

    #[test]
    fn projection_splits_energy() {
        let b = WaveletBasis::db2(64).unwrap();
        let c = b.analyze(&random_vector(64, 3)).unwrap();
        let omega: IndexSet = [0usize, 5, 9, 33].into();
        let inside = c.project(&omega);
        let outside = c.project(&omega.complement(64));
        let total = c.norm().powi(2);
        assert!((total - inside.norm().powi(2) - outside.norm().powi(2)).abs() <= 1e-12);
        assert_eq!(c.project(&IndexSet::full(64)), c);
        assert_eq!(c.project(&IndexSet::empty()).norm(), 0.0);
    }

    #[test]
    fn support_uses_relative_threshold() {
        let s = support_of(&[1.0, 1e-13, 0.0, -2.0]);
        assert_eq!(s.as_slice(), &[0, 3]);
    }
}
