//! Randomized instances shared by the integration and acceptance tests.

#![allow(dead_code)]

use coreg::certificates::{check_restricted_injectivity, InjectivityReport};
use coreg::rng::seeded;
use coreg::{IndexSet, LinearMap, Matrix, Subgradient, Vector, WaveletBasis, WeightedL1};
use rand::seq::index::sample;
use rand::Rng;

/// Sparse `h⋆` supported in `Ω`, a Bernoulli `A` injective on `Ω`, and a
/// subgradient `η ∈ ∂‖h⋆‖₁,κ` with `Ω[η] = Ω`.
pub struct NormBoundCase {
    pub a: LinearMap,
    pub basis: WaveletBasis,
    pub l1: WeightedL1,
    pub omega: IndexSet,
    pub h_star: Vector,
    pub eta: Subgradient,
    pub inj: InjectivityReport,
}

pub fn norm_bound_case(seed: u64) -> NormBoundCase {
    let n = 32;
    let basis = WaveletBasis::db2(n).unwrap();
    let mut rng = seeded(seed);
    for attempt in 0.. {
        let m = rng.random_range(8..=20);
        let a = LinearMap::bernoulli(m, n, seed.wrapping_mul(1000).wrapping_add(attempt));
        let size = rng.random_range(1..=6);
        let omega: IndexSet = sample(&mut rng, n, size).into_iter().collect();
        let inj = check_restricted_injectivity(&a, &basis, &omega).unwrap();
        if !inj.injective {
            continue;
        }
        let kappa = Vector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
        let l1 = WeightedL1::with_lower_bound(&basis, kappa.clone(), 0.5).unwrap();
        let mut coeffs = Vector::zeros(n);
        let mut fill = Vector::zeros(n);
        for (k, i) in omega.iter().enumerate() {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            // Keep at least one support index; others may stay saturated zeros.
            if k == 0 || rng.random::<bool>() {
                coeffs[i] = sign * rng.random_range(0.2..2.0);
            }
            fill[i] = sign * kappa[i];
        }
        for i in (0..n).filter(|i| !omega.contains(*i)) {
            fill[i] = kappa[i] * rng.random_range(-0.95..0.95);
        }
        let h_star = basis.synthesize_raw(&coeffs).unwrap();
        let eta = l1.canonical_subgradient(&h_star, Some(&fill)).unwrap();
        assert_eq!(eta.omega(), &omega);
        return NormBoundCase {
            a,
            basis,
            l1,
            omega,
            h_star,
            eta,
            inj,
        };
    }
    unreachable!()
}

/// `h⋆` plus a random perturbation with a random scale in `[1e-4, 1]`.
pub fn perturb(h_star: &Vector, rng: &mut impl Rng) -> Vector {
    let scale = 10f64.powf(rng.random_range(-4.0..0.0));
    h_star + Vector::from_fn(h_star.len(), |_, _| scale * rng.random_range(-1.0..1.0))
}

pub const GRID_STEP: f64 = 1e-4;

/// Minimizer of `½(g − c)² + τ|g|` over a grid of step `GRID_STEP`.
pub fn scalar_prox_by_grid(c: f64, tau: f64) -> f64 {
    let lo = -c.abs() - 1.0;
    let steps = (2.0 * (c.abs() + 1.0) / GRID_STEP).ceil() as usize;
    (0..=steps)
        .map(|k| lo + k as f64 * GRID_STEP)
        .map(|g| (g, 0.5 * (g - c).powi(2) + tau * g.abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

/// One map of each operator kind.
pub fn every_kind() -> Vec<LinearMap> {
    let mut rng = seeded(11);
    let dense = Matrix::from_fn(5, 3, |_, _| rng.random_range(-2.0..2.0));
    let basis = WaveletBasis::db2(16).unwrap();
    let bern = LinearMap::bernoulli(10, 16, 4);
    vec![
        LinearMap::dense(dense),
        LinearMap::identity(7),
        LinearMap::integration(32),
        LinearMap::integration_scaled(16, 0.25),
        bern.clone(),
        LinearMap::compose(bern.clone(), LinearMap::integration(16)).unwrap(),
        LinearMap::product(LinearMap::integration(16), bern.clone()).unwrap(),
        LinearMap::restrict(&bern, &IndexSet::from(vec![0, 3, 9]), Some(&basis)).unwrap(),
        LinearMap::restrict(&LinearMap::identity(6), &IndexSet::from(vec![1, 4]), None).unwrap(),
    ]
}
