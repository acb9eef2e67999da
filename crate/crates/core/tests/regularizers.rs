mod common;

use common::{scalar_prox_by_grid, GRID_STEP};
use coreg::regularizers::{Penalty, Subgradient};
use coreg::rng::seeded;
use coreg::{QuadraticPenalty, Vector, WaveletBasis, WeightedL1};
use proptest::prelude::*;
use rand::Rng;

fn random_vector(len: usize, rng: &mut impl Rng) -> Vector {
    Vector::from_fn(len, |_, _| rng.random_range(-2.0..2.0))
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

/// Sparse `h⋆` with support `{0, 2, 5}`, random weights and a random admissible fill.
fn sparse_setup(seed: u64) -> (WeightedL1, Vector, Subgradient) {
    let basis = WaveletBasis::db2(16).unwrap();
    let mut rng = seeded(seed);
    let kappa = Vector::from_fn(16, |_, _| rng.random_range(0.5..2.0));
    let l1 = WeightedL1::with_lower_bound(&basis, kappa.clone(), 0.5).unwrap();
    let mut coeffs = Vector::zeros(16);
    for i in [0, 2, 5] {
        coeffs[i] = rng.random_range(0.5..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let h_star = basis.synthesize_raw(&coeffs).unwrap();
    let fill = Vector::from_fn(16, |i, _| kappa[i] * rng.random_range(-0.9..0.9));
    let eta = l1.canonical_subgradient(&h_star, Some(&fill)).unwrap();
    (l1, h_star, eta)
}

#[test]
fn prox_matches_scalar_grid_oracle() {
    let basis = WaveletBasis::db2(8).unwrap();
    let mut rng = seeded(101);
    for _ in 0..50 {
        let kappa = Vector::from_fn(8, |_, _| rng.random_range(0.5..2.0));
        let l1 = WeightedL1::new(&basis, kappa.clone()).unwrap();
        let h = random_vector(8, &mut rng);
        let t = rng.random_range(0.1..1.5);
        let got = basis.analyze(&l1.prox(&h, t).unwrap()).unwrap();
        let c = basis.analyze(&h).unwrap();
        for i in 0..8 {
            let oracle = scalar_prox_by_grid(c.values()[i], t * kappa[i]);
            assert!(
                (got.values()[i] - oracle).abs() <= GRID_STEP,
                "coefficient {i}: prox {} vs grid {oracle}",
                got.values()[i]
            );
        }
    }
}

#[test]
fn prox_examples_from_scalar_oracle() {
    let basis = WaveletBasis::db2(8).unwrap();
    let phi0 = basis.element(0).unwrap();
    let l1 = WeightedL1::uniform(&basis, 1.0).unwrap();
    let out = l1.prox(&(&phi0 * 3.0), 1.0).unwrap();
    assert!((out - &phi0 * scalar_prox_by_grid(3.0, 1.0)).norm() <= GRID_STEP);
    assert!((l1.prox(&(&phi0 * 3.0), 1.0).unwrap() - &phi0 * 2.0).norm() < 1e-12);

    let mut kappa = Vector::from_element(8, 1.0);
    kappa[0] = 2.0;
    let l1 = WeightedL1::new(&basis, kappa).unwrap();
    assert_eq!(scalar_prox_by_grid(1.5, 2.0).abs(), 0.0);
    assert!(l1.prox(&(&phi0 * 1.5), 1.0).unwrap().norm() < 1e-14);
}

#[test]
fn subgradient_inequality_on_random_points() {
    let (l1, h_star, eta) = sparse_setup(1);
    let eta_signal = eta.to_signal();
    let base = l1.eval(&h_star).unwrap();
    let mut rng = seeded(2);
    for _ in 0..100 {
        let h = random_vector(16, &mut rng);
        let lhs = l1.eval(&h).unwrap();
        let rhs = base + eta_signal.dot(&(&h - &h_star));
        assert!(lhs >= rhs - 1e-12, "{lhs} < {rhs}");
    }
}

#[test]
fn lower_bound_holds_on_random_pairs() {
    let mut rng = seeded(3);
    for trial in 0..100 {
        let (l1, h_star, eta) = sparse_setup(1000 + trial);
        let h = random_vector(16, &mut rng);
        let d = l1.bregman(&eta, &h, &h_star).unwrap();
        let lower = eta.bregman_lower_bound(&h).unwrap();
        assert!(d >= lower - 1e-12, "trial {trial}: D = {d} < {lower}");
    }
}

#[test]
fn canonical_subgradient_is_positively_homogeneous() {
    for seed in 0..20 {
        let (l1, h_star, eta) = sparse_setup(seed);
        let pairing = eta.to_signal().dot(&h_star);
        let norm = l1.eval(&h_star).unwrap();
        assert!((pairing - norm).abs() <= 1e-12 * norm.max(1.0));
        assert_eq!(eta.omega().as_slice(), &[0, 2, 5]);
    }
}

#[test]
fn quadratic_bregman_matches_generic_formula() {
    let r = QuadraticPenalty;
    let mut rng = seeded(4);
    for _ in 0..100 {
        let x = random_vector(9, &mut rng);
        let xs = random_vector(9, &mut rng);
        let generic = r.eval(&x) - r.eval(&xs) - r.gradient(&xs).dot(&(&x - &xs));
        let d = r.bregman(&x, &xs).unwrap();
        assert!((d - generic).abs() <= 1e-12 * (1.0 + d));
        assert!(d >= 0.0);
    }
}

proptest! {
    #[test]
    fn perfect_reconstruction_and_parseval(
        (g, h) in prop::sample::select(vec![8usize, 64, 256, 1024])
            .prop_flat_map(|n| (vec_strategy(n), vec_strategy(n)))
    ) {
        let n = g.len();
        let basis = WaveletBasis::db2(n).unwrap();
        let g = Vector::from_vec(g);
        let h = Vector::from_vec(h);
        let cg = basis.analyze(&g).unwrap();
        let ch = basis.analyze(&h).unwrap();
        prop_assert!((cg.synthesize() - &g).norm() <= 1e-10 * g.norm().max(1.0));
        prop_assert!((cg.norm() - g.norm()).abs() <= 1e-10 * g.norm().max(1.0));
        prop_assert!((cg.dot(&ch) - g.dot(&h)).abs() <= 1e-10 * (g.norm() * h.norm()).max(1.0));
    }

    #[test]
    fn prox_is_nonexpansive(a in vec_strategy(16), b in vec_strategy(16), t in 0.01..3.0f64) {
        let basis = WaveletBasis::db2(16).unwrap();
        let l1 = WeightedL1::uniform(&basis, 0.7).unwrap();
        let (a, b) = (Vector::from_vec(a), Vector::from_vec(b));
        let pa = l1.prox(&a, t).unwrap();
        let pb = l1.prox(&b, t).unwrap();
        prop_assert!((pa - pb).norm() <= (a - b).norm() + 1e-12);
    }

    #[test]
    fn bregman_distances_are_nonnegative(h in vec_strategy(16), seed in 0u64..1000) {
        let (l1, h_star, eta) = sparse_setup(seed);
        let h = Vector::from_vec(h);
        prop_assert!(l1.bregman(&eta, &h, &h_star).unwrap() >= 0.0);
        prop_assert!(QuadraticPenalty.bregman(&h, &h_star).unwrap() >= 0.0);
        let d = l1.bregman(&eta, &h, &h_star).unwrap();
        prop_assert!(d + 1e-12 >= eta.bregman_lower_bound(&h).unwrap());
    }

    #[test]
    fn projection_splits_energy(c in vec_strategy(32), mask in prop::collection::vec(any::<bool>(), 32)) {
        let basis = WaveletBasis::db2(32).unwrap();
        let c = basis.coefficients(Vector::from_vec(c)).unwrap();
        let omega: coreg::IndexSet = (0..32).filter(|&i| mask[i]).collect();
        let inside = c.project(&omega);
        let outside = c.project(&omega.complement(32));
        let total = c.norm().powi(2);
        prop_assert!((inside.norm().powi(2) + outside.norm().powi(2) - total).abs() <= 1e-12 * total.max(1.0));
    }
}
