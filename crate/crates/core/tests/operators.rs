mod common;

use common::every_kind;
use approx::assert_relative_eq;
use coreg::operators::BernoulliSensing;
use coreg::rng::seeded;
use coreg::{IndexSet, LinearMap, Matrix, OperatorKind, Vector, WaveletBasis};
use nalgebra::SVD;
use rand::Rng;

fn random_vector(len: usize, rng: &mut impl Rng) -> Vector {
    Vector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn adjoint_identity_on_every_kind() {
    let maps = every_kind();
    let kinds: Vec<OperatorKind> = maps.iter().map(LinearMap::kind).collect();
    for k in [
        OperatorKind::Dense,
        OperatorKind::Identity,
        OperatorKind::Integration,
        OperatorKind::Bernoulli,
        OperatorKind::Composed,
        OperatorKind::Product,
        OperatorKind::Restricted,
    ] {
        assert!(kinds.contains(&k), "{k:?} not covered");
    }
    let mut rng = seeded(12);
    for op in &maps {
        let norm = op.operator_norm(1e-10);
        for _ in 0..100 {
            let x = random_vector(op.domain_dim(), &mut rng);
            let y = random_vector(op.codomain_dim(), &mut rng);
            let lhs = op.apply(&x).unwrap().dot(&y);
            let rhs = x.dot(&op.adjoint_apply(&y).unwrap());
            let gap = (lhs - rhs).abs();
            assert!(
                gap <= 1e-10 * x.norm() * y.norm() * norm,
                "{:?}: gap {gap:e}",
                op.kind()
            );
        }
    }
}

#[test]
fn materialization_matches_apply_column_by_column() {
    for op in every_kind() {
        let d = op.materialize().unwrap();
        assert_eq!(d.shape(), (op.codomain_dim(), op.domain_dim()));
        for j in 0..op.domain_dim() {
            let mut e = Vector::zeros(op.domain_dim());
            e[j] = 1.0;
            let col = op.apply(&e).unwrap();
            assert!((col - d.column(j)).norm() <= 1e-14 * (1.0 + d.norm()));
        }
    }
}

#[test]
fn bernoulli_example_from_hand_multiplication() {
    let target = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    let seed = (0..100_000u64)
        .find(|&s| BernoulliSensing::new(2, 3, s).entries() == &target)
        .expect("some seed produces the target pattern");
    let a = LinearMap::bernoulli(2, 3, seed);
    let y = a.apply(&Vector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
    assert_eq!(y.as_slice(), &[4.0, 5.0]);
}

#[test]
fn bernoulli_entries_are_binary_balanced_and_deterministic() {
    let a = BernoulliSensing::new(64, 128, 99);
    let b = BernoulliSensing::new(64, 128, 99);
    assert_eq!(a.entries(), b.entries());
    assert_ne!(a.entries(), BernoulliSensing::new(64, 128, 100).entries());
    assert!(a.entries().iter().all(|&v| v == 0.0 || v == 1.0));
    let ones = a.entries().iter().filter(|&&v| v == 1.0).count() as f64;
    let frac = ones / (64.0 * 128.0);
    // 8192 fair coin flips: five standard deviations is about 0.028.
    assert!((frac - 0.5).abs() < 0.028, "fraction of ones {frac}");
}

#[test]
fn product_adjoint_matches_materialized_transpose() {
    let w = LinearMap::integration(8);
    let a = LinearMap::bernoulli(5, 8, 21);
    let m = LinearMap::product(w.clone(), a.clone()).unwrap();
    assert_eq!(m.domain_dim(), 16);
    assert_eq!(m.codomain_dim(), 13);
    let mt = m.materialize().unwrap().transpose();
    let mut rng = seeded(3);
    let rs = random_vector(13, &mut rng);
    let got = m.adjoint_apply(&rs).unwrap();
    let want = &mt * &rs;
    for (g, w) in got.iter().zip(want.iter()) {
        assert_relative_eq!(g, w, epsilon = 1e-13);
    }
    // (W*r, A*s − r) assembled from the parts.
    let r = rs.rows(0, 8).into_owned();
    let s = rs.rows(8, 5).into_owned();
    let top = w.adjoint_apply(&r).unwrap();
    let bottom = a.adjoint_apply(&s).unwrap() - &r;
    assert!((got.rows(0, 8) - top).norm() < 1e-13);
    assert!((got.rows(8, 8) - bottom).norm() < 1e-13);
}

#[test]
fn product_of_identities_probed_by_columns() {
    let m = LinearMap::product(LinearMap::identity(2), LinearMap::identity(2)).unwrap();
    let want = Matrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, -1.0, 0.0, //
            0.0, 1.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    );
    assert_eq!(m.materialize().unwrap(), want);
}

#[test]
fn composition_materializes_to_matrix_product() {
    let w = LinearMap::integration(8);
    let a = LinearMap::bernoulli(4, 8, 5);
    let aw = LinearMap::compose(a.clone(), w.clone()).unwrap();
    let want = a.materialize().unwrap() * w.materialize().unwrap();
    assert!((aw.materialize().unwrap() - want).norm() < 1e-14);
    assert!(LinearMap::compose(w, LinearMap::bernoulli(4, 6, 1)).is_err());
}

#[test]
fn restriction_examples() {
    let r = LinearMap::restrict(&LinearMap::identity(4), &IndexSet::from(vec![0, 2]), None).unwrap();
    let want = Matrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    assert_eq!(r.materialize().unwrap(), want);

    let basis = WaveletBasis::db2(8).unwrap();
    let a = LinearMap::bernoulli(4, 8, 17);
    let omega = IndexSet::from(vec![1, 3, 5]);
    let ra = LinearMap::restrict(&a, &omega, Some(&basis)).unwrap();
    let d = ra.materialize().unwrap();
    for (j, lambda) in omega.iter().enumerate() {
        let col = a.apply(&basis.element(lambda).unwrap()).unwrap();
        assert!((col - d.column(j)).norm() < 1e-13);
    }

    assert!(LinearMap::restrict(&a, &IndexSet::from(vec![8]), Some(&basis)).is_err());
}

#[test]
fn restriction_equals_padding_then_apply() {
    let basis = WaveletBasis::db2(16).unwrap();
    let a = LinearMap::bernoulli(6, 16, 8);
    let omega = IndexSet::from(vec![0, 2, 7, 11]);
    let ra = LinearMap::restrict(&a, &omega, Some(&basis)).unwrap();
    let mut rng = seeded(5);
    for _ in 0..20 {
        let z = random_vector(omega.len(), &mut rng);
        let mut padded = Vector::zeros(16);
        for (j, lambda) in omega.iter().enumerate() {
            padded[lambda] = z[j];
        }
        let h = basis.synthesize_raw(&padded).unwrap();
        let want = a.apply(&h).unwrap();
        assert!((ra.apply(&z).unwrap() - want).norm() < 1e-12);
    }
}

#[test]
fn integration_norm_matches_dense_svd() {
    let w = LinearMap::integration(64);
    let d = w.materialize().unwrap();
    let sigma_max = SVD::new(d, false, false).singular_values.max();
    assert_relative_eq!(w.operator_norm(1e-12), sigma_max, max_relative = 1e-8);
    assert_relative_eq!(w.operator_norm_dense().unwrap(), sigma_max, max_relative = 1e-12);
}

#[test]
fn integration_inverse_round_trip() {
    let op = coreg::operators::IntegrationOp::new(64);
    let w = LinearMap::integration(64);
    let mut rng = seeded(6);
    for _ in 0..20 {
        let x = random_vector(64, &mut rng);
        let back = op.apply_inverse(&w.apply(&x).unwrap()).unwrap();
        assert!((back - &x).norm() <= 1e-12 * x.norm().max(1.0));
    }
}

#[test]
fn descriptors_replay_bit_exactly() {
    let mut rng = seeded(7);
    for op in every_kind() {
        let text = op.to_descriptor();
        let back = LinearMap::from_descriptor(&text).unwrap();
        assert_eq!(back.to_descriptor(), text);
        let x = random_vector(op.domain_dim(), &mut rng);
        assert_eq!(op.apply(&x).unwrap(), back.apply(&x).unwrap());
    }
}

#[test]
fn concurrent_applies_agree() {
    let op = LinearMap::compose(LinearMap::bernoulli(32, 64, 1), LinearMap::integration(64)).unwrap();
    let x = Vector::from_fn(64, |i, _| (i as f64).sin());
    let want = op.apply(&x).unwrap();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..4).map(|_| s.spawn(|| op.apply(&x).unwrap())).collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), want);
        }
    });
}
