use coreg::certificates::{check_restricted_injectivity, find_certificate_relaxed, rate_constants_relaxed};
use coreg::experiments::{
    add_noise, determinism_hash, emit_csv, emit_svg, make_phantom, parse_csv, run_sweep, Instance, InstanceSpec,
    Model, SweepConfig, CSV_COLUMNS,
};
use coreg::rng::seeded;
use coreg::{LinearMap, Vector, WaveletBasis};
use rand::Rng;

fn certified_instance() -> Instance {
    InstanceSpec::integration(64, 48, 4, 7).build().unwrap()
}

fn quick(model: Model) -> SweepConfig {
    SweepConfig {
        trials: 2,
        deltas: vec![1e-2, 1e-3, 1e-4],
        ..SweepConfig::new(model)
    }
}

fn csv_text(records: &[coreg::experiments::SweepRecord], fit: Option<&coreg::experiments::RateFit>) -> String {
    let meta = vec![("seed".to_string(), "7".to_string()), ("C".to_string(), "1.0".to_string())];
    let mut buf = Vec::new();
    emit_csv(records, fit, &meta, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn phantom_round_trip_and_support_size() {
    let basis = WaveletBasis::db2(64).unwrap();
    let w = LinearMap::integration_scaled(64, 1.0);
    for seed in 0..10 {
        let p = make_phantom(64, 6, seed, &basis, &w).unwrap();
        assert!((w.apply(&p.x_star).unwrap() - &p.h_star).norm() <= 1e-12 * p.h_star.norm().max(1.0));
        assert_eq!(basis.analyze(&p.h_star).unwrap().support().len(), 6);
    }
    let p = make_phantom(64, 0, 1, &basis, &w).unwrap();
    assert_eq!(p.x_star.norm(), 0.0);
    assert_eq!(p.h_star.norm(), 0.0);

    assert!(make_phantom(64, 9, 1, &basis, &w).is_err());
    assert!(make_phantom(64, 2, 1, &basis, &LinearMap::bernoulli(64, 64, 1)).is_err());
}

#[test]
fn noise_has_exact_level_and_is_seeded() {
    let mut rng = seeded(8);
    let y = Vector::from_fn(48, |_, _| rng.random_range(-10.0..10.0));
    assert_eq!(add_noise(&y, 0.0, 3).unwrap(), y);
    let a = add_noise(&y, 1e-5, 3).unwrap();
    assert!(((&a - &y).norm() - 1e-5).abs() <= 1e-12);
    assert_eq!(a, add_noise(&y, 1e-5, 3).unwrap());
    assert_ne!(a, add_noise(&y, 1e-5, 4).unwrap());
    assert!(add_noise(&y, -1.0, 3).is_err());
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let inst = certified_instance();
    let cfg = quick(Model::Strict);
    let one = run_sweep(&cfg, &inst, None).unwrap();
    let three = run_sweep(&SweepConfig { jobs: 3, ..cfg.clone() }, &inst, None).unwrap();
    let (a, b) = (csv_text(&one.records, one.fit.as_ref()), csv_text(&three.records, three.fit.as_ref()));
    assert_eq!(a, b);
    assert_eq!(determinism_hash(&a), determinism_hash(&b));

    let deltas: Vec<f64> = one.records.iter().map(|r| r.delta).collect();
    assert_eq!(deltas, vec![1e-2, 1e-2, 1e-3, 1e-3, 1e-4, 1e-4]);
    let trials: Vec<usize> = one.info.iter().map(|i| i.trial).collect();
    assert_eq!(trials, vec![0, 1, 0, 1, 0, 1]);
}

#[test]
fn csv_schema_and_round_trip() {
    let inst = certified_instance();
    let out = run_sweep(&quick(Model::Relaxed), &inst, None).unwrap();
    let text = csv_text(&out.records, out.fit.as_ref());
    assert!(text.contains("# seed=7\n") && text.contains("# C=1.0\n"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], CSV_COLUMNS.join(","));
    for row in &rows {
        assert_eq!(row.split(',').count(), 10);
    }
    let parsed = parse_csv(&text).unwrap();
    assert_eq!(parsed.records, out.records);
    assert_eq!(parsed.get("fit_slope"), Some(format!("{:?}", out.fit.unwrap().slope).as_str()));

    let mut svg = Vec::new();
    emit_svg(&out.records, out.fit.as_ref(), &mut svg).unwrap();
    let svg = String::from_utf8(svg).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn median_error_is_monotone_and_dominated_by_bound() {
    let inst = certified_instance();
    let cert = find_certificate_relaxed(&inst.w, &inst.a, &inst.basis, &inst.l1, &inst.phantom.x_star).unwrap();
    let inj = check_restricted_injectivity(&inst.a, &inst.basis, cert.omega().unwrap()).unwrap();
    let rc = rate_constants_relaxed(&cert, &inj, 1.0, inj.a_norm).unwrap();
    let cfg = SweepConfig {
        trials: 3,
        ..SweepConfig::new(Model::Relaxed)
    };
    let out = run_sweep(&cfg, &inst, Some(&rc)).unwrap();
    assert!(out.all_converged());
    let medians = out.medians();
    let inversions = medians.windows(2).filter(|w| w[1].1 > w[0].1).count();
    assert!(inversions <= 1, "{medians:?}");
    for r in &out.records {
        assert_eq!(r.pass_d, Some(true));
        assert!(r.err_h <= r.bound_d_rhs.unwrap() * (1.0 + 1e-6) + 1e-10);
        assert!(r.bregman_x <= r.bound_c_rhs.unwrap() * (1.0 + 1e-6) + 1e-10);
    }
    let fit = out.fit.unwrap();
    assert!((0.85..=1.15).contains(&fit.slope), "{fit:?}");
}

#[test]
fn small_noise_gives_small_error_on_certified_instance() {
    let inst = certified_instance();
    for model in [Model::Relaxed, Model::Strict] {
        let mut cfg = SweepConfig {
            trials: 1,
            deltas: vec![1e-8],
            ..SweepConfig::new(model)
        };
        cfg.solver.max_iters = 1_000_000;
        let out = run_sweep(&cfg, &inst, None).unwrap();
        assert!(out.all_converged(), "{model:?}");
        assert!(out.records[0].err_h <= 1e-6, "{model:?}: err_h = {:e}", out.records[0].err_h);
    }
}

#[test]
#[ignore = "slow: about 5M iterations"]
fn tiny_noise_gives_tiny_error_on_certified_instance() {
    let inst = certified_instance();
    let mut cfg = SweepConfig {
        trials: 1,
        deltas: vec![1e-12],
        ..SweepConfig::new(Model::Relaxed)
    };
    cfg.solver.max_iters = 5_000_000;
    let out = run_sweep(&cfg, &inst, None).unwrap();
    assert!(out.records[0].err_h <= 1e-6, "err_h = {:e}", out.records[0].err_h);
}

#[test]
fn invalid_sweeps_are_rejected() {
    let inst = certified_instance();
    for deltas in [vec![], vec![1e-3, 1e-2], vec![1e-2, 0.0], vec![1e-2, 1e-2]] {
        let cfg = SweepConfig {
            deltas,
            ..SweepConfig::new(Model::Relaxed)
        };
        assert!(run_sweep(&cfg, &inst, None).is_err());
    }
    let cfg = SweepConfig {
        trials: 0,
        ..SweepConfig::new(Model::Relaxed)
    };
    assert!(run_sweep(&cfg, &inst, None).is_err());
}
