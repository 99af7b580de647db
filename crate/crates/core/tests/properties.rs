use patt_core::harness::synthesize_blr_data;
use patt_core::linalg::Matrix;
use patt_core::patt::{run_patt, ParallelMode, PattConfig, RunOptions, ScheduleSpec};
use patt_core::rng::{chain_rng, standard_normal};
use patt_core::samplers::slice::{log_threshold, shrinkage, stepping_out};
use patt_core::samplers::{BaseSamplerConfig, KernelStats, SamplerKind};
use patt_core::targets::{
    add_intercept, BlrTarget, CountingTarget, GaussianMixture, GaussianTarget, LogDensity,
    MultivariateExponentialTarget, MultivariateTTarget,
};
use patt_core::transform::{AdjustmentConfig, AffineMap, Centering, Scaling};
use proptest::prelude::*;

fn scale_matrix(d: usize) -> Matrix {
    Matrix::from_fn(d, |i, j| if i == j { 1.0 + i as f64 } else { 0.3 })
}

fn builtin_targets(d: usize) -> Vec<Box<dyn LogDensity>> {
    let loc: Vec<f64> = (0..d).map(|i| i as f64 * 0.5 - 1.0).collect();
    let pi = scale_matrix(d);
    let g = GaussianTarget::new(loc.clone(), &pi).unwrap();
    let g2 = GaussianTarget::new(vec![2.0; d], &Matrix::identity(d)).unwrap();
    let ds = add_intercept(&synthesize_blr_data(40, d - 1, 3)).unwrap();
    vec![
        Box::new(g.clone()),
        Box::new(MultivariateTTarget::new(10.0, loc.clone(), &pi).unwrap()),
        Box::new(MultivariateExponentialTarget::new(loc, &pi).unwrap()),
        Box::new(GaussianMixture::new(&[0.7, 0.3], vec![g, g2]).unwrap()),
        Box::new(BlrTarget::from_dataset(&ds, 100.0).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_survives_external_reparametrization(seed in 0u64..100_000, d in 2usize..8) {
        let map = AffineMap::random_general(d, seed);
        let mut rng = chain_rng(seed, 1);
        let x: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let back = map.apply_vec(&map.invert_vec(&x));
        for t in builtin_targets(d) {
            let (a, b) = (t.log_density(&x), t.log_density(&back));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn eval_count_equals_calls(k in 0usize..200) {
        let t = GaussianTarget::standard(3);
        let mut c = CountingTarget::new(&t);
        for i in 0..k {
            c.log_density(&[i as f64, 0.0, 1.0]).unwrap();
        }
        prop_assert_eq!(c.eval_count(), k as u64);
    }

    #[test]
    fn slice_step_ends_on_slice(seed in 0u64..100_000, x0 in -3.0f64..3.0, w in 0.05f64..20.0) {
        let mut rng = chain_rng(seed, 0);
        let mut logf = |x: f64| -0.5 * x * x - 0.1 * x.powi(4);
        let mut stats = KernelStats::default();
        let log_t = log_threshold(logf(x0), &mut rng);
        let (lo, hi) = stepping_out(&mut logf, log_t, x0, w, 1000, None, &mut rng, &mut stats);
        prop_assert!(lo <= x0 && x0 <= hi);
        let (x, v) = shrinkage(&mut logf, log_t, lo, hi, x0, &mut rng, &mut stats).unwrap();
        prop_assert!(v > log_t);
        prop_assert_eq!(v, logf(x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn samples_do_not_depend_on_threads(seed in 0u64..1000, threads in 2usize..5, naive in any::<bool>()) {
        let target = GaussianTarget::new(vec![1.0, -1.0], &scale_matrix(2)).unwrap();
        let adj = AdjustmentConfig::new(Centering::Mean, Scaling::Covariance);
        let mut cfg = PattConfig::new(BaseSamplerConfig::new(SamplerKind::Gpss), adj, 300);
        cfg.chains = 4;
        cfg.seed = seed;
        cfg.schedule = ScheduleSpec::Linear { a: 40, b: 0 };
        if naive {
            cfg.parallel_mode = ParallelMode::Naive;
        }
        let inits = vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-2.0, 2.0], vec![1.0, 1.0]];
        let a = run_patt(&cfg, &target, &inits, RunOptions::with_threads(1)).unwrap();
        let b = run_patt(&cfg, &target, &inits, RunOptions::with_threads(threads)).unwrap();
        for (ca, cb) in a.chains.iter().zip(&b.chains) {
            prop_assert!(ca.samples.iter().zip(&cb.samples).all(|(u, v)| u.to_bits() == v.to_bits()));
            prop_assert_eq!(&ca.tde, &cb.tde);
        }
    }
}
