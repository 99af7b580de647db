use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use patt_core::diagnostics::iat;
use patt_core::diagnostics::ks::{ks_p_value, ks_statistic, standard_normal_cdf};
use patt_core::linalg::{LowerTriangular, Matrix};
use patt_core::rng::{chain_rng, standard_normal};
use patt_core::samplers::{
    AdaRwm, AttChain, BaseSamplerConfig, GpEss, Gpss, Hruss, Imh, Kernel, Rwm, SamplerKind,
};
use patt_core::targets::{FnTarget, GaussianTarget, LogDensity};
use patt_core::transform::AffineMap;

const KINDS: [SamplerKind; 5] = [
    SamplerKind::Gpss,
    SamplerKind::Hruss,
    SamplerKind::GpEss,
    SamplerKind::Rwm,
    SamplerKind::Imh,
];

fn run(kernel: Box<dyn Kernel>, target: &dyn LogDensity, x0: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut chain = AttChain::new(target, kernel, chain_rng(seed, 0), x0).unwrap();
    (0..n)
        .map(|_| {
            chain.transition();
            chain.x().to_vec()
        })
        .collect()
}

fn marginal(xs: &[Vec<f64>], i: usize) -> Vec<f64> {
    xs.iter().map(|x| x[i]).collect()
}

fn ks_p(series: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let tau = iat(series).unwrap().unwrap();
    ks_p_value(ks_statistic(series, cdf), series.len() as f64 / tau)
}

#[test]
fn kernels_leave_standard_normal_invariant() {
    let target = GaussianTarget::standard(2);
    for (k, kind) in KINDS.iter().enumerate() {
        let mut rng = chain_rng(100 + k as u64, 5);
        let x0 = vec![standard_normal(&mut rng), standard_normal(&mut rng)];
        let xs = run(BaseSamplerConfig::new(*kind).build(2), &target, &x0, 20_000, 11 + k as u64);
        for i in 0..2 {
            let p = ks_p(&marginal(&xs, i), standard_normal_cdf);
            assert!(p > 0.001, "{kind:?} marginal {i}: p = {p}");
        }
    }
}

#[test]
fn kernels_under_affine_map_target_correlated_gaussian() {
    let mean = vec![3.0, -1.0];
    let cov = Matrix::from_rows(&[vec![4.0, 1.2], vec![1.2, 1.0]]).unwrap();
    let target = GaussianTarget::new(mean.clone(), &cov).unwrap();
    let map = Arc::new(AffineMap::General {
        c: vec![2.0, 0.0],
        w: target.cholesky_factor().clone(),
    });
    for (k, kind) in KINDS.iter().enumerate() {
        let mut chain = AttChain::new(&target, BaseSamplerConfig::new(*kind).build(2), chain_rng(7, k), &mean).unwrap();
        chain.set_map(map.clone());
        let mut xs = Vec::with_capacity(20_000);
        for _ in 0..20_000 {
            chain.transition();
            xs.push(chain.x().to_vec());
        }
        for i in 0..2 {
            let sd = cov.get(i, i).sqrt();
            let p = ks_p(&marginal(&xs, i), |v| standard_normal_cdf((v - mean[i]) / sd));
            assert!(p > 0.001, "{kind:?} marginal {i}: p = {p}");
        }
    }
}

/// Standard normal restricted to [-4, 4], binned into 64 cells.
fn restricted_normal() -> FnTarget<impl Fn(&[f64]) -> f64 + Send + Sync> {
    FnTarget::new(1, |x: &[f64]| {
        if x[0].abs() > 4.0 { f64::NEG_INFINITY } else { -0.5 * x[0] * x[0] }
    })
}

fn cell(x: f64) -> usize {
    (((x + 4.0) / 8.0 * 64.0) as usize).min(63)
}

fn cell_probabilities() -> Vec<f64> {
    let z = standard_normal_cdf(4.0) - standard_normal_cdf(-4.0);
    (0..64)
        .map(|i| {
            let (a, b) = (-4.0 + 8.0 * i as f64 / 64.0, -4.0 + 8.0 * (i + 1) as f64 / 64.0);
            (standard_normal_cdf(b) - standard_normal_cdf(a)) / z
        })
        .collect()
}

#[test]
fn metropolis_kernels_are_reversible_on_grid() {
    let target = restricted_normal();
    let n = 1_000_000;
    for kind in [SamplerKind::Rwm, SamplerKind::Imh] {
        let xs = run(BaseSamplerConfig::new(kind).build(1), &target, &[0.1], n, 21);
        let mut counts = vec![vec![0f64; 64]; 64];
        for w in xs.windows(2) {
            counts[cell(w[0][0])][cell(w[1][0])] += 1.0;
        }
        let tau = iat(&marginal(&xs, 0)).unwrap().unwrap();
        let (mut diff, mut se, mut pairs) = (0.0, 0.0, 0);
        for i in 0..64 {
            for j in (i + 1)..64 {
                let (a, b) = (counts[i][j], counts[j][i]);
                if a + b > 0.0 {
                    diff += (a - b).abs();
                    se += ((a + b) * tau).sqrt();
                    pairs += 1;
                }
            }
        }
        assert!(pairs > 100);
        assert!(diff < 3.0 * se, "{kind:?}: mean |flux difference| {} vs se {}", diff / pairs as f64, se / pairs as f64);
    }
}

#[test]
fn slice_kernels_preserve_grid_probabilities() {
    let target = restricted_normal();
    let probs = cell_probabilities();
    let n = 1_000_000;
    for kind in [SamplerKind::Gpss, SamplerKind::Hruss, SamplerKind::GpEss] {
        let xs = run(BaseSamplerConfig::new(kind).build(1), &target, &[0.1], n, 22);
        let tau = iat(&marginal(&xs, 0)).unwrap().unwrap();
        let mut freq = vec![0f64; 64];
        for x in &xs {
            freq[cell(x[0])] += 1.0 / n as f64;
        }
        for (i, (&f, &p)) in freq.iter().zip(&probs).enumerate() {
            let se = (p * (1.0 - p) * tau.max(2.0) / n as f64).sqrt();
            assert!((f - p).abs() < 5.0 * se + 1e-6, "{kind:?} cell {i}: {f} vs {p}");
        }
    }
}

#[test]
fn reported_tde_matches_density_calls() {
    let calls = Arc::new(AtomicU64::new(0));
    let counter = calls.clone();
    let target = FnTarget::new(3, move |x: &[f64]| {
        counter.fetch_add(1, Ordering::Relaxed);
        -0.5 * x.iter().map(|v| v * v).sum::<f64>() - x[0].abs()
    });
    for kind in KINDS.iter().chain(&[SamplerKind::Adarwm]) {
        let before = calls.load(Ordering::Relaxed);
        let mut chain = AttChain::new(&target, BaseSamplerConfig::new(*kind).build(3), chain_rng(3, 0), &[0.3, 0.2, -1.0]).unwrap();
        assert_eq!(calls.load(Ordering::Relaxed) - before, 1);
        for step in 0..2000 {
            // A new map costs one re-evaluation, charged to the next transition.
            let refresh = u64::from(step == 1000);
            if step == 1000 {
                let before = calls.load(Ordering::Relaxed);
                chain.set_map(Arc::new(AffineMap::random_general(3, 5)));
                assert_eq!(calls.load(Ordering::Relaxed), before);
            }
            let before = calls.load(Ordering::Relaxed);
            let rec = chain.transition();
            assert_eq!(rec.tde, calls.load(Ordering::Relaxed) - before, "{kind:?}");
            assert!(rec.tde >= 1 + refresh);
            if matches!(kind, SamplerKind::Rwm | SamplerKind::Imh | SamplerKind::Adarwm) {
                assert_eq!(rec.tde, 1 + refresh);
            }
        }
    }
}

#[test]
fn hruss_never_repeats_a_state() {
    let target = GaussianTarget::standard(3);
    let xs = run(Box::new(Hruss::new(3, 1.0, 1000)), &target, &[0.0, 0.5, 1.0], 10_000, 4);
    let distinct: HashSet<Vec<u64>> = xs.iter().map(|x| x.iter().map(|v| v.to_bits()).collect()).collect();
    assert_eq!(distinct.len(), xs.len());
}

#[test]
fn rwm_one_dimensional_acceptance_rate() {
    let target = GaussianTarget::standard(1);
    let mut chain = AttChain::new(&target, Box::new(Rwm::unit(1, 2.4)), chain_rng(5, 0), &[0.0]).unwrap();
    for _ in 0..100_000 {
        chain.transition();
    }
    let rate = chain.kernel_stats().acceptance_rate().unwrap();
    assert!((rate - 0.44).abs() < 0.03, "{rate}");
}

#[test]
fn metropolis_edge_cases() {
    // Flat target: every proposal has the same density.
    let flat = FnTarget::new(2, |_: &[f64]| 0.0);
    let mut chain = AttChain::new(&flat, Box::new(Rwm::unit(2, 1.0)), chain_rng(6, 0), &[0.0, 0.0]).unwrap();
    for _ in 0..500 {
        assert!(chain.transition().moved);
    }
    // Proposals always off-support.
    let point = FnTarget::new(1, |x: &[f64]| if x[0] == 0.25 { 0.0 } else { f64::NEG_INFINITY });
    let mut chain = AttChain::new(&point, Box::new(Rwm::unit(1, 1.0)), chain_rng(6, 1), &[0.25]).unwrap();
    for _ in 0..500 {
        assert!(!chain.transition().moved);
        assert_eq!(chain.x(), &[0.25]);
    }
    // IMH proposing from the target itself accepts everything.
    let target = GaussianTarget::standard(3);
    let mut chain = AttChain::new(&target, Box::new(Imh::unit(3, 1.0)), chain_rng(6, 2), &[0.0, 1.0, 0.0]).unwrap();
    for _ in 0..500 {
        chain.transition();
    }
    assert_eq!(chain.kernel_stats().acceptance_rate(), Some(1.0));
}

#[test]
fn gp_ess_on_its_own_prior_accepts_first_angle() {
    let target = GaussianTarget::standard(4);
    let mut chain = AttChain::new(&target, Box::new(GpEss::unit(4)), chain_rng(8, 0), &[0.1, 0.2, 0.3, 0.4]).unwrap();
    let mut xs = Vec::new();
    for _ in 0..20_000 {
        assert_eq!(chain.transition().tde, 1);
        xs.push(chain.x().to_vec());
    }
    for i in 0..4 {
        assert!(ks_p(&marginal(&xs, i), standard_normal_cdf) > 0.001);
    }
}

#[test]
fn gpss_dimension_robust_on_isotropic_gaussian() {
    let mean_iat = |d: usize| {
        let target = GaussianTarget::standard(d);
        let x0: Vec<f64> = {
            let mut rng = chain_rng(9, d);
            (0..d).map(|_| standard_normal(&mut rng)).collect()
        };
        let xs = run(Box::new(Gpss::new(d, 3.0, 1000)), &target, &x0, 20_000, 9);
        (0..d).map(|i| iat(&marginal(&xs, i)).unwrap().unwrap()).sum::<f64>() / d as f64
    };
    let (low, high) = (mean_iat(10), mean_iat(30));
    assert!(high < 2.0 * low, "d=10: {low}, d=30: {high}");
}

#[test]
fn gpss_in_one_dimension() {
    let target = FnTarget::new(1, |x: &[f64]| -(x[0] - 0.5).abs());
    let xs = run(Box::new(Gpss::new(1, 3.0, 1000)), &target, &[1.0], 40_000, 10);
    let s = marginal(&xs, 0);
    let laplace_cdf = |v: f64| if v < 0.5 { 0.5 * (v - 0.5).exp() } else { 1.0 - 0.5 * (0.5 - v).exp() };
    assert!(ks_p(&s, laplace_cdf) > 0.001);
    assert!(s.iter().any(|&v| v < 0.0) && s.iter().any(|&v| v > 0.0));
}

#[test]
fn adarwm_pure_fixed_component() {
    let target = GaussianTarget::standard(2);
    let mut chain = AttChain::new(&target, Box::new(AdaRwm::new(2, 1.0)), chain_rng(11, 0), &[0.0, 0.0]).unwrap();
    let mut prev = chain.x().to_vec();
    let mut sq = 0.0;
    let n = 20_000;
    for _ in 0..n {
        chain.transition();
        sq += chain.x().iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        prev = chain.x().to_vec();
    }
    // Accepted steps have squared length ≈ 2 · 0.1² / 2 = 0.01 on average.
    let rate = chain.kernel_stats().acceptance_rate().unwrap();
    assert!(rate > 0.9);
    let mean_sq = sq / n as f64;
    assert!((mean_sq / rate - 0.01).abs() < 0.002, "{mean_sq}");
}

#[test]
fn adarwm_samples_correlated_gaussian() {
    let cov = Matrix::from_rows(&[vec![1.0, 0.9], vec![0.9, 1.0]]).unwrap();
    let target = GaussianTarget::new(vec![0.0, 0.0], &cov).unwrap();
    let xs = run(Box::new(AdaRwm::new(2, 0.05)), &target, &[0.0, 0.0], 60_000, 12);
    let tail = &xs[10_000..];
    for i in 0..2 {
        assert!(ks_p(&marginal(tail, i), standard_normal_cdf) > 0.001);
    }
}

#[test]
fn rwm_with_factor_matches_covariance_scale() {
    let l = LowerTriangular::from_lower(&Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 0.5]]).unwrap());
    let target = FnTarget::new(2, |_: &[f64]| 0.0);
    let xs = run(Box::new(Rwm::with_factor(1.0, l.clone())), &target, &[0.0, 0.0], 50_000, 13);
    let steps: Vec<Vec<f64>> = xs.windows(2).map(|w| vec![w[1][0] - w[0][0], w[1][1] - w[0][1]]).collect();
    let n = steps.len() as f64;
    let var0 = steps.iter().map(|s| s[0] * s[0]).sum::<f64>() / n;
    let cov01 = steps.iter().map(|s| s[0] * s[1]).sum::<f64>() / n;
    let g = l.gram();
    assert!((var0 - g.get(0, 0)).abs() < 0.1, "{var0}");
    assert!((cov01 - g.get(0, 1)).abs() < 0.05, "{cov01}");
}
