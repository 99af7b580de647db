//! One-dimensional slice-sampling primitives.

use rand::RngCore;

use super::KernelStats;
use crate::rng::{open_unit, uniform};

/// Default cap on stepping-out expansions per side.
pub const DEFAULT_MAX_STEP_OUT: u32 = 1000;

/// Brackets narrower than this make shrinkage give up and keep `x0`.
pub const MIN_BRACKET: f64 = 1e-300;

/// Neal's linear stepping-out: a width-`w` window placed uniformly at random
/// around `x0`, each end pushed out by `w` until it leaves the slice
/// `{logf > log_t}` or `cap` expansions were made on that side.
///
/// With `lower = Some(a)` the left end never passes `a`; it is clamped there
/// instead of being evaluated.
#[allow(clippy::too_many_arguments)]
pub fn stepping_out<F, R>(
    logf: &mut F,
    log_t: f64,
    x0: f64,
    w: f64,
    cap: u32,
    lower: Option<f64>,
    rng: &mut R,
    stats: &mut KernelStats,
) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
    R: RngCore + ?Sized,
{
    let mut lo = x0 - w * open_unit(rng);
    let mut hi = lo + w;

    let mut left = cap;
    loop {
        if let Some(a) = lower {
            if lo <= a {
                lo = a;
                break;
            }
        }
        if logf(lo) <= log_t {
            break;
        }
        if left == 0 {
            stats.cap_hits += 1;
            break;
        }
        lo -= w;
        left -= 1;
    }

    let mut right = cap;
    while logf(hi) > log_t {
        if right == 0 {
            stats.cap_hits += 1;
            break;
        }
        hi += w;
        right -= 1;
    }
    (lo, hi)
}

/// Shrinkage on `(lo, hi)` around the on-slice point `x0`. Returns the
/// accepted point and its `logf`, or `None` if the bracket collapsed.
pub fn shrinkage<F, R>(
    logf: &mut F,
    log_t: f64,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    rng: &mut R,
    stats: &mut KernelStats,
) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> f64,
    R: RngCore + ?Sized,
{
    loop {
        if hi - lo < MIN_BRACKET {
            stats.shrink_fallbacks += 1;
            return None;
        }
        let x = uniform(rng, lo, hi);
        let v = logf(x);
        if v > log_t {
            return Some((x, v));
        }
        if x < x0 {
            lo = x;
        } else {
            hi = x;
        }
    }
}

/// Draws the log slice height `log ρ + log U`.
#[inline]
pub fn log_threshold<R: RngCore + ?Sized>(log_density: f64, rng: &mut R) -> f64 {
    log_density + open_unit(rng).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;

    fn box_logf(a: f64, b: f64) -> impl FnMut(f64) -> f64 {
        move |x| if (a..=b).contains(&x) { 0.0 } else { f64::NEG_INFINITY }
    }

    #[test]
    fn wide_window_covers_slice() {
        let mut rng = chain_rng(1, 0);
        let mut st = KernelStats::default();
        for _ in 0..100 {
            let (lo, hi) = stepping_out(&mut box_logf(0.0, 1.0), -1.0, 0.5, 10.0, 1000, None, &mut rng, &mut st);
            let k = (hi - lo) / 10.0;
            assert!(lo < 0.0 && hi > 1.0 && (k - k.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn narrow_slice_stops_immediately() {
        let mut rng = chain_rng(2, 0);
        let mut st = KernelStats::default();
        let (w, x0) = (0.3, 2.0);
        for _ in 0..100 {
            let mut f = box_logf(x0 - w, x0 + w);
            let (lo, hi) = stepping_out(&mut f, -1.0, x0, w, 1000, None, &mut rng, &mut st);
            assert!(hi - lo <= 3.0 * w + 1e-12);
        }
    }

    #[test]
    fn lower_bound_is_respected() {
        let mut rng = chain_rng(3, 0);
        let mut st = KernelStats::default();
        let mut f = |x: f64| -x;
        for _ in 0..100 {
            let (lo, hi) = stepping_out(&mut f, -5.0, 0.1, 3.0, 1000, Some(0.0), &mut rng, &mut st);
            assert_eq!(lo, 0.0);
            assert!(hi >= 5.0);
        }
    }

    #[test]
    fn cap_is_counted() {
        let mut rng = chain_rng(4, 0);
        let mut st = KernelStats::default();
        let mut f = |_x: f64| 0.0;
        let (lo, hi) = stepping_out(&mut f, -1.0, 0.0, 1.0, 5, None, &mut rng, &mut st);
        assert_eq!(st.cap_hits, 2);
        assert!((hi - lo - 11.0).abs() < 1e-12);
    }

    #[test]
    fn whole_interval_on_slice_uses_one_evaluation() {
        let mut rng = chain_rng(5, 0);
        let mut st = KernelStats::default();
        let mut calls = 0;
        let mut f = |_x: f64| {
            calls += 1;
            0.0
        };
        assert!(shrinkage(&mut f, -1.0, 0.0, 1.0, 0.5, &mut rng, &mut st).is_some());
        assert_eq!(calls, 1);
    }

    #[test]
    fn collapsed_bracket_falls_back() {
        let mut rng = chain_rng(6, 0);
        let mut st = KernelStats::default();
        let mut f = |_x: f64| f64::NEG_INFINITY;
        let out = shrinkage(&mut f, -1.0, 0.5, 0.5 + 1e-301, 0.5, &mut rng, &mut st);
        assert!(out.is_none());
        assert_eq!(st.shrink_fallbacks, 1);
    }

    #[test]
    fn shrinkage_is_uniform_on_slice() {
        let mut rng = chain_rng(7, 0);
        let mut st = KernelStats::default();
        let mut f = box_logf(0.4, 0.6);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| shrinkage(&mut f, -1.0, 0.0, 1.0, 0.5, &mut rng, &mut st).unwrap().0)
            .collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let cdf = (x - 0.4) / 0.2;
                (cdf - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - cdf).abs())
            })
            .fold(0.0, f64::max);
        // two-sided KS critical value at level 0.01 is 1.63 / sqrt(n)
        assert!(ks < 1.63 / (n as f64).sqrt(), "ks = {ks}");
    }

    #[test]
    fn stepping_out_then_shrinkage_is_uniform_on_unimodal_slice() {
        // logf(x) = −x², slice {x² < 1} for log_t = −1; chi-square over 10 bins.
        let mut rng = chain_rng(8, 0);
        let mut st = KernelStats::default();
        let mut f = |x: f64| -x * x;
        let n = 50_000;
        let mut bins = [0usize; 10];
        let mut x = 0.0;
        for _ in 0..n {
            let (lo, hi) = stepping_out(&mut f, -1.0, x, 0.7, 1000, None, &mut rng, &mut st);
            x = shrinkage(&mut f, -1.0, lo, hi, x, &mut rng, &mut st).unwrap().0;
            bins[(((x + 1.0) / 0.2) as usize).min(9)] += 1;
        }
        let e = n as f64 / 10.0;
        let chi2: f64 = bins.iter().map(|&b| (b as f64 - e).powi(2) / e).sum();
        // 9 degrees of freedom, 0.999 quantile ≈ 27.9
        assert!(chi2 < 27.9, "chi2 = {chi2}");
    }
}
