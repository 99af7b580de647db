use super::slice::{log_threshold, shrinkage, stepping_out};
use super::{Kernel, KernelStats, LatentDensity};
use crate::linalg::{dot, norm};
use crate::rng::{fill_standard_normal, open_unit, uniform, ChainRng};

const TAU: f64 = std::f64::consts::TAU;

/// Gibbsian polar slice sampling on `ρ¹(y) = ‖y‖^{d−1} ρ(y)`.
///
/// One transition draws a slice height, moves the direction `θ = y/‖y‖`
/// along a random great circle by angular shrinkage, then moves the radius by
/// stepping-out and shrinkage on `(0, ∞)`.
pub struct Gpss {
    d: usize,
    w: f64,
    cap: u32,
    stats: KernelStats,
    theta: Vec<f64>,
    tangent: Vec<f64>,
    point: Vec<f64>,
}

impl Gpss {
    pub fn new(d: usize, w: f64, cap: u32) -> Self {
        Gpss {
            d,
            w,
            cap,
            stats: KernelStats::default(),
            theta: vec![0.0; d],
            tangent: vec![0.0; d],
            point: vec![0.0; d],
        }
    }

    fn radial_term(&self, p: &[f64]) -> f64 {
        if self.d == 1 {
            0.0
        } else {
            (self.d - 1) as f64 * norm(p).ln()
        }
    }

    fn random_tangent(&mut self, rng: &mut ChainRng) {
        loop {
            fill_standard_normal(rng, &mut self.tangent);
            let proj = dot(&self.tangent, &self.theta);
            for (t, th) in self.tangent.iter_mut().zip(&self.theta) {
                *t -= proj * th;
            }
            let n = norm(&self.tangent);
            if n >= 1e-14 {
                self.tangent.iter_mut().for_each(|t| *t /= n);
                return;
            }
        }
    }
}

impl Kernel for Gpss {
    fn step(
        &mut self,
        f: &mut LatentDensity<'_>,
        y: &mut [f64],
        log_f: &mut f64,
        rng: &mut ChainRng,
    ) -> bool {
        let d = self.d;
        let mut r = norm(y);
        let mut base = *log_f;
        let mut nudged = false;
        if r == 0.0 {
            // ρ¹ vanishes at the origin; move off it in a random direction.
            fill_standard_normal(rng, &mut self.point);
            let n = norm(&self.point);
            for (yi, p) in y.iter_mut().zip(&self.point) {
                *yi = 1e-12 * p / n;
            }
            base = f.eval(y);
            r = norm(y);
            self.stats.origin_nudges += 1;
            nudged = true;
        }
        let log_t = log_threshold(self.radial_term(y) + base, rng);
        for (th, yi) in self.theta.iter_mut().zip(y.iter()) {
            *th = yi / r;
        }
        let mut moved = nudged;

        // Direction update.
        if d == 1 {
            if open_unit(rng) < 0.5 {
                self.point[0] = -y[0];
                let v = f.eval(&self.point);
                if v > log_t {
                    self.theta[0] = -self.theta[0];
                    base = v;
                    moved = true;
                }
            }
        } else {
            self.random_tangent(rng);
            let mut omega = uniform(rng, 0.0, TAU);
            let (mut lo, mut hi) = (omega - TAU, omega);
            loop {
                let (s, c) = omega.sin_cos();
                for i in 0..d {
                    self.point[i] = r * (c * self.theta[i] + s * self.tangent[i]);
                }
                let v = f.eval(&self.point);
                if v + self.radial_term(&self.point) > log_t {
                    base = v;
                    for i in 0..d {
                        self.theta[i] = c * self.theta[i] + s * self.tangent[i];
                    }
                    moved = true;
                    break;
                }
                if omega < 0.0 {
                    lo = omega;
                } else {
                    hi = omega;
                }
                if hi - lo < super::slice::MIN_BRACKET {
                    self.stats.shrink_fallbacks += 1;
                    break;
                }
                omega = uniform(rng, lo, hi);
            }
        }

        // Radius update.
        let theta = &self.theta;
        let point = &mut self.point;
        let d1 = (d - 1) as f64;
        let mut last_base = base;
        let mut radial = |s: f64| {
            for i in 0..d {
                point[i] = s * theta[i];
            }
            let v = f.eval(point);
            last_base = v;
            if d == 1 {
                v
            } else {
                v + d1 * norm(point).ln()
            }
        };
        let (lo, hi) = stepping_out(&mut radial, log_t, r, self.w, self.cap, Some(0.0), rng, &mut self.stats);
        if let Some((r_new, _)) = shrinkage(&mut radial, log_t, lo, hi, r, rng, &mut self.stats) {
            r = r_new;
            base = last_base;
            moved = true;
        }
        if moved {
            for i in 0..d {
                y[i] = r * self.theta[i];
            }
            *log_f = base;
        }
        self.stats.proposals += 1;
        self.stats.accepted += moved as u64;
        moved
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}
