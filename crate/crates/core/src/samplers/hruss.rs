use super::slice::{log_threshold, shrinkage, stepping_out};
use super::{Kernel, KernelStats, LatentDensity};
use crate::linalg::norm;
use crate::rng::{fill_standard_normal, ChainRng};

/// Hit-and-run uniform slice sampling: 1D slice sampling along a uniformly
/// random direction.
pub struct Hruss {
    d: usize,
    w: f64,
    cap: u32,
    stats: KernelStats,
    dir: Vec<f64>,
    point: Vec<f64>,
}

impl Hruss {
    pub fn new(d: usize, w: f64, cap: u32) -> Self {
        Hruss {
            d,
            w,
            cap,
            stats: KernelStats::default(),
            dir: vec![0.0; d],
            point: vec![0.0; d],
        }
    }
}

impl Kernel for Hruss {
    fn step(
        &mut self,
        f: &mut LatentDensity<'_>,
        y: &mut [f64],
        log_f: &mut f64,
        rng: &mut ChainRng,
    ) -> bool {
        let log_t = log_threshold(*log_f, rng);
        loop {
            fill_standard_normal(rng, &mut self.dir);
            let n = norm(&self.dir);
            if n > 0.0 {
                self.dir.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
        let (d, dir, point) = (self.d, &self.dir, &mut self.point);
        let y0: &[f64] = y;
        let mut line = |g: f64| {
            for i in 0..d {
                point[i] = y0[i] + g * dir[i];
            }
            f.eval(point)
        };
        let (lo, hi) = stepping_out(&mut line, log_t, 0.0, self.w, self.cap, None, rng, &mut self.stats);
        let out = shrinkage(&mut line, log_t, lo, hi, 0.0, rng, &mut self.stats);
        self.stats.proposals += 1;
        match out {
            Some((g, v)) => {
                for i in 0..d {
                    y[i] += g * self.dir[i];
                }
                *log_f = v;
                self.stats.accepted += 1;
                true
            }
            None => false,
        }
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}
