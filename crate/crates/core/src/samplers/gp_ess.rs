use super::slice::{log_threshold, MIN_BRACKET};
use super::{Kernel, KernelStats, LatentDensity, Reference};
use crate::linalg::dot;
use crate::rng::{fill_standard_normal, uniform, ChainRng};

const TAU: f64 = std::f64::consts::TAU;

/// General-purpose elliptical slice sampling: ESS on
/// `φ¹(x) = ρ(x) / N(x; c, L Lᵀ)` with the Gaussian `N(c, L Lᵀ)` as prior.
///
/// Randomness order per transition: slice uniform, `d` normals for the
/// auxiliary point, initial angle, then shrinkage angles.
pub struct GpEss {
    reference: Option<Reference>,
    stats: KernelStats,
    /// `x − c`
    offset: Vec<f64>,
    /// `v − c = L z`
    aux: Vec<f64>,
    z: Vec<f64>,
    point: Vec<f64>,
    scratch: Vec<f64>,
}

impl GpEss {
    /// Reference `N(0, I)`, as used in latent space.
    pub fn unit(d: usize) -> Self {
        Self::build(d, None)
    }

    pub fn with_reference(reference: Reference) -> Self {
        Self::build(reference.c.len(), Some(reference))
    }

    fn build(d: usize, reference: Option<Reference>) -> Self {
        GpEss {
            reference,
            stats: KernelStats::default(),
            offset: vec![0.0; d],
            aux: vec![0.0; d],
            z: vec![0.0; d],
            point: vec![0.0; d],
            scratch: vec![0.0; d],
        }
    }

    /// `½ ‖L⁻¹(x − c)‖²`, the log-density correction of `φ¹` up to a constant.
    fn correction(&mut self, x: &[f64]) -> f64 {
        match &self.reference {
            None => 0.5 * dot(x, x),
            Some(r) => 0.5 * r.l.whitened_norm_sq(x, &r.c, &mut self.scratch),
        }
    }
}

impl Kernel for GpEss {
    fn step(
        &mut self,
        f: &mut LatentDensity<'_>,
        x: &mut [f64],
        log_f: &mut f64,
        rng: &mut ChainRng,
    ) -> bool {
        let d = x.len();
        let log_t = log_threshold(*log_f + self.correction(x), rng);
        fill_standard_normal(rng, &mut self.z);
        match &self.reference {
            None => {
                self.aux.copy_from_slice(&self.z);
                self.offset.copy_from_slice(x);
            }
            Some(r) => {
                r.l.mul_vec(&self.z, &mut self.aux);
                for i in 0..d {
                    self.offset[i] = x[i] - r.c[i];
                }
            }
        }
        let mut omega = uniform(rng, 0.0, TAU);
        let (mut lo, mut hi) = (omega - TAU, omega);
        self.stats.proposals += 1;
        loop {
            let (s, c) = omega.sin_cos();
            for i in 0..d {
                self.point[i] = c * self.offset[i] + s * self.aux[i];
            }
            if let Some(r) = &self.reference {
                for i in 0..d {
                    self.point[i] += r.c[i];
                }
            }
            let v = f.eval(&self.point);
            let point = std::mem::take(&mut self.point);
            let corr = self.correction(&point);
            self.point = point;
            if v + corr > log_t {
                x.copy_from_slice(&self.point);
                *log_f = v;
                self.stats.accepted += 1;
                return true;
            }
            if omega < 0.0 {
                lo = omega;
            } else {
                hi = omega;
            }
            if hi - lo < MIN_BRACKET {
                self.stats.shrink_fallbacks += 1;
                return false;
            }
            omega = uniform(rng, lo, hi);
        }
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}
