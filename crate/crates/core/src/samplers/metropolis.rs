use super::{Kernel, KernelStats, LatentDensity, Reference};
use crate::linalg::{dot, LowerTriangular};
use crate::rng::{fill_standard_normal, open_unit, ChainRng};

/// Random walk Metropolis with proposal `x + σ L z`, `z ~ N(0, I)`.
///
/// Randomness order: `d` normals, then the acceptance uniform.
pub struct Rwm {
    sigma: f64,
    factor: Option<LowerTriangular>,
    stats: KernelStats,
    z: Vec<f64>,
    step: Vec<f64>,
    proposal: Vec<f64>,
}

impl Rwm {
    pub fn unit(d: usize, sigma: f64) -> Self {
        Self::build(d, sigma, None)
    }

    pub fn with_factor(sigma: f64, l: LowerTriangular) -> Self {
        Self::build(l.dim(), sigma, Some(l))
    }

    fn build(d: usize, sigma: f64, factor: Option<LowerTriangular>) -> Self {
        Rwm {
            sigma,
            factor,
            stats: KernelStats::default(),
            z: vec![0.0; d],
            step: vec![0.0; d],
            proposal: vec![0.0; d],
        }
    }
}

impl Kernel for Rwm {
    fn step(
        &mut self,
        f: &mut LatentDensity<'_>,
        x: &mut [f64],
        log_f: &mut f64,
        rng: &mut ChainRng,
    ) -> bool {
        fill_standard_normal(rng, &mut self.z);
        match &self.factor {
            None => self.step.copy_from_slice(&self.z),
            Some(l) => l.mul_vec(&self.z, &mut self.step),
        }
        for i in 0..x.len() {
            self.proposal[i] = x[i] + self.sigma * self.step[i];
        }
        let v = f.eval(&self.proposal);
        let u = open_unit(rng);
        self.stats.proposals += 1;
        if u.ln() < v - *log_f {
            x.copy_from_slice(&self.proposal);
            *log_f = v;
            self.stats.accepted += 1;
            true
        } else {
            false
        }
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}

/// Independent Metropolis-Hastings with proposal `N(c, σ² L Lᵀ)`.
///
/// Randomness order: `d` normals, then the acceptance uniform.
pub struct Imh {
    sigma: f64,
    reference: Option<Reference>,
    stats: KernelStats,
    z: Vec<f64>,
    proposal: Vec<f64>,
    scratch: Vec<f64>,
}

impl Imh {
    pub fn unit(d: usize, sigma: f64) -> Self {
        Self::build(d, sigma, None)
    }

    pub fn with_reference(sigma: f64, reference: Reference) -> Self {
        Self::build(reference.c.len(), sigma, Some(reference))
    }

    fn build(d: usize, sigma: f64, reference: Option<Reference>) -> Self {
        Imh {
            sigma,
            reference,
            stats: KernelStats::default(),
            z: vec![0.0; d],
            proposal: vec![0.0; d],
            scratch: vec![0.0; d],
        }
    }

    /// `log N(x; c, σ² L Lᵀ)` up to an additive constant.
    fn log_proposal(&mut self, x: &[f64]) -> f64 {
        let q = match &self.reference {
            None => dot(x, x),
            Some(r) => r.l.whitened_norm_sq(x, &r.c, &mut self.scratch),
        };
        -0.5 * q / (self.sigma * self.sigma)
    }
}

impl Kernel for Imh {
    fn step(
        &mut self,
        f: &mut LatentDensity<'_>,
        x: &mut [f64],
        log_f: &mut f64,
        rng: &mut ChainRng,
    ) -> bool {
        fill_standard_normal(rng, &mut self.z);
        match &self.reference {
            None => {
                for (p, z) in self.proposal.iter_mut().zip(&self.z) {
                    *p = self.sigma * z;
                }
            }
            Some(r) => {
                r.l.mul_vec(&self.z, &mut self.proposal);
                for (p, c) in self.proposal.iter_mut().zip(&r.c) {
                    *p = self.sigma * *p + c;
                }
            }
        }
        let v = f.eval(&self.proposal);
        let proposal = std::mem::take(&mut self.proposal);
        let log_ratio = v - *log_f + self.log_proposal(x) - self.log_proposal(&proposal);
        self.proposal = proposal;
        let u = open_unit(rng);
        self.stats.proposals += 1;
        if u.ln() < log_ratio {
            x.copy_from_slice(&self.proposal);
            *log_f = v;
            self.stats.accepted += 1;
            true
        } else {
            false
        }
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}
