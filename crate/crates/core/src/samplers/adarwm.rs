use super::{Kernel, KernelStats, LatentDensity};
use crate::linalg::cholesky;
use crate::rng::{fill_standard_normal, open_unit, ChainRng};
use crate::transform::MomentAccumulator;

pub const DEFAULT_BETA: f64 = 0.05;

/// Adaptive random walk Metropolis with the mixture proposal
/// `β N(x, 0.1²/d I) + (1 − β) N(x, 2.38²/d Σ_n)`, where `Σ_n` is the sample
/// covariance of the chain's own history.
///
/// While the history holds at most `2d` states only the fixed component is
/// used. Randomness order: mixture uniform, `d` normals, acceptance uniform.
pub struct AdaRwm {
    d: usize,
    beta: f64,
    history: MomentAccumulator,
    stats: KernelStats,
    z: Vec<f64>,
    step: Vec<f64>,
    proposal: Vec<f64>,
}

impl AdaRwm {
    pub fn new(d: usize, beta: f64) -> Self {
        AdaRwm {
            d,
            beta,
            history: MomentAccumulator::new(d, false, true),
            stats: KernelStats::default(),
            z: vec![0.0; d],
            step: vec![0.0; d],
            proposal: vec![0.0; d],
        }
    }

    pub fn in_early_phase(&self) -> bool {
        self.history.count() <= 2 * self.d as u64
    }
}

impl Kernel for AdaRwm {
    fn step(
        &mut self,
        f: &mut LatentDensity<'_>,
        x: &mut [f64],
        log_f: &mut f64,
        rng: &mut ChainRng,
    ) -> bool {
        if self.history.count() == 0 {
            self.history.push(x);
        }
        let d = self.d as f64;
        let u_mix = open_unit(rng);
        fill_standard_normal(rng, &mut self.z);

        let adaptive = !self.in_early_phase() && u_mix >= self.beta;
        let factor = if adaptive {
            let sigma = self.history.covariance().expect("covariance available");
            let l = cholesky(&sigma);
            if l.is_none() {
                self.stats.chol_fallbacks += 1;
            }
            l
        } else {
            None
        };
        match factor {
            Some(l) => {
                l.mul_vec(&self.z, &mut self.step);
                let s = 2.38 / d.sqrt();
                self.step.iter_mut().for_each(|v| *v *= s);
            }
            None => {
                let s = 0.1 / d.sqrt();
                for (st, z) in self.step.iter_mut().zip(&self.z) {
                    *st = s * z;
                }
            }
        }
        for i in 0..self.d {
            self.proposal[i] = x[i] + self.step[i];
        }
        let v = f.eval(&self.proposal);
        let u = open_unit(rng);
        self.stats.proposals += 1;
        let accepted = u.ln() < v - *log_f;
        if accepted {
            x.copy_from_slice(&self.proposal);
            *log_f = v;
            self.stats.accepted += 1;
        }
        self.history.push(x);
        accepted
    }

    fn stats(&self) -> KernelStats {
        self.stats
    }
}
