//! Base-sampler transition kernels, the slice-sampling primitives they are
//! built from, and the affine-conjugation wrapper that runs them in latent
//! space.

mod adarwm;
mod att;
mod coupled;
mod gp_ess;
mod gpss;
mod hruss;
mod metropolis;
pub mod slice;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use adarwm::AdaRwm;
pub use att::{AttChain, TransitionRecord};
pub use coupled::{coupled_equivalence_check, CoupledKind};
pub use gp_ess::GpEss;
pub use gpss::Gpss;
pub use hruss::Hruss;
pub use metropolis::{Imh, Rwm};

use crate::error::{Error, Result};
use crate::linalg::LowerTriangular;
use crate::rng::ChainRng;
use crate::targets::{CountingTarget, LogDensity};
use crate::transform::AffineMap;

/// Counters a kernel keeps about unusual events and acceptances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelStats {
    pub proposals: u64,
    pub accepted: u64,
    pub cap_hits: u64,
    pub shrink_fallbacks: u64,
    pub chol_fallbacks: u64,
    pub origin_nudges: u64,
}

impl KernelStats {
    pub fn merge(&mut self, other: &KernelStats) {
        self.proposals += other.proposals;
        self.accepted += other.accepted;
        self.cap_hits += other.cap_hits;
        self.shrink_fallbacks += other.shrink_fallbacks;
        self.chol_fallbacks += other.chol_fallbacks;
        self.origin_nudges += other.origin_nudges;
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposals > 0).then(|| self.accepted as f64 / self.proposals as f64)
    }
}

/// `log ρ_α(y) = log ρ(α(y))` for one chain, counting target evaluations.
pub struct LatentDensity<'a> {
    target: CountingTarget<'a>,
    map: Arc<AffineMap>,
    buf: Vec<f64>,
}

impl<'a> LatentDensity<'a> {
    pub fn new(target: &'a dyn LogDensity, map: Arc<AffineMap>) -> Self {
        let d = target.dim();
        assert_eq!(map.dim(), d, "map and target dimensions differ");
        LatentDensity {
            target: CountingTarget::new(target),
            map,
            buf: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.buf.len()
    }

    pub fn map(&self) -> &Arc<AffineMap> {
        &self.map
    }

    pub(crate) fn set_map(&mut self, map: Arc<AffineMap>) {
        self.map = map;
    }

    pub fn eval_count(&self) -> u64 {
        self.target.eval_count()
    }

    #[inline]
    pub fn eval(&mut self, y: &[f64]) -> f64 {
        if self.map.is_identity() {
            return self.target.eval(y);
        }
        self.map.apply(y, &mut self.buf);
        self.target.eval(&self.buf)
    }
}

/// A Markov kernel acting on latent states.
pub trait Kernel: Send {
    /// Advances `y`, whose latent log-density is `log_f`, by one transition.
    /// Returns whether the state changed; when it did not, `y` and `log_f`
    /// are untouched.
    fn step(
        &mut self,
        density: &mut LatentDensity<'_>,
        y: &mut [f64],
        log_f: &mut f64,
        rng: &mut ChainRng,
    ) -> bool;

    fn stats(&self) -> KernelStats;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Gpss,
    GpEss,
    Hruss,
    Rwm,
    Imh,
    Adarwm,
}

impl SamplerKind {
    pub fn label(&self) -> &'static str {
        match self {
            SamplerKind::Gpss => "GPSS",
            SamplerKind::GpEss => "GP-ESS",
            SamplerKind::Hruss => "HRUSS",
            SamplerKind::Rwm => "RWM",
            SamplerKind::Imh => "IMH",
            SamplerKind::Adarwm => "AdaRWM",
        }
    }
}

/// Kernel choice plus its hyperparameters; unset values take per-kind
/// defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSamplerConfig {
    pub kind: SamplerKind,
    /// Stepping-out width (GPSS radius, HRUSS line).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    /// Step scale for RWM and IMH.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Mixture weight of the fixed AdaRWM component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step_out: Option<u32>,
}

impl BaseSamplerConfig {
    pub fn new(kind: SamplerKind) -> Self {
        BaseSamplerConfig {
            kind,
            w: None,
            sigma: None,
            beta: None,
            max_step_out: None,
        }
    }

    pub fn width(&self) -> f64 {
        self.w.unwrap_or(match self.kind {
            SamplerKind::Gpss => 3.0,
            _ => 1.0,
        })
    }

    pub fn step_scale(&self, d: usize) -> f64 {
        self.sigma.unwrap_or(match self.kind {
            SamplerKind::Imh => 1.5,
            _ => 2.38 / (d as f64).sqrt(),
        })
    }

    pub fn mixture_weight(&self) -> f64 {
        self.beta.unwrap_or(adarwm::DEFAULT_BETA)
    }

    pub fn step_out_cap(&self) -> u32 {
        self.max_step_out.unwrap_or(slice::DEFAULT_MAX_STEP_OUT)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(Error::validation(format!(
                "sampler parameter `{name}` must be positive and finite, got {v}"
            ))),
            _ => Ok(()),
        };
        positive("w", self.w)?;
        positive("sigma", self.sigma)?;
        if let Some(b) = self.beta {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::validation(format!("`beta` must lie in [0, 1], got {b}")));
            }
        }
        if self.max_step_out == Some(0) {
            return Err(Error::validation("`max_step_out` must be at least 1"));
        }
        Ok(())
    }

    /// A unit-parameter kernel for a `d`-dimensional latent space.
    pub fn build(&self, d: usize) -> Box<dyn Kernel> {
        match self.kind {
            SamplerKind::Gpss => Box::new(Gpss::new(d, self.width(), self.step_out_cap())),
            SamplerKind::Hruss => Box::new(Hruss::new(d, self.width(), self.step_out_cap())),
            SamplerKind::GpEss => Box::new(GpEss::unit(d)),
            SamplerKind::Rwm => Box::new(Rwm::unit(d, self.step_scale(d))),
            SamplerKind::Imh => Box::new(Imh::unit(d, self.step_scale(d))),
            SamplerKind::Adarwm => Box::new(AdaRwm::new(d, self.mixture_weight())),
        }
    }
}

/// Gaussian reference `N(c, L Lᵀ)` used by the directly parameterized
/// kernels; `None` in a kernel means `c = 0`, `L = I`.
#[derive(Clone, Debug)]
pub struct Reference {
    pub c: Vec<f64>,
    pub l: LowerTriangular,
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::rng::chain_rng;

    /// Runs `n` steps of `kernel` on `target` from `x0` without a map.
    pub fn run_plain(
        kernel: &mut dyn Kernel,
        target: &dyn LogDensity,
        x0: &[f64],
        n: usize,
        seed: u64,
    ) -> (Vec<Vec<f64>>, u64) {
        let mut f = LatentDensity::new(target, Arc::new(AffineMap::identity(x0.len())));
        let mut rng = chain_rng(seed, 0);
        let mut y = x0.to_vec();
        let mut lf = f.eval(&y);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            kernel.step(&mut f, &mut y, &mut lf, &mut rng);
            assert_eq!(lf, f.target.peek(&y));
            out.push(y.clone());
        }
        (out, f.eval_count())
    }
}
