use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Kernel, KernelStats, LatentDensity};
use crate::error::{Error, Result};
use crate::rng::ChainRng;
use crate::targets::LogDensity;
use crate::transform::AffineMap;

/// Outcome of one chain transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    /// Target density evaluations consumed.
    pub tde: u64,
    pub moved: bool,
}

/// One chain performing affine-conjugated transitions: map the state to
/// latent space, take a base-kernel step there, map back.
///
/// The latent state and its log-density are cached between transitions and
/// recomputed (one evaluation) after the map changes. A transition that does
/// not move leaves the sample-space state bit-for-bit unchanged.
pub struct AttChain<'a> {
    density: LatentDensity<'a>,
    kernel: Box<dyn Kernel>,
    rng: ChainRng,
    x: Vec<f64>,
    y: Vec<f64>,
    log_f: f64,
    synced: bool,
}

impl<'a> AttChain<'a> {
    /// Starts at `x0` under the identity map; evaluates `log ρ(x0)` once.
    pub fn new(
        target: &'a dyn LogDensity,
        kernel: Box<dyn Kernel>,
        rng: ChainRng,
        x0: &[f64],
    ) -> Result<Self> {
        let d = target.dim();
        if x0.len() != d {
            return Err(Error::usage(format!(
                "initial state has length {}, target dimension is {d}",
                x0.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("initial state must be finite"));
        }
        let mut density = LatentDensity::new(target, Arc::new(AffineMap::identity(d)));
        let log_f = density.eval(x0);
        if log_f == f64::NEG_INFINITY {
            return Err(Error::usage("initial state has zero target density"));
        }
        Ok(AttChain {
            density,
            kernel,
            rng,
            x: x0.to_vec(),
            y: x0.to_vec(),
            log_f,
            synced: true,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Cached `log ρ` of the current state (as evaluated in latent space).
    pub fn log_density(&self) -> f64 {
        self.log_f
    }

    pub fn map(&self) -> &Arc<AffineMap> {
        self.density.map()
    }

    pub fn eval_count(&self) -> u64 {
        self.density.eval_count()
    }

    pub fn kernel_stats(&self) -> KernelStats {
        self.kernel.stats()
    }

    /// Installs a new map; a no-op if it is the current one.
    pub fn set_map(&mut self, map: Arc<AffineMap>) {
        if Arc::ptr_eq(&map, self.density.map()) {
            return;
        }
        self.density.set_map(map);
        self.synced = false;
    }

    pub fn transition(&mut self) -> TransitionRecord {
        let before = self.density.eval_count();
        if !self.synced {
            self.density.map().invert(&self.x, &mut self.y);
            self.log_f = self.density.eval(&self.y);
            self.synced = true;
        }
        let moved = self
            .kernel
            .step(&mut self.density, &mut self.y, &mut self.log_f, &mut self.rng);
        if moved {
            self.density.map().apply(&self.y, &mut self.x);
        }
        TransitionRecord {
            tde: self.density.eval_count() - before,
            moved,
        }
    }
}
