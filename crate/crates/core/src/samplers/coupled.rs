use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AttChain, BaseSamplerConfig, GpEss, Imh, Kernel, LatentDensity, Reference, Rwm, SamplerKind};
use crate::error::{Error, Result};
use crate::linalg::{distance, LowerTriangular};
use crate::rng::chain_rng;
use crate::targets::LogDensity;
use crate::transform::AffineMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupledKind {
    Rwm,
    Imh,
    GpEss,
}

/// Runs the kernel parameterized by `(c, Σ = L Lᵀ)` directly on `target` and,
/// from the same seed, the unit-parameter kernel conjugated by
/// `α(y) = L y + c`. Both start at `c`. Returns the largest distance between
/// the two trajectories over `n_steps` steps.
pub fn coupled_equivalence_check(
    kind: CoupledKind,
    target: &dyn LogDensity,
    c: &[f64],
    l: &LowerTriangular,
    n_steps: usize,
    seed: u64,
) -> Result<f64> {
    let d = target.dim();
    if c.len() != d || l.dim() != d {
        return Err(Error::usage("reference parameters do not match the target dimension"));
    }
    let reference = Reference {
        c: c.to_vec(),
        l: l.clone(),
    };
    let (mut direct, unit): (Box<dyn Kernel>, Box<dyn Kernel>) = match kind {
        CoupledKind::Rwm => {
            let sigma = BaseSamplerConfig::new(SamplerKind::Rwm).step_scale(d);
            (Box::new(Rwm::with_factor(sigma, l.clone())), Box::new(Rwm::unit(d, sigma)))
        }
        CoupledKind::Imh => {
            let sigma = BaseSamplerConfig::new(SamplerKind::Imh).step_scale(d);
            (Box::new(Imh::with_reference(sigma, reference)), Box::new(Imh::unit(d, sigma)))
        }
        CoupledKind::GpEss => (Box::new(GpEss::with_reference(reference)), Box::new(GpEss::unit(d))),
    };

    let mut f = LatentDensity::new(target, Arc::new(AffineMap::identity(d)));
    let mut rng = chain_rng(seed, 0);
    let mut x = c.to_vec();
    let mut log_f = f.eval(&x);

    let mut chain = AttChain::new(target, unit, chain_rng(seed, 0), c)?;
    chain.set_map(Arc::new(AffineMap::General {
        c: c.to_vec(),
        w: l.clone(),
    }));

    // The conjugated chain re-evaluates once after the map is installed; the
    // direct chain's first transition does not, so rng streams stay aligned.
    let mut max_dev: f64 = 0.0;
    for _ in 0..n_steps {
        direct.step(&mut f, &mut x, &mut log_f, &mut rng);
        chain.transition();
        max_dev = max_dev.max(distance(&x, chain.x()));
    }
    Ok(max_dev)
}
