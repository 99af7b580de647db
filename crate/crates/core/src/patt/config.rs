use serde::{Deserialize, Serialize};

use super::schedule::{ScheduleSpec, UpdateSchedule};
use crate::error::{Error, Result};
use crate::samplers::{BaseSamplerConfig, SamplerKind};
use crate::transform::AdjustmentConfig;

pub const DEFAULT_CHAINS: usize = 10;

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "PATT_THREADS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParallelMode {
    /// Chains pool their samples into one shared transform.
    #[default]
    Entangled,
    /// Each chain adapts its own transform from its own samples.
    Naive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PattConfig {
    #[serde(default = "default_chains")]
    pub chains: usize,
    pub n_its: u64,
    /// Defaults to `n_its / 10`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_burn: Option<u64>,
    #[serde(default)]
    pub adjustments: AdjustmentConfig,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    pub base: BaseSamplerConfig,
    #[serde(default)]
    pub parallel_mode: ParallelMode,
    #[serde(default)]
    pub update_every_iteration: bool,
    /// Feed initialization burn-in samples to the accumulators.
    #[serde(default)]
    pub include_burn_in: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_chains() -> usize {
    DEFAULT_CHAINS
}

impl PattConfig {
    pub fn new(base: BaseSamplerConfig, adjustments: AdjustmentConfig, n_its: u64) -> Self {
        PattConfig {
            chains: DEFAULT_CHAINS,
            n_its,
            n_burn: None,
            adjustments,
            schedule: ScheduleSpec::Default,
            base,
            parallel_mode: ParallelMode::Entangled,
            update_every_iteration: false,
            include_burn_in: false,
            seed: 0,
        }
    }

    pub fn burn_in(&self) -> u64 {
        self.n_burn.unwrap_or(self.n_its / 10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::validation("`chains` must be at least 1"));
        }
        if self.n_its == 0 {
            return Err(Error::validation("`n_its` must be at least 1"));
        }
        self.base.validate()?;
        if self.base.kind == SamplerKind::Adarwm && !self.adjustments.is_none() {
            return Err(Error::validation(
                "AdaRWM adapts its own proposal; use it without affine adjustments",
            ));
        }
        if let Some(eps) = self.adjustments.regularization {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::validation("`regularization` must be positive"));
            }
        }
        Ok(())
    }

    /// The schedule in force: every iteration if requested, none when
    /// nothing is adapted, otherwise the configured one.
    pub fn resolved_schedule(&self, d: usize) -> Result<UpdateSchedule> {
        if self.adjustments.is_none() {
            return Ok(UpdateSchedule::Empty);
        }
        let spec = if self.update_every_iteration {
            &ScheduleSpec::EveryIteration
        } else {
            &self.schedule
        };
        spec.resolve(&self.adjustments, d, self.chains)
    }

    pub fn update_times(&self, d: usize) -> Result<Vec<u64>> {
        Ok(self.resolved_schedule(d)?.times_up_to(self.n_its))
    }
}

/// How barrier waits are timed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitClock {
    /// As if every chain had its own core: a chain waits for the slowest
    /// chain of the segment and then for the update.
    #[default]
    Parallel,
    /// Wall-clock barrier exit minus the chain's own finish time on the
    /// actual threads.
    Wall,
}

/// Execution knobs that do not influence the samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; defaults to `PATT_THREADS`, else one per chain up to
    /// the number of available cores.
    pub threads: Option<usize>,
    pub wait_clock: WaitClock,
}

impl RunOptions {
    pub fn with_threads(threads: usize) -> Self {
        RunOptions {
            threads: Some(threads),
            ..Self::default()
        }
    }

    pub fn resolve_threads(&self, chains: usize) -> Result<usize> {
        let requested = match self.threads {
            Some(t) => Some(t),
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                    Error::usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))
                })?),
                Err(_) => None,
            },
        };
        match requested {
            Some(0) => Err(Error::usage("thread count must be at least 1")),
            Some(t) => Ok(t.min(chains)),
            None => {
                let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
                Ok(chains.min(cores))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{Centering, Scaling};

    #[test]
    fn defaults() {
        let cfg = PattConfig::new(
            BaseSamplerConfig::new(SamplerKind::Gpss),
            AdjustmentConfig::new(Centering::Mean, Scaling::Covariance),
            1000,
        );
        assert_eq!(cfg.chains, 10);
        assert_eq!(cfg.burn_in(), 100);
        assert_eq!(cfg.update_times(50).unwrap(), vec![500, 1000]);
    }

    #[test]
    fn plain_runs_never_update() {
        let mut cfg = PattConfig::new(BaseSamplerConfig::new(SamplerKind::Gpss), AdjustmentConfig::default(), 1000);
        cfg.update_every_iteration = true;
        assert!(cfg.update_times(3).unwrap().is_empty());
    }

    #[test]
    fn adarwm_with_adjustments_rejected() {
        let cfg = PattConfig::new(
            BaseSamplerConfig::new(SamplerKind::Adarwm),
            AdjustmentConfig::new(Centering::Mean, Scaling::None),
            10,
        );
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn thread_resolution() {
        assert_eq!(RunOptions::with_threads(64).resolve_threads(4).unwrap(), 4);
        assert_eq!(RunOptions::with_threads(2).resolve_threads(4).unwrap(), 2);
        assert!(RunOptions::with_threads(0).resolve_threads(4).is_err());
    }
}
