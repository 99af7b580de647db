use serde::{Deserialize, Serialize};

use crate::samplers::KernelStats;
use crate::transform::AffineMap;

/// Idle time a chain spent at the barrier of one update time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wait {
    pub iteration: u64,
    pub seconds: f64,
}

/// The map in force after the update at `update_time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub update_time: u64,
    /// Owning chain in naive mode; `None` for the shared map.
    pub chain: Option<usize>,
    /// `false` when the update failed and the previous map was kept.
    pub changed: bool,
    /// Number of samples the statistics were computed from.
    pub samples: u64,
    pub map: AffineMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted { chain: usize, message: String },
}

/// Everything one chain produced. Vectors indexed by iteration have an
/// unused slot 0 so that index `i` is iteration `i`.
#[derive(Clone, Debug, Default)]
pub struct ChainOutput {
    /// `(n_burn + 1) × d`, row 0 the initial state.
    pub burn_samples: Vec<f64>,
    pub burn_tde: Vec<u32>,
    pub burn_seconds: Vec<f64>,
    /// `(n_its + 1) × d`, row 0 the last burn-in state.
    pub samples: Vec<f64>,
    pub tde: Vec<u32>,
    pub seconds: Vec<f64>,
    pub waits: Vec<Wait>,
    /// Evaluations spent on the initial state.
    pub init_tde: u64,
    pub kernel_stats: KernelStats,
    /// Main-phase iterations that were carried out.
    pub completed: u64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub d: usize,
    pub n_its: u64,
    pub n_burn: u64,
    pub chains: Vec<ChainOutput>,
    pub update_times: Vec<u64>,
    pub transforms: Vec<TransformRecord>,
    pub warnings: Vec<String>,
    pub status: RunStatus,
    pub threads: usize,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Main-phase sample `i` of `chain`.
    pub fn sample(&self, chain: usize, i: u64) -> &[f64] {
        let d = self.d;
        let i = i as usize;
        &self.chains[chain].samples[i * d..(i + 1) * d]
    }

    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Transform history of one chain (naive mode) or the shared one.
    pub fn transforms_for(&self, chain: Option<usize>) -> impl Iterator<Item = &TransformRecord> {
        self.transforms.iter().filter(move |t| t.chain == chain)
    }

    pub fn total_tde(&self) -> u64 {
        self.chains
            .iter()
            .map(|c| {
                c.init_tde
                    + c.burn_tde.iter().map(|&t| t as u64).sum::<u64>()
                    + c.tde.iter().map(|&t| t as u64).sum::<u64>()
            })
            .sum()
    }
}
