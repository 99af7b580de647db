//! Performance metrics computed from run output: TDE per iteration,
//! samples per second, mean IAT, mean step size and the derived effective
//! sample rates.

mod iat;
pub mod ks;

use serde::{Deserialize, Serialize};

pub use iat::{iat, mcse, MIN_SERIES_LEN};

use crate::error::{Error, Result};
use crate::linalg::distance;
use crate::patt::RunReport;

/// Which main-phase iterations enter the metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Iterations `n_its/2 + 1 ..= n_its`.
    #[default]
    LatterHalf,
    /// Iterations `1 ..= n_its`.
    All,
    /// Iterations `from ..= to`.
    Range { from: u64, to: u64 },
}

impl Window {
    /// Inclusive iteration bounds for a run of `n_its` iterations.
    pub fn bounds(&self, n_its: u64) -> Result<(u64, u64)> {
        let (from, to) = match *self {
            Window::LatterHalf => (n_its / 2 + 1, n_its),
            Window::All => (1, n_its),
            Window::Range { from, to } => (from, to),
        };
        if from == 0 || from > to || to > n_its {
            return Err(Error::usage(format!(
                "analysis window {from}..={to} is empty or outside 1..={n_its}"
            )));
        }
        Ok((from, to))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    #[serde(default)]
    pub window: Window,
    /// Replace samples by `|x − shift|` before computing IATs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_shift: Option<Vec<f64>>,
}

/// Summary metrics over the analysis window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub tde_per_it: f64,
    pub samples_per_s: f64,
    pub mean_iat: f64,
    pub mss: f64,
    pub tde_per_es: f64,
    pub es_per_s: f64,
    pub window_from: u64,
    pub window_to: u64,
    pub degenerate_series: usize,
    pub total_series: usize,
    /// IAT of each marginal, averaged over chains.
    pub marginal_iat: Vec<f64>,
    pub wait_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IatSummary {
    pub mean: f64,
    pub degenerate: usize,
    pub total: usize,
    pub marginal: Vec<f64>,
}

/// Mean IAT over all `d` marginals of all chains, each chain a row-major
/// `n × d` block. Degenerate (constant) series are skipped and counted.
pub fn mean_iat(chains: &[&[f64]], d: usize) -> Result<IatSummary> {
    let mut sum = 0.0;
    let mut used = 0;
    let mut degenerate = 0;
    let mut marginal_sum = vec![0.0; d];
    let mut marginal_n = vec![0usize; d];
    let mut series = Vec::new();
    for chain in chains {
        for l in 0..d {
            series.clear();
            series.extend(chain.iter().skip(l).step_by(d));
            match iat(&series)? {
                Some(t) => {
                    sum += t;
                    used += 1;
                    marginal_sum[l] += t;
                    marginal_n[l] += 1;
                }
                None => degenerate += 1,
            }
        }
    }
    if used == 0 {
        return Err(Error::usage("every series is constant; IAT undefined"));
    }
    Ok(IatSummary {
        mean: sum / used as f64,
        degenerate,
        total: used + degenerate,
        marginal: marginal_sum
            .iter()
            .zip(&marginal_n)
            .map(|(s, &k)| if k > 0 { s / k as f64 } else { f64::NAN })
            .collect(),
    })
}

/// Average distance between consecutive samples, averaged over chains.
pub fn mean_step_size(chains: &[&[f64]], d: usize) -> Result<f64> {
    let mut total = 0.0;
    for chain in chains {
        let n = chain.len() / d;
        if n < 2 {
            return Err(Error::usage("mean step size needs at least two samples"));
        }
        let s: f64 = chain
            .chunks_exact(d)
            .zip(chain.chunks_exact(d).skip(1))
            .map(|(a, b)| distance(a, b))
            .sum();
        total += s / (n - 1) as f64;
    }
    if chains.is_empty() {
        return Err(Error::usage("no chains given"));
    }
    Ok(total / chains.len() as f64)
}

/// Metrics of a run over the configured window.
pub fn compile_report(report: &RunReport, opts: &AnalysisOptions) -> Result<ChainStats> {
    let d = report.d;
    let (from, to) = opts.window.bounds(report.n_its)?;
    if !report.is_complete() {
        return Err(Error::usage("cannot analyse an aborted run"));
    }
    if let Some(s) = &opts.abs_shift {
        if s.len() != d {
            return Err(Error::usage("abs_shift length differs from the target dimension"));
        }
    }
    let p = report.n_chains();
    let n_w = (to - from + 1) as usize;
    let (a, b) = (from as usize, to as usize + 1);

    let mut tde = 0u64;
    let mut time_sum = 0.0;
    let mut wait_sum = 0.0;
    for c in &report.chains {
        tde += c.tde[a..b].iter().map(|&t| t as u64).sum::<u64>();
        let waits: f64 = c
            .waits
            .iter()
            .filter(|w| (from..=to).contains(&w.iteration))
            .map(|w| w.seconds)
            .sum();
        time_sum += c.seconds[a..b].iter().sum::<f64>() + waits;
        wait_sum += waits;
    }
    let nominal = (p * n_w) as f64;
    let tde_per_it = tde as f64 / nominal;
    let mean_time = time_sum / p as f64;
    let samples_per_s = if mean_time > 0.0 { nominal / mean_time } else { f64::INFINITY };

    let windows: Vec<&[f64]> = report.chains.iter().map(|c| &c.samples[a * d..b * d]).collect();
    let mss = mean_step_size(&windows, d)?;
    let summary = match &opts.abs_shift {
        None => mean_iat(&windows, d)?,
        Some(shift) => {
            let shifted: Vec<Vec<f64>> = windows
                .iter()
                .map(|w| {
                    w.chunks_exact(d)
                        .flat_map(|x| x.iter().zip(shift).map(|(v, s)| (v - s).abs()))
                        .collect()
                })
                .collect();
            let refs: Vec<&[f64]> = shifted.iter().map(|v| v.as_slice()).collect();
            mean_iat(&refs, d)?
        }
    };
    Ok(ChainStats {
        tde_per_it,
        samples_per_s,
        mean_iat: summary.mean,
        mss,
        tde_per_es: tde_per_it * summary.mean,
        es_per_s: samples_per_s / summary.mean,
        window_from: from,
        window_to: to,
        degenerate_series: summary.degenerate,
        total_series: summary.total,
        marginal_iat: summary.marginal,
        wait_seconds: wait_sum / p as f64,
    })
}
