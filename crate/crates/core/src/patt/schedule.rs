use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{AdjustmentConfig, Centering, Scaling};

/// Update-schedule choice as written in a config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// Chosen from the adjustment types, `d` and `p`.
    #[default]
    Default,
    /// `s_k = a k + b`.
    Linear { a: u64, b: u64 },
    /// `s_k = factor · p · k`.
    ScaledLinear { factor: u64 },
    /// `s_k = ⌊a^{k+b}⌋`.
    Exponential { a: f64, b: f64 },
    Explicit { times: Vec<u64> },
    /// Never update.
    Empty,
    /// `s_k = k + 1`.
    EveryIteration,
}

/// A resolved, strictly increasing sequence of update times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateSchedule {
    Linear { a: u64, b: u64 },
    Exponential { a: f64, b: f64 },
    Explicit(Vec<u64>),
    Empty,
}

impl ScheduleSpec {
    pub fn resolve(&self, adjustments: &AdjustmentConfig, d: usize, p: usize) -> Result<UpdateSchedule> {
        let s = match self {
            ScheduleSpec::Default => default_schedule(adjustments, d, p),
            ScheduleSpec::Linear { a, b } => UpdateSchedule::Linear { a: *a, b: *b },
            ScheduleSpec::ScaledLinear { factor } => UpdateSchedule::Linear {
                a: factor * p as u64,
                b: 0,
            },
            ScheduleSpec::Exponential { a, b } => UpdateSchedule::Exponential { a: *a, b: *b },
            ScheduleSpec::Explicit { times } => UpdateSchedule::Explicit(times.clone()),
            ScheduleSpec::Empty => UpdateSchedule::Empty,
            ScheduleSpec::EveryIteration => UpdateSchedule::Linear { a: 1, b: 1 },
        };
        s.validate()?;
        Ok(s)
    }
}

/// Median centering: `⌊1.5^{k+16}⌋`; covariance scaling: `max(d, 25)·p·k`;
/// anything else: `25·p·k`.
pub fn default_schedule(adjustments: &AdjustmentConfig, d: usize, p: usize) -> UpdateSchedule {
    if adjustments.centering == Centering::Median {
        UpdateSchedule::Exponential { a: 1.5, b: 16.0 }
    } else if adjustments.scaling == Scaling::Covariance {
        UpdateSchedule::Linear {
            a: (d.max(25) * p) as u64,
            b: 0,
        }
    } else {
        UpdateSchedule::Linear {
            a: (25 * p) as u64,
            b: 0,
        }
    }
}

/// `⌊(3/2)^n⌋` in exact integer arithmetic while `3^n` fits in a `u128`.
fn floor_three_halves_pow(n: u32) -> Option<u128> {
    let num = 3u128.checked_pow(n)?;
    Some(num >> n)
}

impl UpdateSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            UpdateSchedule::Linear { a, b } => {
                if *a == 0 || a + b < 2 {
                    return Err(Error::validation(
                        "linear schedule needs a ≥ 1 and a + b ≥ 2 (first update time at least 2)",
                    ));
                }
            }
            UpdateSchedule::Exponential { a, b } => {
                if !(*a > 1.0 && a.is_finite()) || !(*b >= 0.0 && b.is_finite()) {
                    return Err(Error::validation("exponential schedule needs a > 1 and b ≥ 0"));
                }
            }
            UpdateSchedule::Explicit(times) => {
                if times.first().is_some_and(|&s| s < 2) {
                    return Err(Error::validation("first update time must be at least 2"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::validation("update times must be strictly increasing"));
                }
            }
            UpdateSchedule::Empty => {}
        }
        Ok(())
    }

    /// All update times `≤ limit`, in increasing order.
    pub fn times_up_to(&self, limit: u64) -> Vec<u64> {
        let mut out = Vec::new();
        match self {
            UpdateSchedule::Linear { a, b } => {
                let mut s = a + b;
                while s <= limit {
                    out.push(s);
                    s += a;
                }
            }
            UpdateSchedule::Exponential { a, b } => {
                let exact = *a == 1.5 && b.fract() == 0.0;
                for k in 1u32.. {
                    let v = if exact {
                        match floor_three_halves_pow(k + *b as u32) {
                            Some(v) => v.min(u64::MAX as u128) as u64,
                            None => u64::MAX,
                        }
                    } else {
                        let v = a.powf(k as f64 + b).floor();
                        if v >= u64::MAX as f64 {
                            u64::MAX
                        } else {
                            v as u64
                        }
                    };
                    if v > limit {
                        break;
                    }
                    // Keep the sequence strictly increasing for a close to 1.
                    if v >= 2 && out.last().is_none_or(|&last| v > last) {
                        out.push(v);
                    }
                }
            }
            UpdateSchedule::Explicit(times) => {
                out.extend(times.iter().copied().filter(|&s| s <= limit));
            }
            UpdateSchedule::Empty => {}
        }
        out
    }

    pub fn first_times(&self, k: usize) -> Vec<u64> {
        let mut limit = 1024u64;
        loop {
            let t = self.times_up_to(limit);
            if t.len() >= k || limit == u64::MAX {
                return t.into_iter().take(k).collect();
            }
            limit = limit.saturating_mul(16);
            if matches!(self, UpdateSchedule::Explicit(_) | UpdateSchedule::Empty) {
                return self.times_up_to(u64::MAX).into_iter().take(k).collect();
            }
        }
    }
}
