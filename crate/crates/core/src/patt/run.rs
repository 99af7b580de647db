use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Barrier, Mutex};
use std::thread;
use std::time::Instant;

use super::config::{ParallelMode, PattConfig, RunOptions, WaitClock};
use super::report::{ChainOutput, RunReport, RunStatus, TransformRecord, Wait};
use crate::error::{Error, Result};
use crate::rng::chain_rng;
use crate::samplers::AttChain;
use crate::targets::LogDensity;
use crate::transform::{AdaptationState, AffineMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Burn,
    Main,
}

/// Iterations `from..to` of one phase; `update` marks a segment ending at an
/// update time.
#[derive(Clone, Copy, Debug)]
struct Segment {
    phase: Phase,
    from: u64,
    to: u64,
    update: Option<u64>,
}

struct Slot<'a> {
    d: usize,
    chain: AttChain<'a>,
    out: ChainOutput,
    finish: Option<Instant>,
    /// Duration of the last segment.
    busy: f64,
    failure: Option<String>,
}

impl Slot<'_> {
    fn run_segment(&mut self, seg: Segment) {
        if self.failure.is_some() {
            return;
        }
        let d = self.d;
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| {
            for i in seg.from..seg.to {
                let t0 = Instant::now();
                let rec = self.chain.transition();
                let secs = t0.elapsed().as_secs_f64();
                let i = i as usize;
                let (samples, tde, seconds) = match seg.phase {
                    Phase::Burn => (&mut self.out.burn_samples, &mut self.out.burn_tde, &mut self.out.burn_seconds),
                    Phase::Main => (&mut self.out.samples, &mut self.out.tde, &mut self.out.seconds),
                };
                samples[i * d..(i + 1) * d].copy_from_slice(self.chain.x());
                tde[i] = rec.tde.min(u32::MAX as u64) as u32;
                seconds[i] = secs;
                if seg.phase == Phase::Main {
                    self.out.completed = i as u64;
                }
            }
            if seg.phase == Phase::Burn {
                self.out.samples[..d].copy_from_slice(self.chain.x());
            }
        }));
        if let Err(payload) = result {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "chain panicked".to_owned());
            self.failure = Some(msg);
        }
        let now = Instant::now();
        self.busy = now.duration_since(started).as_secs_f64();
        self.finish = Some(now);
    }

    /// Rows the accumulators receive at the update ending segment `seg`.
    fn new_rows(&self, seg: &Segment, first: bool, include_burn: bool, n_burn: u64) -> Vec<&[f64]> {
        let d = self.d;
        let mut blocks = Vec::with_capacity(2);
        if first && include_burn && n_burn > 0 {
            blocks.push(&self.out.burn_samples[..n_burn as usize * d]);
        }
        let from = if first { 0 } else { seg.from as usize };
        blocks.push(&self.out.samples[from * d..seg.to as usize * d]);
        blocks
    }
}

/// Runs PATT in the configured parallel mode.
pub fn run_patt(
    cfg: &PattConfig,
    target: &dyn LogDensity,
    inits: &[Vec<f64>],
    opts: RunOptions,
) -> Result<RunReport> {
    match cfg.parallel_mode {
        ParallelMode::Entangled => run_entangled(cfg, target, inits, opts),
        ParallelMode::Naive => run_naive_parallel(cfg, target, inits, opts),
    }
}

struct Plan<'a> {
    d: usize,
    n_burn: u64,
    times: Vec<u64>,
    segments: Vec<Segment>,
    slots: Vec<Mutex<Slot<'a>>>,
    threads: usize,
    clock: WaitClock,
}

fn prepare<'a>(
    cfg: &PattConfig,
    target: &'a dyn LogDensity,
    inits: &[Vec<f64>],
    opts: RunOptions,
) -> Result<Plan<'a>> {
    cfg.validate()?;
    let d = target.dim();
    if inits.len() != cfg.chains {
        return Err(Error::usage(format!(
            "{} initial states given for {} chains",
            inits.len(),
            cfg.chains
        )));
    }
    let threads = opts.resolve_threads(cfg.chains)?;
    let times = cfg.update_times(d)?;
    let n_burn = cfg.burn_in();
    let n_its = cfg.n_its;

    let mut segments = Vec::new();
    if n_burn > 0 {
        segments.push(Segment {
            phase: Phase::Burn,
            from: 1,
            to: n_burn + 1,
            update: None,
        });
    }
    let mut from = 1;
    for &s in &times {
        segments.push(Segment {
            phase: Phase::Main,
            from,
            to: s,
            update: Some(s),
        });
        from = s;
    }
    segments.push(Segment {
        phase: Phase::Main,
        from,
        to: n_its + 1,
        update: None,
    });

    let mut slots = Vec::with_capacity(cfg.chains);
    for (j, x0) in inits.iter().enumerate() {
        let chain = AttChain::new(target, cfg.base.build(d), chain_rng(cfg.seed, j), x0)
            .map_err(|e| Error::usage(format!("chain {j}: {e}")))?;
        let mut out = ChainOutput {
            burn_samples: vec![0.0; (n_burn as usize + 1) * d],
            burn_tde: vec![0; n_burn as usize + 1],
            burn_seconds: vec![0.0; n_burn as usize + 1],
            samples: vec![0.0; (n_its as usize + 1) * d],
            tde: vec![0; n_its as usize + 1],
            seconds: vec![0.0; n_its as usize + 1],
            init_tde: chain.eval_count(),
            ..ChainOutput::default()
        };
        out.burn_samples[..d].copy_from_slice(x0);
        out.samples[..d].copy_from_slice(x0);
        slots.push(Mutex::new(Slot {
            d,
            chain,
            out,
            finish: None,
            busy: 0.0,
            failure: None,
        }));
    }
    Ok(Plan {
        d,
        n_burn,
        times,
        segments,
        slots,
        threads,
        clock: opts.wait_clock,
    })
}

fn first_failure(slots: &[Mutex<Slot<'_>>]) -> Option<(usize, String)> {
    slots.iter().enumerate().find_map(|(j, s)| {
        let s = s.lock().unwrap_or_else(|e| e.into_inner());
        s.failure.clone().map(|m| (j, m))
    })
}

/// Runs every segment on all chains, calling `after` on the coordinator
/// between segments while all workers are parked.
fn execute<'a>(
    slots: &[Mutex<Slot<'a>>],
    segments: &[Segment],
    threads: usize,
    mut after: impl FnMut(&Segment, &[Mutex<Slot<'a>>]),
) -> Option<(usize, String)> {
    let p = slots.len();
    if threads <= 1 {
        for seg in segments {
            for slot in slots {
                slot.lock().unwrap().run_segment(*seg);
            }
            if let Some(f) = first_failure(slots) {
                return Some(f);
            }
            after(seg, slots);
        }
        return None;
    }
    let current: Mutex<Option<Segment>> = Mutex::new(None);
    let start = Barrier::new(threads + 1);
    let end = Barrier::new(threads + 1);
    thread::scope(|scope| {
        for w in 0..threads {
            let (current, start, end) = (&current, &start, &end);
            scope.spawn(move || loop {
                start.wait();
                let Some(seg) = *current.lock().unwrap() else {
                    break;
                };
                for j in (w..p).step_by(threads) {
                    slots[j].lock().unwrap().run_segment(seg);
                }
                end.wait();
            });
        }
        let mut failure = None;
        for seg in segments {
            *current.lock().unwrap() = Some(*seg);
            start.wait();
            end.wait();
            failure = first_failure(slots);
            if failure.is_some() {
                break;
            }
            after(seg, slots);
        }
        *current.lock().unwrap() = None;
        start.wait();
        failure
    })
}

fn finish(plan: Plan<'_>, cfg: &PattConfig, transforms: Vec<TransformRecord>, warnings: Vec<String>, failure: Option<(usize, String)>, started: Instant) -> RunReport {
    let chains = plan
        .slots
        .into_iter()
        .map(|s| {
            let s = s.into_inner().unwrap_or_else(|e| e.into_inner());
            let mut out = s.out;
            out.kernel_stats = s.chain.kernel_stats();
            out
        })
        .collect();
    RunReport {
        d: plan.d,
        n_its: cfg.n_its,
        n_burn: plan.n_burn,
        chains,
        update_times: plan.times,
        transforms,
        warnings,
        status: match failure {
            None => RunStatus::Completed,
            Some((chain, message)) => RunStatus::Aborted { chain, message },
        },
        threads: plan.threads,
        wall_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Entangled PATT: all chains share one map, refitted from the pooled
/// samples at every update time.
pub fn run_entangled(
    cfg: &PattConfig,
    target: &dyn LogDensity,
    inits: &[Vec<f64>],
    opts: RunOptions,
) -> Result<RunReport> {
    let started = Instant::now();
    let plan = prepare(cfg, target, inits, opts)?;
    let mut state = AdaptationState::new(cfg.adjustments, plan.d);
    let mut current = Arc::new(AffineMap::identity(plan.d));
    let mut transforms = Vec::new();
    let mut warnings = Vec::new();
    let mut first = true;

    let failure = execute(&plan.slots, &plan.segments, plan.threads, |seg, slots| {
        let Some(s) = seg.update else { return };
        let update_start = Instant::now();
        let guards: Vec<_> = slots.iter().map(|m| m.lock().unwrap()).collect();
        {
            let blocks: Vec<&[f64]> = guards
                .iter()
                .flat_map(|g| g.new_rows(seg, first, cfg.include_burn_in, plan.n_burn))
                .collect();
            state.incorporate_batch(&blocks);
        }
        first = false;
        let update = state.build();
        let changed = update.map.is_some();
        if let Some(map) = update.map {
            current = Arc::new(map);
        }
        if let Some(w) = &update.warning {
            warnings.push(format!("update at iteration {s}: {w}"));
        }
        transforms.push(TransformRecord {
            update_time: s,
            chain: None,
            changed,
            samples: state.count(),
            map: (*current).clone(),
            warning: update.warning,
        });
        let mut guards = guards;
        for g in guards.iter_mut() {
            g.chain.set_map(current.clone());
        }
        let exit = Instant::now();
        let update_secs = exit.duration_since(update_start).as_secs_f64();
        let slowest = guards.iter().map(|g| g.busy).fold(0.0, f64::max);
        for g in guards.iter_mut() {
            let waited = match plan.clock {
                WaitClock::Parallel => slowest - g.busy + update_secs,
                WaitClock::Wall => g.finish.map_or(0.0, |f| exit.duration_since(f).as_secs_f64()),
            };
            g.out.waits.push(Wait {
                iteration: s,
                seconds: waited,
            });
        }
    });
    Ok(finish(plan, cfg, transforms, warnings, failure, started))
}

/// Naive parallelization: every chain adapts its own map from its own
/// samples, with the same realized schedule, and never waits for others.
pub fn run_naive_parallel(
    cfg: &PattConfig,
    target: &dyn LogDensity,
    inits: &[Vec<f64>],
    opts: RunOptions,
) -> Result<RunReport> {
    let started = Instant::now();
    let plan = prepare(cfg, target, inits, opts)?;
    let p = plan.slots.len();
    let threads = plan.threads;
    let per_chain: Vec<Mutex<(Vec<TransformRecord>, Vec<String>)>> =
        (0..p).map(|_| Mutex::new((Vec::new(), Vec::new()))).collect();

    let run_chain = |j: usize| {
        let mut slot = plan.slots[j].lock().unwrap();
        let mut state = AdaptationState::new(cfg.adjustments, plan.d);
        let mut current = Arc::new(AffineMap::identity(plan.d));
        let mut first = true;
        let mut log = per_chain[j].lock().unwrap();
        for seg in &plan.segments {
            slot.run_segment(*seg);
            if slot.failure.is_some() {
                return;
            }
            let Some(s) = seg.update else { continue };
            let t0 = Instant::now();
            {
                let blocks = slot.new_rows(seg, first, cfg.include_burn_in, plan.n_burn);
                state.incorporate_batch(&blocks);
            }
            first = false;
            let update = state.build();
            let changed = update.map.is_some();
            if let Some(map) = update.map {
                current = Arc::new(map);
            }
            if let Some(w) = &update.warning {
                log.1.push(format!("chain {j}, update at iteration {s}: {w}"));
            }
            log.0.push(TransformRecord {
                update_time: s,
                chain: Some(j),
                changed,
                samples: state.count(),
                map: (*current).clone(),
                warning: update.warning,
            });
            slot.chain.set_map(current.clone());
            slot.out.waits.push(Wait {
                iteration: s,
                seconds: t0.elapsed().as_secs_f64(),
            });
        }
    };

    if threads <= 1 {
        (0..p).for_each(run_chain);
    } else {
        thread::scope(|scope| {
            for w in 0..threads {
                let run_chain = &run_chain;
                scope.spawn(move || (w..p).step_by(threads).for_each(run_chain));
            }
        });
    }
    let failure = first_failure(&plan.slots);
    let mut transforms = Vec::new();
    let mut warnings = Vec::new();
    for m in per_chain {
        let (t, w) = m.into_inner().unwrap();
        transforms.extend(t);
        warnings.extend(w);
    }
    Ok(finish(plan, cfg, transforms, warnings, failure, started))
}
