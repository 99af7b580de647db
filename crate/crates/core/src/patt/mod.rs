//! Parallel ATT chains with scheduled, barrier-synchronized transform
//! updates and an optional initialization burn-in.

mod config;
mod report;
mod run;
mod schedule;

pub use config::{ParallelMode, PattConfig, RunOptions, WaitClock, DEFAULT_CHAINS, THREADS_ENV};
pub use report::{ChainOutput, RunReport, RunStatus, TransformRecord, Wait};
pub use run::{run_entangled, run_naive_parallel, run_patt};
pub use schedule::{default_schedule, ScheduleSpec, UpdateSchedule};
