//! Log-density targets and the evaluation-counting wrapper.
//!
//! All densities are handled in log space. An evaluator may return `-∞` for
//! points of zero density; NaN and `+∞` are treated as zero density as well.

mod blr;
mod dataset;
mod families;

use std::cell::RefCell;

pub use blr::{BlrTarget, DEFAULT_PRIOR_VARIANCE};
pub use dataset::{
    add_intercept, detect_binary, feature_engineer, ingest_csv, ingest_csv_reader, normalize,
    two_valued_continuous_features, Dataset, FeatureKind,
};
pub use families::{
    FnTarget, GaussianMixture, GaussianTarget, MultivariateExponentialTarget, MultivariateTTarget,
    MvExpPosterior,
};

use crate::error::{Error, Result};

/// An unnormalized log-density on `R^d`.
///
/// Implementations must be callable concurrently from many chains.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// `log ρ(x)`. Callers guarantee `x.len() == self.dim()`.
    fn log_density(&self, x: &[f64]) -> f64;
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
}

impl<T: LogDensity + ?Sized> LogDensity for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
}

impl<T: LogDensity + ?Sized> LogDensity for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
}

#[inline]
pub(crate) fn sanitize(v: f64) -> f64 {
    if v.is_nan() || v == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Per-chain view of a target that counts target density evaluations (TDE).
///
/// Counters live with the chain, so there is no shared mutable state on the
/// hot path; run reports sum them afterwards.
pub struct CountingTarget<'a> {
    target: &'a dyn LogDensity,
    evals: u64,
}

impl<'a> CountingTarget<'a> {
    pub fn new(target: &'a dyn LogDensity) -> Self {
        CountingTarget { target, evals: 0 }
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn eval_count(&self) -> u64 {
        self.evals
    }

    /// Checked evaluation: rejects vectors of the wrong length or with
    /// non-finite entries.
    pub fn log_density(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.target.dim() {
            return Err(Error::usage(format!(
                "expected a vector of length {}, got {}",
                self.target.dim(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("log_density input must be finite"));
        }
        Ok(self.eval(x))
    }

    #[inline]
    pub(crate) fn eval(&mut self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.target.dim());
        self.evals += 1;
        sanitize(self.target.log_density(x))
    }

    /// Evaluation that is not counted, for consistency checks.
    #[cfg(test)]
    pub(crate) fn peek(&self, x: &[f64]) -> f64 {
        sanitize(self.target.log_density(x))
    }
}

thread_local! {
    static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

/// Runs `f` with a thread-local scratch buffer of length `n`.
pub(crate) fn with_scratch<R>(n: usize, f: impl FnOnce(&mut [f64]) -> R) -> R {
    SCRATCH.with(|cell| match cell.try_borrow_mut() {
        Ok(mut buf) => {
            if buf.len() < n {
                buf.resize(n, 0.0);
            }
            f(&mut buf[..n])
        }
        // Re-entrant use (a target built from targets); fall back to a fresh buffer.
        Err(_) => f(&mut vec![0.0; n]),
    })
}
