use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{AnalysisOptions, Window};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::patt::{ParallelMode, PattConfig, ScheduleSpec, DEFAULT_CHAINS};
use crate::samplers::{BaseSamplerConfig, SamplerKind};
use crate::transform::{AdjustmentConfig, Centering, Scaling};

/// A whole experiment: one target, one initialization rule and one or more
/// samplers run against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the CLI `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dump: DumpSpec,
    pub target: TargetSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    pub samplers: Vec<SamplerEntry>,
}

fn default_name() -> String {
    "experiment".to_owned()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields, tag = "mode")]
pub enum DumpSpec {
    /// Every sample of every chain.
    #[default]
    Full,
    /// Every `every`-th main-phase sample.
    Thinned { every: u64 },
    None,
}

/// A length-`d` vector described compactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorSpec {
    Values(Vec<f64>),
    /// Every entry equal.
    Constant(f64),
    /// Every entry equal to `factor · √d`.
    SqrtDim(f64),
    /// `scale · i^power` for `i = 1..=d`.
    Polynomial { scale: f64, power: f64 },
    /// First entry `first`, the rest `rest`.
    Head { first: f64, rest: f64 },
}

impl VectorSpec {
    pub fn resolve(&self, d: usize) -> Result<Vec<f64>> {
        let v = match self {
            VectorSpec::Values(v) => {
                if v.len() != d {
                    return Err(Error::validation(format!(
                        "vector has {} entries, expected {d}",
                        v.len()
                    )));
                }
                v.clone()
            }
            VectorSpec::Constant(c) => vec![*c; d],
            VectorSpec::SqrtDim(f) => vec![f * (d as f64).sqrt(); d],
            VectorSpec::Polynomial { scale, power } => {
                (1..=d).map(|i| scale * (i as f64).powf(*power)).collect()
            }
            VectorSpec::Head { first, rest } => {
                let mut v = vec![*rest; d];
                v[0] = *first;
                v
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("vector entries must be finite"));
        }
        Ok(v)
    }
}

/// A `d × d` symmetric positive-definite matrix described compactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSpec {
    Identity,
    ScaledIdentity(f64),
    Diagonal(VectorSpec),
    Rows(Vec<Vec<f64>>),
    /// `diag(scales) · C · diag(scales)`, `C` with unit diagonal and
    /// `correlation` elsewhere.
    Correlated { scales: VectorSpec, correlation: f64 },
}

impl MatrixSpec {
    pub fn resolve(&self, d: usize) -> Result<Matrix> {
        let m = match self {
            MatrixSpec::Identity => Matrix::identity(d),
            MatrixSpec::ScaledIdentity(s) => {
                if !(*s > 0.0) {
                    return Err(Error::validation("scaled_identity factor must be positive"));
                }
                Matrix::from_diagonal(&vec![*s; d])
            }
            MatrixSpec::Diagonal(v) => {
                let v = v.resolve(d)?;
                if v.iter().any(|x| !(*x > 0.0)) {
                    return Err(Error::validation("diagonal entries must be positive"));
                }
                Matrix::from_diagonal(&v)
            }
            MatrixSpec::Rows(rows) => {
                if rows.len() != d {
                    return Err(Error::validation(format!(
                        "matrix has {} rows, expected {d}",
                        rows.len()
                    )));
                }
                Matrix::from_rows(rows).map_err(|e| Error::validation(e.to_string()))?
            }
            MatrixSpec::Correlated { scales, correlation } => {
                let s = scales.resolve(d)?;
                let lower = if d > 1 { -1.0 / (d as f64 - 1.0) } else { -1.0 };
                if !(*correlation > lower && *correlation < 1.0) {
                    return Err(Error::validation(format!(
                        "correlation must lie in ({lower}, 1) for d = {d}"
                    )));
                }
                Matrix::from_fn(d, |i, j| {
                    let c = if i == j { 1.0 } else { *correlation };
                    s[i] * s[j] * c
                })
            }
        };
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", deny_unknown_fields)]
pub enum TargetSpec {
    Gaussian {
        dim: i64,
        mean: VectorSpec,
        covariance: MatrixSpec,
    },
    /// Multivariate t.
    Mvt {
        dim: i64,
        dof: f64,
        location: VectorSpec,
        scale: MatrixSpec,
    },
    /// Multivariate exponential.
    Mvexp {
        dim: i64,
        location: VectorSpec,
        scale: MatrixSpec,
    },
    /// Posterior under an exponential prior and exponential measurement
    /// noise of varying correlation; the data are synthesized from `data_seed`.
    MvexpPosterior {
        dim: i64,
        #[serde(default = "default_observations")]
        observations: i64,
        #[serde(default)]
        data_seed: u64,
    },
    Mixture {
        dim: i64,
        weights: Vec<f64>,
        means: Vec<VectorSpec>,
        covariances: Vec<MatrixSpec>,
    },
    /// Bayesian logistic regression.
    Blr {
        data: DataSpec,
        #[serde(default)]
        feature_engineering: bool,
        #[serde(default = "default_prior_variance")]
        prior_variance: f64,
    },
}

fn default_observations() -> i64 {
    100
}

fn default_prior_variance() -> f64 {
    crate::targets::DEFAULT_PRIOR_VARIANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", deny_unknown_fields)]
pub enum DataSpec {
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default)]
        binary_columns: Vec<String>,
        /// Also treat every two-valued column as binary.
        #[serde(default)]
        detect_binary: bool,
    },
    Synthetic {
        n_data: i64,
        d_data: i64,
        #[serde(default)]
        data_seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitSpec {
    /// Independent draws from `N(mean, scale² I)`.
    Normal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<VectorSpec>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Exact draws from a Gaussian target.
    TargetDraw,
    /// `N(z̄, scale² I)` around the observation mean of an `mvexp_posterior` target.
    ObservationMean {
        #[serde(default = "one")]
        scale: f64,
    },
    /// Every chain starts at the same point.
    Fixed { point: VectorSpec },
}

fn one() -> f64 {
    1.0
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Normal {
            mean: None,
            scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default)]
    pub window: Window,
    /// Compute IATs on `|x − abs_shift|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_shift: Option<VectorSpec>,
}

impl AnalysisSpec {
    pub fn resolve(&self, d: usize) -> Result<AnalysisOptions> {
        Ok(AnalysisOptions {
            window: self.window,
            abs_shift: self.abs_shift.as_ref().map(|v| v.resolve(d)).transpose()?,
        })
    }
}

/// One sampler to run; flattened form of [`PattConfig`] plus a label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub sampler: SamplerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step_out: Option<i64>,
    #[serde(default)]
    pub centering: Centering,
    #[serde(default)]
    pub scaling: Scaling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
    #[serde(default = "default_chains")]
    pub chains: i64,
    pub n_its: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_burn: Option<i64>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub parallel_mode: ParallelMode,
    #[serde(default)]
    pub update_every_iteration: bool,
    #[serde(default)]
    pub include_burn_in: bool,
}

fn default_chains() -> i64 {
    DEFAULT_CHAINS as i64
}

fn positive(name: &str, v: i64) -> Result<u64> {
    if v <= 0 {
        return Err(Error::validation(format!("`{name}` must be positive, got {v}")));
    }
    Ok(v as u64)
}

fn non_negative(name: &str, v: i64) -> Result<u64> {
    if v < 0 {
        return Err(Error::validation(format!("`{name}` must be non-negative, got {v}")));
    }
    Ok(v as u64)
}

pub(crate) fn dimension(v: i64) -> Result<usize> {
    Ok(positive("dim", v)? as usize)
}

impl SamplerEntry {
    pub fn new(sampler: SamplerKind, adjustments: AdjustmentConfig, n_its: i64) -> Self {
        SamplerEntry {
            label: None,
            sampler,
            w: None,
            sigma: None,
            beta: None,
            max_step_out: None,
            centering: adjustments.centering,
            scaling: adjustments.scaling,
            regularization: adjustments.regularization,
            chains: DEFAULT_CHAINS as i64,
            n_its,
            n_burn: None,
            schedule: ScheduleSpec::Default,
            parallel_mode: ParallelMode::Entangled,
            update_every_iteration: false,
            include_burn_in: false,
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_owned());
        self
    }

    pub fn adjustments(&self) -> AdjustmentConfig {
        AdjustmentConfig {
            centering: self.centering,
            scaling: self.scaling,
            regularization: self.regularization,
        }
    }

    /// `label`, or e.g. `PATT-GPSS Cen+Cov` / `HRUSS` when unset.
    pub fn display_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let adj = self.adjustments();
        if adj.is_none() {
            self.sampler.label().to_owned()
        } else {
            format!("PATT-{} {}", self.sampler.label(), adj.label())
        }
    }

    pub fn to_patt_config(&self, seed: u64) -> Result<PattConfig> {
        let base = BaseSamplerConfig {
            kind: self.sampler,
            w: self.w,
            sigma: self.sigma,
            beta: self.beta,
            max_step_out: self
                .max_step_out
                .map(|v| positive("max_step_out", v).map(|v| v as u32))
                .transpose()?,
        };
        let cfg = PattConfig {
            chains: positive("chains", self.chains)? as usize,
            n_its: positive("n_its", self.n_its)?,
            n_burn: self.n_burn.map(|v| non_negative("n_burn", v)).transpose()?,
            adjustments: self.adjustments(),
            schedule: self.schedule.clone(),
            base,
            parallel_mode: self.parallel_mode,
            update_every_iteration: self.update_every_iteration,
            include_burn_in: self.include_burn_in,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    /// Checks every constraint that does not need the target built.
    pub fn validate(&self) -> Result<()> {
        if self.samplers.is_empty() {
            return Err(Error::validation("at least one `[[samplers]]` entry is required"));
        }
        if let DumpSpec::Thinned { every: 0 } = self.dump {
            return Err(Error::validation("`dump.every` must be positive"));
        }
        let mut labels = std::collections::HashSet::new();
        for s in &self.samplers {
            s.to_patt_config(self.seed)?;
            if !labels.insert(s.display_label()) {
                return Err(Error::validation(format!(
                    "duplicate sampler label `{}`",
                    s.display_label()
                )));
            }
        }
        Ok(())
    }
}

/// Parses and validates a TOML experiment document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::validation(e.message().to_owned() + &span_hint(text, e.span())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

/// Serializes a config back to TOML.
pub fn emit_config(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::usage(format!("cannot serialize config: {e}")))
}
