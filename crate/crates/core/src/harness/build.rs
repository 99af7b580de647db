use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::rng::{data_rng, init_rng, standard_normal};
use crate::targets::{
    add_intercept, detect_binary, feature_engineer, ingest_csv, normalize, BlrTarget, Dataset,
    FeatureKind, GaussianMixture, GaussianTarget, LogDensity, MultivariateExponentialTarget,
    MultivariateTTarget, MvExpPosterior,
};

use super::config::{dimension, DataSpec, InitSpec, TargetSpec};

/// A constructed target plus what initialization rules may need from it.
pub struct BuiltTarget {
    pub target: Box<dyn LogDensity>,
    /// Set for Gaussian targets; enables exact initial draws.
    pub gaussian: Option<GaussianTarget>,
    /// Set for `mvexp_posterior` targets.
    pub observation_mean: Option<Vec<f64>>,
    /// Informational messages, such as auto-detected binary columns.
    pub notes: Vec<String>,
}

impl BuiltTarget {
    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    fn plain(target: Box<dyn LogDensity>) -> Self {
        BuiltTarget {
            target,
            gaussian: None,
            observation_mean: None,
            notes: Vec::new(),
        }
    }
}

fn invalid(e: Error) -> Error {
    match e {
        Error::Usage(m) => Error::Validation(m),
        e => e,
    }
}

pub fn build_target(spec: &TargetSpec) -> Result<BuiltTarget> {
    match spec {
        TargetSpec::Gaussian {
            dim,
            mean,
            covariance,
        } => {
            let d = dimension(*dim)?;
            let g = GaussianTarget::new(mean.resolve(d)?, &covariance.resolve(d)?).map_err(invalid)?;
            Ok(BuiltTarget {
                gaussian: Some(g.clone()),
                ..BuiltTarget::plain(Box::new(g))
            })
        }
        TargetSpec::Mvt {
            dim,
            dof,
            location,
            scale,
        } => {
            let d = dimension(*dim)?;
            if !(*dof > 0.0) {
                return Err(Error::validation("`dof` must be positive"));
            }
            let t = MultivariateTTarget::new(*dof, location.resolve(d)?, &scale.resolve(d)?).map_err(invalid)?;
            Ok(BuiltTarget::plain(Box::new(t)))
        }
        TargetSpec::Mvexp {
            dim,
            location,
            scale,
        } => {
            let d = dimension(*dim)?;
            let t = MultivariateExponentialTarget::new(location.resolve(d)?, &scale.resolve(d)?).map_err(invalid)?;
            Ok(BuiltTarget::plain(Box::new(t)))
        }
        TargetSpec::MvexpPosterior {
            dim,
            observations,
            data_seed,
        } => {
            let d = dimension(*dim)?;
            if *observations <= 0 {
                return Err(Error::validation("`observations` must be positive"));
            }
            let (z, covs) = synthesize_mvexp_data(d, *observations as usize, *data_seed);
            let mean = (0..d)
                .map(|i| z.iter().map(|zm| zm[i]).sum::<f64>() / z.len() as f64)
                .collect();
            let t = MvExpPosterior::new(z, &covs)?;
            Ok(BuiltTarget {
                observation_mean: Some(mean),
                ..BuiltTarget::plain(Box::new(t))
            })
        }
        TargetSpec::Mixture {
            dim,
            weights,
            means,
            covariances,
        } => {
            let d = dimension(*dim)?;
            if means.len() != weights.len() || covariances.len() != weights.len() {
                return Err(Error::validation("mixture needs one mean and covariance per weight"));
            }
            let comps = means
                .iter()
                .zip(covariances)
                .map(|(m, c)| GaussianTarget::new(m.resolve(d)?, &c.resolve(d)?).map_err(invalid))
                .collect::<Result<Vec<_>>>()?;
            let t = GaussianMixture::new(weights, comps).map_err(invalid)?;
            Ok(BuiltTarget::plain(Box::new(t)))
        }
        TargetSpec::Blr {
            data,
            feature_engineering,
            prior_variance,
        } => {
            let mut notes = Vec::new();
            let raw = match data {
                DataSpec::Csv {
                    path,
                    label_column,
                    binary_columns,
                    detect_binary: detect,
                } => {
                    let ds = ingest_csv(path, label_column, binary_columns)?;
                    if *detect {
                        let (ds, flagged) = detect_binary(&ds);
                        if !flagged.is_empty() {
                            notes.push(format!("treated as binary: {}", flagged.join(", ")));
                        }
                        ds
                    } else {
                        ds
                    }
                }
                DataSpec::Synthetic {
                    n_data,
                    d_data,
                    data_seed,
                } => {
                    if *d_data < 1 || *n_data <= *d_data {
                        return Err(Error::validation("synthetic data needs n_data > d_data >= 1"));
                    }
                    synthesize_blr_data(*n_data as usize, *d_data as usize, *data_seed)
                }
            };
            let ds = blr_pipeline(&raw, *feature_engineering)?;
            let t = BlrTarget::from_dataset(&ds, *prior_variance).map_err(invalid)?;
            Ok(BuiltTarget {
                notes,
                ..BuiltTarget::plain(Box::new(t))
            })
        }
    }
}

/// Normalization followed by feature engineering or an intercept column.
pub fn blr_pipeline(raw: &Dataset, feature_engineering: bool) -> Result<Dataset> {
    let ds = normalize(raw)?;
    if feature_engineering {
        Ok(feature_engineer(&ds))
    } else {
        add_intercept(&ds)
    }
}

/// Standard normal features, a random weight vector and logistic labels.
pub fn synthesize_blr_data(n_data: usize, d_data: usize, seed: u64) -> Dataset {
    let mut rng = data_rng(seed);
    let scale = 2.0 / (d_data as f64).sqrt();
    let weights: Vec<f64> = (0..d_data).map(|_| scale * standard_normal(&mut rng)).collect();
    let mut features = Vec::with_capacity(n_data * d_data);
    let mut labels = Vec::with_capacity(n_data);
    for _ in 0..n_data {
        let row: Vec<f64> = (0..d_data).map(|_| standard_normal(&mut rng)).collect();
        let eta: f64 = row.iter().zip(&weights).map(|(a, w)| a * w).sum();
        let p = 1.0 / (1.0 + (-eta).exp());
        labels.push(if crate::rng::open_unit(&mut rng) < p { 1.0 } else { -1.0 });
        features.extend(row);
    }
    let names = (1..=d_data).map(|j| format!("x{j}")).collect();
    Dataset::new(names, vec![FeatureKind::Continuous; d_data], features, labels)
        .expect("synthetic dataset is well formed")
}

/// Measurements `z_m = x + ε_m`, `m = 1..=n`, with `x ~ N(0, d I)` and
/// Gaussian stand-ins `ε_m ~ N(0, Σ^(m))` for the exponential noise.
pub fn synthesize_mvexp_data(d: usize, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Matrix>) {
    let mut rng = data_rng(seed);
    let sd = (d as f64).sqrt();
    let truth: Vec<f64> = (0..d).map(|_| sd * standard_normal(&mut rng)).collect();
    let mut obs = Vec::with_capacity(n);
    let mut covs = Vec::with_capacity(n);
    let mut noise = vec![0.0; d];
    for m in 1..=n {
        let cov = MvExpPosterior::noise_covariance(m, d);
        let l = cholesky(&cov).expect("noise covariance is positive definite");
        let z: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        l.mul_vec(&z, &mut noise);
        obs.push(truth.iter().zip(&noise).map(|(a, b)| a + b).collect());
        covs.push(cov);
    }
    (obs, covs)
}

/// One initial state per chain. Chain `j` always uses the same stream, so
/// samplers with equally many chains share their initial states.
pub fn build_inits(spec: &InitSpec, built: &BuiltTarget, chains: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let d = built.dim();
    let normal_around = |center: &[f64], scale: f64| -> Result<Vec<Vec<f64>>> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::validation("init `scale` must be non-negative"));
        }
        Ok((0..chains)
            .map(|j| {
                let mut rng = init_rng(seed, j);
                center.iter().map(|c| c + scale * standard_normal(&mut rng)).collect()
            })
            .collect())
    };
    match spec {
        InitSpec::Normal { mean, scale } => {
            let center = match mean {
                Some(m) => m.resolve(d)?,
                None => vec![0.0; d],
            };
            normal_around(&center, *scale)
        }
        InitSpec::TargetDraw => {
            let g = built
                .gaussian
                .as_ref()
                .ok_or_else(|| Error::validation("`target_draw` initialization needs a Gaussian target"))?;
            Ok((0..chains).map(|j| g.sample(&mut init_rng(seed, j))).collect())
        }
        InitSpec::ObservationMean { scale } => {
            let m = built.observation_mean.as_ref().ok_or_else(|| {
                Error::validation("`observation_mean` initialization needs an mvexp_posterior target")
            })?;
            normal_around(m, *scale)
        }
        InitSpec::Fixed { point } => Ok(vec![point.resolve(d)?; chains]),
    }
}
