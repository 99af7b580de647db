use std::fmt;
use std::str::FromStr;

use crate::diagnostics::Window;
use crate::error::{Error, Result};
use crate::patt::ParallelMode;
use crate::samplers::SamplerKind;
use crate::transform::{AdjustmentConfig, Centering, Scaling};

use super::config::{
    AnalysisSpec, DataSpec, DumpSpec, ExperimentConfig, InitSpec, MatrixSpec, SamplerEntry,
    TargetSpec, VectorSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    AblationAdjustments,
    AblationParallelUs,
    AblationIbp,
    MvexpInference,
    BlrSynthetic,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::AblationAdjustments,
        Preset::AblationParallelUs,
        Preset::AblationIbp,
        Preset::MvexpInference,
        Preset::BlrSynthetic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::AblationAdjustments => "ablation-adjustments",
            Preset::AblationParallelUs => "ablation-parallel-us",
            Preset::AblationIbp => "ablation-ibp",
            Preset::MvexpInference => "mvexp-inference",
            Preset::BlrSynthetic => "blr-synthetic",
        }
    }

    /// Target dimension used when none is requested. For `blr-synthetic`
    /// this is the number of raw features.
    pub fn default_dim(&self) -> usize {
        match self {
            Preset::AblationAdjustments => 20,
            Preset::AblationParallelUs | Preset::AblationIbp => 30,
            Preset::MvexpInference => 10,
            Preset::BlrSynthetic => 4,
        }
    }

    fn base_iterations(&self) -> f64 {
        match self {
            Preset::AblationAdjustments => 20_000.0,
            Preset::AblationParallelUs => 10_000.0,
            Preset::AblationIbp => 20_000.0,
            Preset::MvexpInference | Preset::BlrSynthetic => 10_000.0,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::validation(format!("unknown preset `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetOptions {
    /// Multiplies every iteration count.
    pub scale: f64,
    pub seed: u64,
    pub dim: Option<usize>,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions {
            scale: 1.0,
            seed: 0,
            dim: None,
        }
    }
}

fn cen_var() -> AdjustmentConfig {
    AdjustmentConfig::new(Centering::Mean, Scaling::Variance)
}

fn cen_cov() -> AdjustmentConfig {
    AdjustmentConfig::new(Centering::Mean, Scaling::Covariance)
}

/// The experiment a preset stands for.
pub fn preset_config(preset: Preset, opts: &PresetOptions) -> Result<ExperimentConfig> {
    if !(opts.scale > 0.0 && opts.scale.is_finite()) {
        return Err(Error::validation("`scale` must be positive"));
    }
    let d = opts.dim.unwrap_or(preset.default_dim());
    if d == 0 {
        return Err(Error::validation("`dim` must be positive"));
    }
    let n = ((preset.base_iterations() * opts.scale).round() as i64).max(200);
    let di = d as i64;
    let mut cfg = ExperimentConfig {
        name: preset.name().to_owned(),
        seed: opts.seed,
        out: None,
        dump: DumpSpec::Full,
        target: TargetSpec::Gaussian {
            dim: di,
            mean: VectorSpec::Constant(0.0),
            covariance: MatrixSpec::Identity,
        },
        init: InitSpec::default(),
        analysis: AnalysisSpec::default(),
        samplers: Vec::new(),
    };
    match preset {
        Preset::AblationAdjustments => {
            cfg.target = TargetSpec::Mvt {
                dim: di,
                dof: 10.0,
                location: VectorSpec::SqrtDim(1.0),
                scale: MatrixSpec::Correlated {
                    scales: VectorSpec::Polynomial { scale: 1.0, power: 0.5 },
                    correlation: 0.5,
                },
            };
            cfg.init = InitSpec::Normal {
                mean: None,
                scale: d as f64,
            };
            cfg.analysis.abs_shift = Some(VectorSpec::SqrtDim(1.0));
            let arms = [
                ("Plain", AdjustmentConfig::default()),
                ("Cen", AdjustmentConfig::new(Centering::Mean, Scaling::None)),
                ("Var", AdjustmentConfig::new(Centering::None, Scaling::Variance)),
                ("Cov", AdjustmentConfig::new(Centering::None, Scaling::Covariance)),
                ("Cen+Var", cen_var()),
                ("Cen+Cov", cen_cov()),
            ];
            for (label, adj) in arms {
                let mut s = SamplerEntry::new(SamplerKind::Gpss, adj, n).with_label(label);
                s.n_burn = Some(n / 5);
                cfg.samplers.push(s);
            }
        }
        Preset::AblationParallelUs => {
            cfg.target = TargetSpec::Gaussian {
                dim: di,
                mean: VectorSpec::Polynomial { scale: 1.0, power: 1.0 },
                covariance: MatrixSpec::Diagonal(VectorSpec::Polynomial { scale: 1.0, power: 2.0 }),
            };
            cfg.init = InitSpec::TargetDraw;
            cfg.analysis.window = Window::All;
            let arms = [
                ("NP", ParallelMode::Naive, true),
                ("NP+US", ParallelMode::Naive, false),
                ("EP", ParallelMode::Entangled, true),
                ("EP+US", ParallelMode::Entangled, false),
            ];
            for (label, mode, every) in arms {
                let mut s = SamplerEntry::new(SamplerKind::Gpss, cen_var(), n).with_label(label);
                s.n_burn = Some(0);
                s.parallel_mode = mode;
                s.update_every_iteration = every;
                cfg.samplers.push(s);
            }
        }
        Preset::AblationIbp => {
            cfg.target = TargetSpec::Gaussian {
                dim: di,
                mean: VectorSpec::Head {
                    first: 2.0 * d as f64,
                    rest: 0.0,
                },
                covariance: MatrixSpec::Correlated {
                    scales: VectorSpec::Constant(1.0),
                    correlation: 0.75,
                },
            };
            cfg.analysis.abs_shift = Some(VectorSpec::Constant(0.0));
            let mut without = SamplerEntry::new(SamplerKind::Gpss, cen_cov(), n).with_label("without IBP");
            without.n_burn = Some(0);
            let burn = n / 10;
            let mut with = SamplerEntry::new(SamplerKind::Gpss, cen_cov(), n - burn).with_label("with IBP");
            with.n_burn = Some(burn);
            cfg.samplers = vec![without, with];
        }
        Preset::MvexpInference => {
            cfg.target = TargetSpec::MvexpPosterior {
                dim: di,
                observations: 100,
                data_seed: opts.seed,
            };
            cfg.init = InitSpec::ObservationMean { scale: 1.0 };
            cfg.samplers = vec![
                SamplerEntry::new(SamplerKind::Gpss, cen_cov(), n),
                SamplerEntry::new(SamplerKind::GpEss, cen_cov(), n),
                SamplerEntry::new(SamplerKind::Hruss, cen_cov(), n),
                SamplerEntry::new(SamplerKind::Adarwm, AdjustmentConfig::default(), n),
            ];
        }
        Preset::BlrSynthetic => {
            cfg.target = TargetSpec::Blr {
                data: DataSpec::Synthetic {
                    n_data: 500.max(2 * di),
                    d_data: di,
                    data_seed: opts.seed,
                },
                feature_engineering: true,
                prior_variance: crate::targets::DEFAULT_PRIOR_VARIANCE,
            };
            cfg.samplers = vec![
                SamplerEntry::new(SamplerKind::Gpss, cen_cov(), n),
                SamplerEntry::new(SamplerKind::GpEss, cen_cov(), n),
                SamplerEntry::new(SamplerKind::Adarwm, AdjustmentConfig::default(), n),
            ];
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::build::build_target;
    use crate::harness::config::{emit_config, parse_config};

    #[test]
    fn row_sets() {
        let labels = |p: Preset| -> Vec<String> {
            preset_config(p, &PresetOptions::default())
                .unwrap()
                .samplers
                .iter()
                .map(|s| s.display_label())
                .collect()
        };
        assert_eq!(labels(Preset::AblationAdjustments), ["Plain", "Cen", "Var", "Cov", "Cen+Var", "Cen+Cov"]);
        assert_eq!(labels(Preset::AblationParallelUs), ["NP", "NP+US", "EP", "EP+US"]);
        assert_eq!(labels(Preset::AblationIbp), ["without IBP", "with IBP"]);
    }

    #[test]
    fn presets_build_and_round_trip() {
        for p in Preset::ALL {
            let cfg = preset_config(p, &PresetOptions { scale: 0.1, seed: 3, dim: None }).unwrap();
            assert_eq!(parse_config(&emit_config(&cfg).unwrap()).unwrap(), cfg);
            let built = build_target(&cfg.target).unwrap();
            let expected = match p {
                Preset::BlrSynthetic => 15,
                _ => p.default_dim(),
            };
            assert_eq!(built.dim(), expected, "{p}");
            assert!(built.dim() <= 30);
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("nope".parse::<Preset>().is_err());
    }

    #[test]
    fn ibp_arms_share_total_iterations() {
        let cfg = preset_config(Preset::AblationIbp, &PresetOptions::default()).unwrap();
        let total = |s: &SamplerEntry| s.n_its + s.n_burn.unwrap_or(0);
        assert_eq!(total(&cfg.samplers[0]), total(&cfg.samplers[1]));
        assert_eq!(cfg.samplers[1].n_burn, Some(2000));
    }
}
