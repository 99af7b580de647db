//! Experiment plumbing: TOML configs, presets, output files and manifests.

mod build;
mod config;
mod output;
mod presets;

pub use build::{
    blr_pipeline, build_inits, build_target, synthesize_blr_data, synthesize_mvexp_data, BuiltTarget,
};
pub use config::{
    emit_config, parse_config, AnalysisSpec, DataSpec, DumpSpec, ExperimentConfig, InitSpec,
    MatrixSpec, SamplerEntry, TargetSpec, VectorSpec,
};
pub use output::{
    execute_experiment, load_dump, output_dir, report_from_dir, run_experiment, run_from_manifest,
    slugify, write_metrics, ExperimentOutcome, Manifest, ManifestSampler, SamplerResult,
    METRICS_HEADER,
};
pub use presets::{preset_config, Preset, PresetOptions};
