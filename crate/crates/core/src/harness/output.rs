use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{compile_report, ChainStats};
use crate::error::{Error, Result};
use crate::patt::{run_patt, ChainOutput, RunOptions, RunReport, RunStatus, TransformRecord, Wait};
use crate::samplers::KernelStats;

use super::build::{build_inits, build_target};
use super::config::{emit_config, parse_config, DumpSpec, ExperimentConfig};

pub const METRICS_HEADER: [&str; 7] = [
    "sampler",
    "tde_per_it",
    "samples_per_s",
    "mean_iat",
    "mss",
    "tde_per_es",
    "es_per_s",
];

/// Outcome of one sampler of an experiment.
pub struct SamplerResult {
    pub label: String,
    pub slug: String,
    pub report: RunReport,
    /// `None` when the run aborted or its analysis failed.
    pub stats: Option<ChainStats>,
    pub error: Option<String>,
}

pub struct ExperimentOutcome {
    pub results: Vec<SamplerResult>,
    pub notes: Vec<String>,
}

impl ExperimentOutcome {
    pub fn is_complete(&self) -> bool {
        self.results.iter().all(|r| r.error.is_none())
    }

    pub fn get(&self, label: &str) -> Option<&SamplerResult> {
        self.results.iter().find(|r| r.label == label)
    }
}

pub fn slugify(label: &str) -> String {
    let mut s = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if c == '+' {
            s.push_str("-plus-");
        } else if !s.ends_with('-') {
            s.push('-');
        }
    }
    let s = s.replace("--", "-");
    s.trim_matches('-').to_owned()
}

/// Builds the target and runs every sampler in memory.
pub fn execute_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let built = build_target(&cfg.target)?;
    let d = built.dim();
    let analysis = cfg.analysis.resolve(d)?;
    let mut results = Vec::with_capacity(cfg.samplers.len());
    for entry in &cfg.samplers {
        let patt = entry.to_patt_config(cfg.seed)?;
        let inits = build_inits(&cfg.init, &built, patt.chains, cfg.seed)?;
        let report = run_patt(&patt, built.target.as_ref(), &inits, opts)?;
        let label = entry.display_label();
        let (stats, error) = match &report.status {
            RunStatus::Aborted { chain, message } => {
                (None, Some(format!("chain {chain} panicked: {message}")))
            }
            RunStatus::Completed => match compile_report(&report, &analysis) {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(format!("analysis failed: {e}"))),
            },
        };
        results.push(SamplerResult {
            slug: slugify(&label),
            label,
            report,
            stats,
            error,
        });
    }
    Ok(ExperimentOutcome {
        results,
        notes: built.notes,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestSampler {
    pub label: String,
    pub slug: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub name: String,
    pub seed: u64,
    /// SHA-256 of `config`.
    pub config_hash: String,
    pub complete: bool,
    pub samplers: Vec<ManifestSampler>,
    pub notes: Vec<String>,
    /// The exact config document the run was produced from.
    pub config: String,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::validation(format!("bad manifest: {e}")))
    }

    /// The embedded config, after checking it against the recorded hash.
    pub fn config(&self) -> Result<ExperimentConfig> {
        if hash_hex(&self.config) != self.config_hash {
            return Err(Error::validation("manifest config does not match its hash"));
        }
        parse_config(&self.config)
    }
}

fn hash_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Runs an experiment and writes every output file below `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path, opts: RunOptions) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut stored = cfg.clone();
    stored.out = None;
    let text = emit_config(&stored)?;
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, &text).map_err(|e| Error::io(&cfg_path, e))?;

    let outcome = execute_experiment(cfg, opts)?;
    write_outputs(cfg, &outcome, dir)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        name: cfg.name.clone(),
        seed: cfg.seed,
        config_hash: hash_hex(&text),
        complete: outcome.is_complete(),
        samplers: outcome
            .results
            .iter()
            .map(|r| ManifestSampler {
                label: r.label.clone(),
                slug: r.slug.clone(),
                status: r.report.status.clone(),
                error: r.error.clone(),
            })
            .collect(),
        notes: outcome.notes.clone(),
        config: text,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(outcome)
}

/// Re-runs the experiment recorded in a manifest.
pub fn run_from_manifest(manifest: &Path, dir: &Path, opts: RunOptions) -> Result<ExperimentOutcome> {
    let cfg = Manifest::read(manifest)?.config()?;
    run_experiment(&cfg, dir, opts)
}

fn write_outputs(cfg: &ExperimentConfig, outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    for r in &outcome.results {
        let sub = dir.join(&r.slug);
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        write_samples(&r.report, cfg.dump, &sub.join("samples.csv"))?;
        write_transitions(&r.report, &sub.join("transitions.csv"))?;
        let path = sub.join("transforms.json");
        let json = serde_json::to_string_pretty(&r.report.transforms).expect("transforms serialize");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    let rows: Vec<(String, ChainStats)> = outcome
        .results
        .iter()
        .filter_map(|r| r.stats.clone().map(|s| (r.label.clone(), s)))
        .collect();
    write_metrics(&rows, &dir.join("metrics.csv"))?;

    let summary: Vec<SamplerSummary> = outcome.results.iter().map(SamplerSummary::from).collect();
    let path = dir.join("report.json");
    let json = serde_json::to_string_pretty(&summary).expect("report serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Per-sampler entry of `report.json`.
#[derive(Serialize)]
struct SamplerSummary<'a> {
    label: &'a str,
    slug: &'a str,
    status: &'a RunStatus,
    error: Option<&'a str>,
    stats: Option<&'a ChainStats>,
    d: usize,
    n_its: u64,
    n_burn: u64,
    threads: usize,
    wall_seconds: f64,
    total_tde: u64,
    update_times: &'a [u64],
    warnings: &'a [String],
    chains: Vec<ChainSummary<'a>>,
}

#[derive(Serialize)]
struct ChainSummary<'a> {
    completed: u64,
    init_tde: u64,
    kernel_stats: KernelStats,
    waits: &'a [Wait],
}

impl<'a> From<&'a SamplerResult> for SamplerSummary<'a> {
    fn from(r: &'a SamplerResult) -> Self {
        let rep = &r.report;
        SamplerSummary {
            label: &r.label,
            slug: &r.slug,
            status: &rep.status,
            error: r.error.as_deref(),
            stats: r.stats.as_ref(),
            d: rep.d,
            n_its: rep.n_its,
            n_burn: rep.n_burn,
            threads: rep.threads,
            wall_seconds: rep.wall_seconds,
            total_tde: rep.total_tde(),
            update_times: &rep.update_times,
            warnings: &rep.warnings,
            chains: rep
                .chains
                .iter()
                .map(|c| ChainSummary {
                    completed: c.completed,
                    init_tde: c.init_tde,
                    kernel_stats: c.kernel_stats,
                    waits: &c.waits,
                })
                .collect(),
        }
    }
}

pub fn write_metrics(rows: &[(String, ChainStats)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e.into(),
    })?;
    let err = |e: csv::Error| Error::Io {
        path: path.to_owned(),
        source: e.into(),
    };
    w.write_record(METRICS_HEADER).map_err(err)?;
    for (label, s) in rows {
        let vals = [s.tde_per_it, s.samples_per_s, s.mean_iat, s.mss, s.tde_per_es, s.es_per_s];
        let mut rec = vec![label.clone()];
        rec.extend(vals.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(io_at(path))
}

fn write_samples(report: &RunReport, dump: DumpSpec, path: &Path) -> Result<()> {
    let every = match dump {
        DumpSpec::None => return Ok(()),
        DumpSpec::Full => 1,
        DumpSpec::Thinned { every } => every,
    };
    let d = report.d;
    let mut w = create(path)?;
    let io = io_at(path);
    write!(w, "phase,iteration,chain").map_err(&io)?;
    for l in 1..=d {
        write!(w, ",x{l}").map_err(&io)?;
    }
    writeln!(w).map_err(&io)?;
    for (j, c) in report.chains.iter().enumerate() {
        if every == 1 {
            for i in 0..=report.n_burn as usize {
                write_row(&mut w, "burn", i, j, &c.burn_samples[i * d..(i + 1) * d]).map_err(&io)?;
            }
        }
        for i in (0..=report.n_its as usize).step_by(every as usize) {
            write_row(&mut w, "main", i, j, &c.samples[i * d..(i + 1) * d]).map_err(&io)?;
        }
    }
    w.flush().map_err(&io)
}

fn write_row(w: &mut impl Write, phase: &str, i: usize, j: usize, x: &[f64]) -> std::io::Result<()> {
    write!(w, "{phase},{i},{j}")?;
    for v in x {
        write!(w, ",{v}")?;
    }
    writeln!(w)
}

fn write_transitions(report: &RunReport, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = io_at(path);
    writeln!(w, "phase,iteration,chain,tde,seconds,wait_seconds").map_err(&io)?;
    for (j, c) in report.chains.iter().enumerate() {
        for i in 1..=report.n_burn as usize {
            writeln!(w, "burn,{i},{j},{},{},0", c.burn_tde[i], c.burn_seconds[i]).map_err(&io)?;
        }
        let mut waits = c.waits.iter().peekable();
        for i in 1..=report.n_its as usize {
            let mut wait = 0.0;
            while let Some(x) = waits.next_if(|x| x.iteration as usize == i) {
                wait += x.seconds;
            }
            writeln!(w, "main,{i},{j},{},{},{wait}", c.tde[i], c.seconds[i]).map_err(&io)?;
        }
    }
    w.flush().map_err(&io)
}

fn read_csv(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(f))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path, row: usize) -> Result<T> {
    rec.get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Ingestion {
            row,
            column: format!("{} (field {i})", path.display()),
            message: "missing or malformed value".into(),
        })
}

/// Rebuilds a run report from a sampler's dump directory.
pub fn load_dump(sub: &Path) -> Result<RunReport> {
    let transforms: Vec<TransformRecord> = {
        let path = sub.join("transforms.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::validation(format!("{}: {e}", path.display())))?
    };

    let spath = sub.join("samples.csv");
    let mut rdr = read_csv(&spath)?;
    let d = rdr.headers().map_err(|e| Error::io(&spath, e.into()))?.len() - 3;
    let mut burn: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut main: Vec<Vec<Vec<f64>>> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::io(&spath, e.into()))?;
        let j: usize = field(&rec, 2, &spath, row + 1)?;
        let x = (0..d).map(|l| field(&rec, 3 + l, &spath, row + 1)).collect::<Result<Vec<f64>>>()?;
        let target = if &rec[0] == "burn" { &mut burn } else { &mut main };
        if target.len() <= j {
            target.resize(j + 1, Vec::new());
        }
        target[j].push(x);
    }
    let p = main.len();
    if p == 0 {
        return Err(Error::validation(format!("{} holds no samples", spath.display())));
    }
    let n_its = main[0].len() as u64 - 1;
    let n_burn = burn.first().map_or(0, |b| b.len() as u64 - 1);
    if burn.len() != p {
        return Err(Error::validation("sample dump is thinned or incomplete; `report` needs a full dump"));
    }

    let mut chains: Vec<ChainOutput> = (0..p)
        .map(|j| ChainOutput {
            burn_samples: burn[j].concat(),
            samples: main[j].concat(),
            burn_tde: vec![0; n_burn as usize + 1],
            burn_seconds: vec![0.0; n_burn as usize + 1],
            tde: vec![0; n_its as usize + 1],
            seconds: vec![0.0; n_its as usize + 1],
            completed: n_its,
            ..ChainOutput::default()
        })
        .collect();
    let tpath = sub.join("transitions.csv");
    let mut rdr = read_csv(&tpath)?;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::io(&tpath, e.into()))?;
        let i: usize = field(&rec, 1, &tpath, row + 1)?;
        let j: usize = field(&rec, 2, &tpath, row + 1)?;
        let c = chains
            .get_mut(j)
            .ok_or_else(|| Error::validation("transitions reference an unknown chain"))?;
        let tde: u32 = field(&rec, 3, &tpath, row + 1)?;
        let secs: f64 = field(&rec, 4, &tpath, row + 1)?;
        let wait: f64 = field(&rec, 5, &tpath, row + 1)?;
        let (tdes, times) = if &rec[0] == "burn" {
            (&mut c.burn_tde, &mut c.burn_seconds)
        } else {
            (&mut c.tde, &mut c.seconds)
        };
        if i >= tdes.len() {
            return Err(Error::validation("transition index beyond the sample dump"));
        }
        tdes[i] = tde;
        times[i] = secs;
        if &rec[0] == "main" && transforms.iter().any(|t| t.update_time == i as u64) {
            c.waits.push(Wait {
                iteration: i as u64,
                seconds: wait,
            });
        }
    }
    let mut update_times: Vec<u64> = transforms.iter().map(|t| t.update_time).collect();
    update_times.dedup();
    Ok(RunReport {
        d,
        n_its,
        n_burn,
        chains,
        update_times,
        transforms,
        warnings: Vec::new(),
        status: RunStatus::Completed,
        threads: 1,
        wall_seconds: 0.0,
    })
}

/// Recomputes the metrics of a finished run directory from its dumps and
/// rewrites its `metrics.csv`.
pub fn report_from_dir(dir: &Path) -> Result<Vec<(String, ChainStats)>> {
    let manifest = Manifest::read(&dir.join("manifest.json"))?;
    let cfg = manifest.config()?;
    if cfg.dump != DumpSpec::Full {
        return Err(Error::validation("metrics can only be recomputed from a full sample dump"));
    }
    let mut rows = Vec::new();
    for s in &manifest.samplers {
        if s.error.is_some() {
            continue;
        }
        let report = load_dump(&dir.join(&s.slug))?;
        let opts = cfg.analysis.resolve(report.d)?;
        rows.push((s.label.clone(), compile_report(&report, &opts)?));
    }
    write_metrics(&rows, &dir.join("metrics.csv"))?;
    Ok(rows)
}

/// Resolves where an experiment writes: explicit choice, then the config's
/// `out`, then `runs/<name>`.
pub fn output_dir(cfg: &ExperimentConfig, explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(slugify(&cfg.name)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slugify("PATT-GPSS Cen+Cov"), "patt-gpss-cen-plus-cov");
        assert_eq!(slugify("EP+US"), "ep-plus-us");
        assert_eq!(slugify("  with IBP "), "with-ibp");
    }
}
