use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use patt_core::diagnostics::ChainStats;
use patt_core::harness::{
    output_dir, parse_config, preset_config, report_from_dir, run_experiment, ExperimentOutcome,
    Manifest, Preset, PresetOptions,
};
use patt_core::patt::{RunOptions, WaitClock};
use patt_core::Error;

/// Run PATT sampling experiments.
#[derive(Parser)]
#[command(name = "patt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config or a previous run's manifest.json.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        exec: Exec,
    },
    /// Run a built-in experiment.
    Preset {
        /// ablation-adjustments, ablation-parallel-us, ablation-ibp,
        /// mvexp-inference or blr-synthetic.
        name: String,
        /// Iteration scale factor.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Target dimension (raw feature count for blr-synthetic).
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        exec: Exec,
        /// Print the preset's config instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Recompute metrics of a finished run from its dumps.
    Report { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Clock {
    Parallel,
    Wall,
}

#[derive(clap::Args)]
struct Exec {
    /// Worker threads (default: PATT_THREADS, else one per chain up to the core count).
    #[arg(long)]
    threads: Option<usize>,
    /// How barrier waits are timed: as if each chain had its own core, or by the wall clock.
    #[arg(long, value_enum, default_value = "parallel")]
    wait_clock: Clock,
}

impl Exec {
    fn options(&self) -> RunOptions {
        RunOptions {
            threads: self.threads,
            wait_clock: match self.wait_clock {
                Clock::Parallel => WaitClock::Parallel,
                Clock::Wall => WaitClock::Wall,
            },
        }
    }
}

fn print_table(rows: &[(String, ChainStats)]) {
    println!(
        "{:<22} {:>10} {:>12} {:>10} {:>10} {:>12} {:>12}",
        "sampler", "TDE/it", "samples/s", "mean IAT", "MSS", "TDE/ES", "ES/s"
    );
    for (label, s) in rows {
        println!(
            "{:<22} {:>10.2} {:>12.0} {:>10.2} {:>10.3} {:>12.2} {:>12.1}",
            label, s.tde_per_it, s.samples_per_s, s.mean_iat, s.mss, s.tde_per_es, s.es_per_s
        );
    }
}

fn finish(outcome: &ExperimentOutcome, dir: &Path) -> Result<(), Error> {
    for n in &outcome.notes {
        eprintln!("note: {n}");
    }
    let rows: Vec<_> = outcome
        .results
        .iter()
        .filter_map(|r| r.stats.clone().map(|s| (r.label.clone(), s)))
        .collect();
    print_table(&rows);
    for r in &outcome.results {
        for w in &r.report.warnings {
            eprintln!("warning [{}]: {w}", r.label);
        }
    }
    println!("outputs written to {}", dir.display());
    let failed: Vec<_> = outcome.results.iter().filter_map(|r| r.error.as_ref().map(|e| (r, e))).collect();
    if let Some((r, e)) = failed.first() {
        return Err(Error::Numerical(format!("{}: {e} (partial outputs flagged in manifest)", r.label)));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out, exec } => {
            let cfg = if config.extension().is_some_and(|e| e == "json") {
                Manifest::read(&config)?.config()?
            } else {
                let text = std::fs::read_to_string(&config).map_err(|e| Error::io(&config, e))?;
                parse_config(&text)?
            };
            let dir = output_dir(&cfg, out);
            let outcome = run_experiment(&cfg, &dir, exec.options())?;
            finish(&outcome, &dir)
        }
        Command::Preset {
            name,
            scale,
            seed,
            out,
            dim,
            exec,
            print_config,
        } => {
            let preset: Preset = name.parse()?;
            let cfg = preset_config(preset, &PresetOptions { scale, seed, dim })?;
            if print_config {
                print!("{}", patt_core::harness::emit_config(&cfg)?);
                return Ok(());
            }
            let dir = output_dir(&cfg, out);
            let outcome = run_experiment(&cfg, &dir, exec.options())?;
            finish(&outcome, &dir)
        }
        Command::Report { dir } => {
            let rows = report_from_dir(&dir)?;
            print_table(&rows);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
