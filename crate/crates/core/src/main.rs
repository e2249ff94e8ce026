use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use axes_eval::axes::Axis;
use axes_eval::datamodel::load_manifest;
use axes_eval::report::{emit_table_with, TableOptions};
use axes_eval::runner::{read_results, run, RunConfig};
use axes_eval::synthworld::{generate_world, FactorWorldSpec};

#[derive(Parser)]
#[command(name = "axes-eval", version, about = "Probe-based evaluation of timbre/structure embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured grid and write results.jsonl.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds, overriding the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one axis of a results file as a markdown table.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated row order.
        #[arg(long, value_delimiter = ',')]
        rows: Vec<String>,
    },
    /// Generate a synthetic world from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and fully validate a manifest and its tensors.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            workers,
            out,
        } => {
            let mut cfg = RunConfig::load(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let summary = run(&cfg)?;
            println!(
                "{} cells: {} computed, {} reused, {} skipped, {} failed, {} degenerate",
                summary.cells,
                summary.computed,
                summary.reused,
                summary.skipped.len(),
                summary.failed.len(),
                summary.degenerate
            );
            for issue in summary.skipped.iter().chain(&summary.failed) {
                println!("  {}: {}", issue.cell, issue.reason);
            }
            println!("results: {}", summary.results_path.display());
            Ok(summary.exit_code() as u8)
        }
        Command::Report {
            results,
            axis,
            rows,
        } => {
            let rs = read_results(&results)
                .with_context(|| format!("reading {}", results.display()))?;
            print!("{}", emit_table_with(&rs, axis, &TableOptions { row_order: rows })?);
            Ok(0)
        }
        Command::Synth { spec, out } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let spec = FactorWorldSpec::from_json(&text)?;
            let manifest = generate_world(&spec, &out)?;
            println!("{}", manifest.display());
            Ok(0)
        }
        Command::Validate { manifest } => {
            let ds = load_manifest(&manifest)?;
            println!("ok: {} records", ds.records().len());
            for ((split, transform), n) in ds.summary() {
                println!("  {split:?} {transform}: {n}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
