//! Run orchestration: expands a config into grid cells, evaluates them on a
//! bounded worker pool, and persists results so interrupted runs can resume.

mod config;

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::{RunConfig, TransformSpec};

use crate::axes::{
    run_disentanglement_delta, run_informativeness, run_invariance, run_mig, run_p_equivariance,
    run_r_equivariance, Axis, AxisResult, TaskSpec,
};
use crate::datamodel::{load_manifest, Dataset, Stream, Transform};
use crate::error::{Error, Result};
use crate::numerics::AdamConfig;

pub const RESULTS_FILE: &str = "results.jsonl";
const PARTIAL_FILE: &str = "results.partial.jsonl";
const ENGINE: &str = "axes-eval/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKey {
    Task(TaskSpec),
    Transform { stream: Stream, transform: Transform },
    Mig { stream: Stream },
}

impl CellKey {
    fn label(&self) -> String {
        match self {
            CellKey::Task(t) => t.name.clone(),
            CellKey::Transform { stream, transform } => format!("{stream}/{transform}"),
            CellKey::Mig { stream } => format!("{stream}/mig"),
        }
    }
}

/// One point of the axis x task x model x seed grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub axis: Axis,
    pub model: String,
    pub key: CellKey,
    pub seed: u64,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {} seed {}", self.axis, self.model, self.key.label(), self.seed)
    }
}

/// Every cell of the grid in a fixed order.
pub fn expand_grid(cfg: &RunConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &axis in &cfg.axes {
        let keys: Vec<CellKey> = match axis {
            Axis::Informativeness | Axis::DisentanglementDelta => {
                cfg.tasks.iter().cloned().map(CellKey::Task).collect()
            }
            Axis::PEquivariance | Axis::REquivariance | Axis::Invariance => cfg
                .transforms
                .iter()
                .filter(|t| t.applies_to(axis))
                .map(|t| CellKey::Transform {
                    stream: t.stream,
                    transform: t.transform,
                })
                .collect(),
            Axis::Mig => Stream::ALL.into_iter().map(|stream| CellKey::Mig { stream }).collect(),
        };
        for model in cfg.datasets.keys() {
            for key in &keys {
                for &seed in &cfg.seeds {
                    cells.push(Cell {
                        axis,
                        model: model.clone(),
                        key: key.clone(),
                        seed,
                    });
                }
            }
        }
    }
    cells
}

/// SHA-256 over everything a cell's value depends on: the cell itself, the
/// dataset's manifest hash, and the settings its axis reads.
pub fn cell_fingerprint(cfg: &RunConfig, cell: &Cell, dataset_hash: &str) -> Result<String> {
    let adam = AdamConfig::default();
    let uses_probe = !matches!(cell.axis, Axis::Invariance | Axis::Mig);
    let settings = match cell.axis {
        Axis::PEquivariance => json!({"p_equivariance_input": cfg.options.p_equivariance_input}),
        Axis::Invariance => json!({"invariance_mode": cfg.options.invariance_mode}),
        Axis::Mig => json!({"mig_factors": cfg.mig_factors, "bins": crate::axes::MIG_BINS}),
        _ => json!({}),
    };
    let probe = if uses_probe {
        json!({
            "config": cfg.probe,
            "adam": {"beta1": adam.beta1, "beta2": adam.beta2, "eps": adam.eps},
        })
    } else {
        serde_json::Value::Null
    };
    let value = json!({
        "engine": ENGINE,
        "cell": cell,
        "dataset": dataset_hash,
        "probe": probe,
        "settings": settings,
    });
    let text = crate::datamodel::to_canonical_string(&value)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

fn evaluate(cfg: &RunConfig, ds: &Dataset, cell: &Cell) -> Result<AxisResult> {
    let probe = &cfg.probe;
    let seed = cell.seed;
    let mut result = match (&cell.key, cell.axis) {
        (CellKey::Task(task), Axis::Informativeness) => run_informativeness(ds, task, probe, seed)?,
        (CellKey::Task(task), Axis::DisentanglementDelta) => {
            run_disentanglement_delta(ds, task, probe, seed)?
        }
        (CellKey::Transform { stream, transform }, Axis::PEquivariance) => run_p_equivariance(
            ds,
            *stream,
            *transform,
            cfg.options.p_equivariance_input,
            probe,
            seed,
        )?,
        (CellKey::Transform { stream, transform }, Axis::REquivariance) => {
            run_r_equivariance(ds, *stream, *transform, probe, seed)?
        }
        (CellKey::Transform { stream, transform }, Axis::Invariance) => {
            run_invariance(ds, *stream, *transform, cfg.options.invariance_mode)?
        }
        (CellKey::Mig { stream }, Axis::Mig) => {
            if !ds.has_stream(*stream) {
                return Err(Error::Empty(format!("dataset has no {stream} stream")));
            }
            run_mig(ds, *stream, &cfg.mig_factors)?
        }
        _ => unreachable!("grid pairs keys with their axes"),
    };
    result.seed = seed;
    result.model = cell.model.clone();
    Ok(result)
}

/// A cell that produced no result.
#[derive(Debug, Clone, PartialEq)]
pub struct CellIssue {
    pub cell: Cell,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub cells: usize,
    pub computed: usize,
    pub reused: usize,
    /// Cells that do not apply to their dataset (missing labels, streams,
    /// views) or whose data is degenerate.
    pub skipped: Vec<CellIssue>,
    /// Cells that hit an engine error.
    pub failed: Vec<CellIssue>,
    /// Results written with the degenerate flag set.
    pub degenerate: usize,
    pub results_path: PathBuf,
}

impl RunSummary {
    /// 0 on full success, 2 when some cells were skipped or degenerate, 1 when
    /// any cell failed.
    pub fn exit_code(&self) -> i32 {
        if !self.failed.is_empty() {
            1
        } else if !self.skipped.is_empty() || self.degenerate > 0 {
            2
        } else {
            0
        }
    }
}

/// Skippable errors describe the data, not the engine.
fn is_inapplicable(e: &Error) -> bool {
    matches!(
        e,
        Error::MissingLabel { .. } | Error::Empty(_) | Error::Degenerate(_) | Error::UnsupportedQuery(_)
    )
}

fn read_results_lenient(path: &Path, into: &mut HashMap<String, AxisResult>) {
    let Ok(file) = File::open(path) else { return };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AxisResult>(&line) {
            Ok(r) => {
                into.insert(r.config_fingerprint.clone(), r);
            }
            Err(e) => log::warn!("{}:{}: ignoring unreadable result: {e}", path.display(), i + 1),
        }
    }
}

enum Outcome {
    Done(AxisResult, bool),
    Skipped(String),
    Failed(String),
}

/// Executes the grid. Config and dataset load errors abort before any
/// training; per-cell problems are collected into the summary.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let mut datasets = BTreeMap::new();
    for (model, path) in &cfg.datasets {
        log::info!("loading {model} from {}", path.display());
        datasets.insert(model.clone(), load_manifest(path)?);
    }
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let results_path = out.join(RESULTS_FILE);
    let partial_path = out.join(PARTIAL_FILE);

    let mut previous = HashMap::new();
    read_results_lenient(&results_path, &mut previous);
    read_results_lenient(&partial_path, &mut previous);

    let cells = expand_grid(cfg);
    let fingerprints = cells
        .iter()
        .map(|c| cell_fingerprint(cfg, c, datasets[&c.model].content_hash()))
        .collect::<Result<Vec<_>>>()?;

    let partial = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&partial_path)
        .map_err(|e| Error::io(&partial_path, e))?;
    let writer = Mutex::new(partial);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let outcomes: Vec<Outcome> = pool.install(|| {
        cells
            .par_iter()
            .zip(&fingerprints)
            .map(|(cell, fp)| {
                let variant_of = cfg.variants.get(&cell.model).cloned();
                if let Some(prev) = previous.get(fp) {
                    log::debug!("reusing {cell}");
                    let mut r = prev.clone();
                    r.variant_of = variant_of;
                    return Outcome::Done(r, true);
                }
                log::info!("evaluating {cell}");
                match evaluate(cfg, &datasets[&cell.model], cell) {
                    Ok(mut r) => {
                        r.config_fingerprint = fp.clone();
                        r.variant_of = variant_of;
                        if let Err(e) = r.validate() {
                            return Outcome::Failed(e.to_string());
                        }
                        let line = match serde_json::to_string(&r) {
                            Ok(l) => l,
                            Err(e) => return Outcome::Failed(e.to_string()),
                        };
                        let mut w = writer.lock().expect("writer lock");
                        if let Err(e) = writeln!(w, "{line}") {
                            return Outcome::Failed(format!("appending result: {e}"));
                        }
                        Outcome::Done(r, false)
                    }
                    Err(e) if is_inapplicable(&e) => {
                        log::warn!("skipping {cell}: {e}");
                        Outcome::Skipped(e.to_string())
                    }
                    Err(e) => {
                        log::error!("{cell} failed: {e}");
                        Outcome::Failed(e.to_string())
                    }
                }
            })
            .collect()
    });
    drop(writer);

    let mut summary = RunSummary {
        cells: cells.len(),
        results_path: results_path.clone(),
        ..RunSummary::default()
    };
    let mut results = Vec::new();
    for (cell, outcome) in cells.into_iter().zip(outcomes) {
        match outcome {
            Outcome::Done(r, reused) => {
                if reused {
                    summary.reused += 1;
                } else {
                    summary.computed += 1;
                }
                summary.degenerate += r.degenerate as usize;
                results.push(r);
            }
            Outcome::Skipped(reason) => summary.skipped.push(CellIssue { cell, reason }),
            Outcome::Failed(reason) => summary.failed.push(CellIssue { cell, reason }),
        }
    }
    write_results(&results_path, &mut results)?;
    fs::remove_file(&partial_path).map_err(|e| Error::io(&partial_path, e))?;
    Ok(summary)
}

/// Sorts by `(axis, stream, task, model, seed)` and replaces `path` atomically.
pub fn write_results(path: &Path, results: &mut [AxisResult]) -> Result<()> {
    results.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut text = String::new();
    for r in results.iter() {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    let tmp = path.with_extension("jsonl.tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads a results file strictly: every line must be a valid result.
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<AxisResult>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}
