//! Markdown tables of per-seed means, one column per (stream, task).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::axes::{Axis, AxisResult, Direction, Metric, TaskStream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct TableOptions {
    /// Preferred row order; unlisted models follow alphabetically.
    pub row_order: Vec<String>,
}

/// Per-model `(sum, count)` over seeds for one column.
type Column<'a> = BTreeMap<&'a str, (f64, usize)>;

fn direction(axis: Axis, metric: Metric) -> Direction {
    if axis == Axis::DisentanglementDelta {
        Direction::LowerIsBetter
    } else {
        metric.direction()
    }
}

fn rounded(v: f64) -> f64 {
    format!("{v:.3}").parse().expect("formatted float parses")
}

fn beats(a: f64, b: f64, dir: Direction) -> bool {
    match dir {
        Direction::HigherIsBetter => a > b,
        Direction::LowerIsBetter => a < b,
    }
}

fn stream_title(s: TaskStream) -> &'static str {
    match s {
        TaskStream::Timbre => "Timbre",
        TaskStream::Structure => "Structure",
        TaskStream::Concat => "Concat",
    }
}

pub fn emit_table(results: &[AxisResult], axis: Axis) -> Result<String> {
    emit_table_with(results, axis, &TableOptions::default())
}

/// Renders `axis` as a markdown table. Cells are means over seeds with three
/// decimals. Among base models the best value per column (after rounding) is
/// bold, all ties included; variant rows are never bold but get `*` when they
/// beat their base model.
pub fn emit_table_with(results: &[AxisResult], axis: Axis, opts: &TableOptions) -> Result<String> {
    let rows: Vec<&AxisResult> = results.iter().filter(|r| r.axis == axis).collect();
    if rows.is_empty() {
        return Err(Error::Empty(format!("no {axis} results")));
    }

    let mut sums: BTreeMap<(TaskStream, &str), Column> = BTreeMap::new();
    let mut metrics: BTreeMap<(TaskStream, &str), Metric> = BTreeMap::new();
    let mut variant_of: BTreeMap<&str, &str> = BTreeMap::new();
    let mut models = BTreeSet::new();
    for r in &rows {
        let col = (r.stream, r.task.as_str());
        let m = *metrics.entry(col).or_insert(r.metric);
        if m != r.metric {
            return Err(Error::Mismatch(format!(
                "column {}/{} mixes {:?} and {:?}",
                r.stream.as_str(),
                r.task,
                m,
                r.metric
            )));
        }
        let e = sums.entry(col).or_default().entry(&r.model).or_insert((0.0, 0));
        e.0 += r.value;
        e.1 += 1;
        models.insert(r.model.as_str());
        if let Some(base) = &r.variant_of {
            variant_of.insert(&r.model, base);
        }
    }

    let ordered = |names: Vec<&str>| -> Vec<String> {
        let mut out: Vec<String> = opts
            .row_order
            .iter()
            .filter(|m| names.contains(&m.as_str()))
            .cloned()
            .collect();
        for n in names {
            if !out.iter().any(|o| o == n) {
                out.push(n.to_string());
            }
        }
        out
    };
    let bases = ordered(models.iter().copied().filter(|m| !variant_of.contains_key(m)).collect());
    let variants = ordered(models.iter().copied().filter(|m| variant_of.contains_key(m)).collect());

    let mut out = String::new();
    write!(out, "| Model |").unwrap();
    for &(stream, task) in sums.keys() {
        let metric = metrics[&(stream, task)];
        let delta = if axis == Axis::DisentanglementDelta { "Δ" } else { "" };
        let arrow = direction(axis, metric).arrow();
        write!(out, " {} {task} ({delta}{} {arrow}) |", stream_title(stream), metric.label()).unwrap();
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in 0..sums.len() {
        out.push_str("---:|");
    }
    out.push('\n');

    let mean = |col: &Column, model: &str| {
        col.get(model).map(|&(s, n)| s / n as f64)
    };
    for model in bases.iter().chain(&variants) {
        write!(out, "| {model} |").unwrap();
        for (&(stream, task), col) in &sums {
            let dir = direction(axis, metrics[&(stream, task)]);
            let Some(v) = mean(col, model) else {
                out.push_str(" – |");
                continue;
            };
            let text = format!("{v:.3}");
            let cell = match variant_of.get(model.as_str()) {
                None => {
                    let best = bases
                        .iter()
                        .filter_map(|b| mean(col, b))
                        .map(rounded)
                        .reduce(|a, b| if beats(b, a, dir) { b } else { a })
                        .expect("this model has a value");
                    if rounded(v) == best {
                        format!("**{text}**")
                    } else {
                        text
                    }
                }
                Some(base) => match mean(col, base) {
                    Some(b) if beats(rounded(v), rounded(b), dir) => format!("{text}*"),
                    _ => text,
                },
            };
            write!(out, " {cell} |").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(model: &str, task: &str, value: f64, seed: u64) -> AxisResult {
        let mut r = AxisResult::new(
            Axis::Informativeness,
            TaskStream::Timbre,
            task,
            Metric::Accuracy,
            value,
            seed,
            10,
        );
        r.model = model.into();
        r
    }

    #[test]
    fn single_model_is_bold_everywhere() {
        let rs = [result("m", "a", 0.3, 0), result("m", "b", 0.1, 0)];
        let t = emit_table(&rs, Axis::Informativeness).unwrap();
        assert!(t.contains("| m | **0.300** | **0.100** |"), "{t}");
    }

    #[test]
    fn seeds_are_averaged() {
        let rs = [result("m", "a", 0.4, 0), result("m", "a", 0.6, 1)];
        let t = emit_table(&rs, Axis::Informativeness).unwrap();
        assert!(t.contains("0.500"), "{t}");
    }

    #[test]
    fn missing_axis_is_empty_error() {
        let rs = [result("m", "a", 0.4, 0)];
        assert!(matches!(emit_table(&rs, Axis::Mig), Err(Error::Empty(_))));
    }

    #[test]
    fn header_shows_metric_and_direction() {
        let rs = [result("m", "S.Instr", 0.4, 0)];
        let t = emit_table(&rs, Axis::Informativeness).unwrap();
        assert!(t.starts_with("| Model | Timbre S.Instr (Acc ↑) |\n|---|---:|\n"), "{t}");
    }
}
