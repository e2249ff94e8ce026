use std::collections::BTreeMap;

use super::features::{class_label, pooled};
use super::types::{Axis, AxisResult, Metric, TaskTarget};
use crate::datamodel::{Dataset, Split, Stream};
use crate::error::{Error, Result};
use crate::numerics::Tensor2;

pub const MIG_BINS: usize = 20;

/// Equal-width bin index of every value over `[min, max]`; a constant column
/// lands in bin 0.
fn bin_column(values: &[f64], bins: usize) -> Vec<usize> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let width = hi - lo;
    values
        .iter()
        .map(|&v| {
            if width <= 0.0 {
                0
            } else {
                (((v - lo) / width * bins as f64) as usize).min(bins - 1)
            }
        })
        .collect()
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in mutual information (nats) between two discrete sequences.
fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ma: BTreeMap<usize, usize> = BTreeMap::new();
    let mut mb: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ma.entry(x).or_default() += 1;
        *mb.entry(y).or_default() += 1;
    }
    let mi = entropy(ma.into_values(), n) + entropy(mb.into_values(), n)
        - entropy(joint.into_values(), n);
    mi.max(0.0)
}

/// MIG of a `samples x dims` code matrix against discrete factors: per factor,
/// the gap between the two largest per-dimension MIs over the factor entropy,
/// averaged over factors.
pub fn mig_score(codes: &Tensor2, factors: &[Vec<usize>]) -> Result<f64> {
    if factors.len() < 2 {
        return Err(Error::Config("MIG needs at least two factors".into()));
    }
    let n = codes.rows();
    if n == 0 {
        return Err(Error::Empty("no samples for MIG".into()));
    }
    let binned: Vec<Vec<usize>> = (0..codes.cols())
        .map(|d| {
            let col: Vec<f64> = (0..n).map(|r| codes[(r, d)]).collect();
            bin_column(&col, MIG_BINS)
        })
        .collect();
    let mut total = 0.0;
    for (k, f) in factors.iter().enumerate() {
        if f.len() != n {
            return Err(Error::Length { left: f.len(), right: n });
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in f {
            *counts.entry(v).or_default() += 1;
        }
        let h = entropy(counts.into_values(), n as f64);
        if h <= 0.0 {
            return Err(Error::Degenerate(format!("factor {k} is constant")));
        }
        let mut mis: Vec<f64> = binned.iter().map(|b| mutual_information(b, f)).collect();
        mis.sort_by(|a, b| b.total_cmp(a));
        let top1 = mis.first().copied().unwrap_or(0.0);
        let top2 = mis.get(1).copied().unwrap_or(0.0);
        total += (top1 - top2) / h;
    }
    Ok(total / factors.len() as f64)
}

/// MIG of the pooled `stream` embeddings of every clean item that carries all
/// requested discrete factors.
pub fn run_mig(ds: &Dataset, stream: Stream, factors: &[TaskTarget]) -> Result<AxisResult> {
    if let Some(f) = factors.iter().find(|f| !f.is_discrete()) {
        return Err(Error::Config(format!("MIG factor {f:?} is not discrete")));
    }
    let mut rows = Vec::new();
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); factors.len()];
    for split in [Split::Train, Split::Val, Split::Test] {
        for rec in ds.clean_records(split) {
            let values: Option<Vec<usize>> = factors.iter().map(|&f| class_label(rec, f)).collect();
            if let Some(values) = values {
                rows.push(pooled(ds, &rec.item_id, stream)?);
                for (l, v) in labels.iter_mut().zip(values) {
                    l.push(v);
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("no clean items carry every MIG factor".into()));
    }
    let codes = Tensor2::vcat(&rows)?;
    let value = mig_score(&codes, &labels)?;
    Ok(AxisResult::new(
        Axis::Mig,
        stream.into(),
        "mig",
        Metric::Mig,
        value,
        0,
        codes.rows(),
    ))
}
