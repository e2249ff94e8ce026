use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::{dot, Tensor2};
use crate::probes::f1_from_counts;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        return Err(Error::Length { left: a, right: b });
    }
    Ok(())
}

pub fn metric_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn metric_mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / truth.len() as f64)
}

const ZERO_NORM: f64 = 1e-12;

/// Cosine similarity of two vectors, clamped to `[-1, 1]`.
pub fn metric_cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a.len(), b.len())?;
    let na = dot(a, a);
    let nb = dot(b, b);
    if na.sqrt() < ZERO_NORM || nb.sqrt() < ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Frame-wise cosine over the common prefix of two `frames x dim` matrices,
/// averaged over frames.
pub fn metric_cosine_frames(a: &Tensor2, b: &Tensor2) -> Result<f64> {
    if a.cols() != b.cols() {
        return Err(Error::Length {
            left: a.cols(),
            right: b.cols(),
        });
    }
    let frames = a.rows().min(b.rows());
    if frames == 0 {
        return Err(Error::Length { left: a.rows(), right: b.rows() });
    }
    let mut sum = 0.0;
    for t in 0..frames {
        sum += metric_cosine(a.row(t), b.row(t))?;
    }
    Ok(sum / frames as f64)
}

/// Track-level multi-pitch F1.
///
/// Each item is a `frames x pitches` matrix where values `>= 0.5` are active.
/// Frames are pooled per group id into one confusion count; the result is the
/// unweighted mean of the per-group F1 scores.
pub fn metric_f1_track<S: AsRef<str>>(
    pred: &[Tensor2],
    truth: &[Tensor2],
    group_ids: &[S],
) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    check_lengths(pred.len(), group_ids.len())?;
    let mut counts: BTreeMap<&str, (u64, u64, u64)> = BTreeMap::new();
    for ((p, t), g) in pred.iter().zip(truth).zip(group_ids) {
        if p.shape() != t.shape() {
            return Err(Error::Shape(format!(
                "prediction {:?} vs truth {:?}",
                p.shape(),
                t.shape()
            )));
        }
        let c = counts.entry(g.as_ref()).or_default();
        for (&pv, &tv) in p.as_slice().iter().zip(t.as_slice()) {
            match (pv >= 0.5, tv >= 0.5) {
                (true, true) => c.0 += 1,
                (true, false) => c.1 += 1,
                (false, true) => c.2 += 1,
                (false, false) => {}
            }
        }
    }
    let total: f64 = counts
        .values()
        .map(|&(tp, fp, fn_)| f1_from_counts(tp, fp, fn_))
        .sum();
    Ok(total / counts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(metric_accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(metric_accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(metric_accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
        assert!(matches!(metric_accuracy(&[1], &[1, 2]), Err(Error::Length { .. })));
        assert!(metric_accuracy(&[], &[]).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(metric_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(metric_mse(&[2.0, 3.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(metric_mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn cosine_examples() {
        let a = [0.3, -1.7, 2.2];
        assert_eq!(metric_cosine(&a, &a).unwrap(), 1.0);
        assert_eq!(metric_cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_eq!(metric_cosine(&a, &neg).unwrap(), -1.0);
        assert!(matches!(metric_cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn framewise_cosine_truncates() {
        let a = Tensor2::from_rows(&[[1.0, 0.0], [0.0, 1.0], [5.0, 5.0]]).unwrap();
        let b = Tensor2::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(metric_cosine_frames(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn f1_track_examples() {
        let on = Tensor2::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let off = Tensor2::zeros(2, 2);
        assert_eq!(metric_f1_track(&[on.clone(), on.clone()], &[on.clone(), on.clone()], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(metric_f1_track(std::slice::from_ref(&off), std::slice::from_ref(&on), &["a"]).unwrap(), 0.0);
        // track a: one perfect item; track b: three missed items
        let pred = vec![on.clone(), off.clone(), off.clone(), off.clone()];
        let truth = vec![on.clone(), on.clone(), on.clone(), on.clone()];
        assert_eq!(metric_f1_track(&pred, &truth, &["a", "b", "b", "b"]).unwrap(), 0.5);
    }
}
