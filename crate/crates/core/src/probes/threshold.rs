use super::spec::ProbeKind;
use super::train::TrainedProbe;
use crate::error::{Error, Result};
use crate::numerics::Tensor2;

/// Candidate thresholds `0.05, 0.10, ..., 0.95`.
pub fn threshold_grid() -> impl Iterator<Item = f64> {
    (1..=19).map(|k| k as f64 / 20.0)
}

/// Frame-level (micro) F1 of `scores >= threshold` against 0/1 truth.
pub fn frame_f1(scores: &Tensor2, truth: &Tensor2, threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&s, &t) in scores.as_slice().iter().zip(truth.as_slice()) {
        match (s >= threshold, t >= 0.5) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    f1_from_counts(tp, fp, fn_)
}

pub(crate) fn f1_from_counts(tp: u64, fp: u64, fn_: u64) -> f64 {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Grid search for the F1-maximising threshold. Ties go to the threshold
/// closest to 0.5, then to the smaller one. Returns `(threshold, f1)`.
pub fn select_threshold(scores: &Tensor2, truth: &Tensor2) -> Result<(f64, f64)> {
    if scores.shape() != truth.shape() {
        return Err(Error::Shape(format!(
            "scores {:?} vs truth {:?}",
            scores.shape(),
            truth.shape()
        )));
    }
    if !truth.as_slice().iter().any(|&v| v >= 0.5) {
        return Err(Error::Degenerate(
            "validation pianorolls contain no active notes".into(),
        ));
    }
    let mut best: Option<(f64, f64)> = None;
    for t in threshold_grid() {
        let f1 = frame_f1(scores, truth, t);
        let better = match best {
            None => true,
            Some((bt, bf)) => {
                f1 > bf
                    || (f1 == bf
                        && ((t - 0.5).abs() < (bt - 0.5).abs()
                            || ((t - 0.5).abs() == (bt - 0.5).abs() && t < bt)))
            }
        };
        if better {
            best = Some((t, f1));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Tunes the multilabel decision threshold on validation data.
pub fn tune_threshold(probe: &TrainedProbe, x_val: &Tensor2, rolls_val: &Tensor2) -> Result<f64> {
    if probe.spec.kind != ProbeKind::MlpMultilabel {
        return Err(Error::Config(
            "threshold tuning applies to mlp_multilabel probes".into(),
        ));
    }
    let scores = probe.scores(x_val)?;
    Ok(select_threshold(&scores, rolls_val)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse_truth() -> Tensor2 {
        let mut t = Tensor2::zeros(10, 8);
        for (r, c) in [(0, 1), (3, 4), (7, 7), (9, 0)] {
            t[(r, c)] = 1.0;
        }
        t
    }

    #[test]
    fn perfect_predictor_picks_half() {
        let truth = sparse_truth();
        let (t, f1) = select_threshold(&truth, &truth).unwrap();
        assert_eq!(f1, 1.0);
        assert_eq!(t, 0.5);
    }

    #[test]
    fn constant_scores_match_all_positive_baseline() {
        let truth = sparse_truth();
        let scores = Tensor2::filled(10, 8, 0.3);
        let (t, f1) = select_threshold(&scores, &truth).unwrap();
        // all-positive prediction: precision 4/80, recall 1
        let p = 4.0 / 80.0;
        let baseline = 2.0 * p / (p + 1.0);
        assert!(t <= 0.3);
        assert!((f1 - baseline).abs() < 1e-12);
    }

    #[test]
    fn shifted_scores_shift_threshold() {
        // scores sit at odd multiples of 0.025 so no grid point coincides with one
        let truth = sparse_truth();
        let mut scores = Tensor2::zeros(10, 8);
        for r in 0..10 {
            for c in 0..8 {
                let hi = truth[(r, c)] == 1.0;
                let base = if hi { 0.475 } else { 0.125 + 0.05 * ((r * 8 + c) % 7) as f64 };
                scores[(r, c)] = if hi || (r + c) % 9 != 0 { base } else { 0.525 };
            }
        }
        let (t0, f0) = select_threshold(&scores, &truth).unwrap();
        let shifted = scores.map(|s| s + 0.2);
        let (t1, f1) = select_threshold(&shifted, &truth).unwrap();
        assert!((t1 - t0 - 0.2).abs() < 1e-9, "{t0} -> {t1}");
        assert_eq!(f0, f1);
    }

    #[test]
    fn no_positives_is_degenerate() {
        let zeros = Tensor2::zeros(3, 4);
        assert!(matches!(
            select_threshold(&zeros, &zeros),
            Err(Error::Degenerate(_))
        ));
    }
}
