use super::features::{class_count, labelled, split_data, tempo_range, Input, SplitData};
use super::metrics::{metric_accuracy, metric_f1_track, metric_mse};
use super::types::{Axis, AxisResult, TaskSpec, TaskTarget};
use crate::datamodel::{Dataset, Split, Stream};
use crate::error::{Error, Result};
use crate::numerics::Tensor2;
use crate::probes::{predict, select_threshold, train_probe, Predictions, ProbeConfig, ProbeSpec, Targets};

/// Test-split score of one trained probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TaskScore {
    pub value: f64,
    pub test_items: usize,
    /// Threshold tuning had no positives to work with.
    pub degenerate: bool,
}

fn own_stream(task: &TaskSpec) -> Result<Stream> {
    task.stream.single().ok_or_else(|| {
        Error::Config(format!(
            "task `{}` must be assigned to the timbre or structure stream",
            task.name
        ))
    })
}

/// Trains the task's probe on `input` and scores it on the test split.
pub(crate) fn evaluate_task(
    ds: &Dataset,
    task: &TaskSpec,
    input: Input,
    probe: &ProbeConfig,
    seed: u64,
) -> Result<TaskScore> {
    task.validate()?;
    let target = task.target;
    let [train, val, test] = [Split::Train, Split::Val, Split::Test].map(|s| labelled(ds, s, target));
    if train.is_empty() {
        return Err(Error::MissingLabel {
            item_id: "<train split>".into(),
            label: format!("{target:?}"),
        });
    }
    if test.is_empty() || val.is_empty() {
        return Err(Error::Degenerate(format!(
            "task `{}` has no labelled val or test items",
            task.name
        )));
    }
    let tempo = match target {
        TaskTarget::TempoRegression => Some(tempo_range(&train)?),
        _ => None,
    };
    let tr = split_data(ds, &train, target, input, tempo)?;
    let va = split_data(ds, &val, target, input, tempo)?;
    let te = split_data(ds, &test, target, input, tempo)?;

    let output_dim = match target {
        TaskTarget::TempoRegression => 1,
        TaskTarget::Multipitch => crate::datamodel::PIANOROLL_PITCHES,
        _ => class_count(ds, target),
    };
    let spec = ProbeSpec::new(target.probe_kind(), tr.x.cols(), output_dim, probe, seed);
    let mut trained = train_probe(&spec, &tr.x, &tr.y, &va.x, &va.y)?;

    let mut degenerate = false;
    if target == TaskTarget::Multipitch {
        let Targets::Binary(truth) = &va.y else { unreachable!() };
        match select_threshold(&trained.scores(&va.x)?, truth) {
            Ok((t, _)) => trained = trained.with_threshold(t),
            Err(Error::Degenerate(msg)) => {
                log::warn!("task `{}`: {msg}; keeping threshold 0.5", task.name);
                degenerate = true;
            }
            Err(e) => return Err(e),
        }
    }

    let value = score_test(&predict(&trained, &te.x)?, &te)?;
    Ok(TaskScore {
        value,
        test_items: te.items(),
        degenerate,
    })
}

fn score_test(pred: &Predictions, test: &SplitData) -> Result<f64> {
    match (pred, &test.y) {
        (Predictions::Classes(p), Targets::Classes(t)) => metric_accuracy(p, t),
        (Predictions::Real(p), Targets::Real(t)) => metric_mse(p.as_slice(), t.as_slice()),
        (Predictions::Multilabel { active, .. }, Targets::Binary(t)) => {
            let per_item = |m: &Tensor2| -> Vec<Tensor2> {
                (0..test.items())
                    .map(|i| {
                        let idx: Vec<usize> = (i * test.frames..(i + 1) * test.frames).collect();
                        m.select_rows(&idx)
                    })
                    .collect()
            };
            metric_f1_track(&per_item(active), &per_item(t), &test.groups)
        }
        _ => unreachable!("prediction kind follows target kind"),
    }
}

/// Probe performance on the task's own stream, evaluated on the test split.
pub fn run_informativeness(
    ds: &Dataset,
    task: &TaskSpec,
    probe: &ProbeConfig,
    seed: u64,
) -> Result<AxisResult> {
    let stream = own_stream(task)?;
    let score = evaluate_task(ds, task, Input::Own(stream), probe, seed)?;
    let mut out = AxisResult::new(
        Axis::Informativeness,
        task.stream,
        &task.name,
        task.metric(),
        score.value,
        seed,
        score.test_items,
    );
    out.degenerate = score.degenerate;
    Ok(out)
}

/// `|metric(g') - metric(g)|` where `g` sees the task's own stream and `g'`
/// sees own ⊕ complement. Both raw scores are kept on the result.
pub fn run_disentanglement_delta(
    ds: &Dataset,
    task: &TaskSpec,
    probe: &ProbeConfig,
    seed: u64,
) -> Result<AxisResult> {
    let stream = own_stream(task)?;
    if !ds.has_stream(stream.complement()) {
        return Err(Error::Empty(format!(
            "dataset has no {} stream to concatenate",
            stream.complement()
        )));
    }
    let own = evaluate_task(ds, task, Input::Own(stream), probe, seed)?;
    let concat = evaluate_task(ds, task, Input::WithComplement(stream), probe, seed)?;
    let mut out = AxisResult::new(
        Axis::DisentanglementDelta,
        task.stream,
        &task.name,
        task.metric(),
        (concat.value - own.value).abs(),
        seed,
        own.test_items,
    );
    out.raw_own = Some(own.value);
    out.raw_concat = Some(concat.value);
    out.degenerate = own.degenerate || concat.degenerate;
    Ok(out)
}
