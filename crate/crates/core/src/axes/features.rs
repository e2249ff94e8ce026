//! Design matrices and targets for the probe-based axes.

use super::types::TaskTarget;
use crate::datamodel::{pool_time, Dataset, ManifestRecord, Split, Stream, PIANOROLL_PITCHES};
use crate::error::{Error, Result};
use crate::numerics::Tensor2;
use crate::probes::Targets;

/// Which embedding(s) feed the probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Input {
    Own(Stream),
    /// Own stream first, then the complementary stream.
    WithComplement(Stream),
}

impl Input {
    fn own(self) -> Stream {
        match self {
            Input::Own(s) | Input::WithComplement(s) => s,
        }
    }
}

/// One split's probe data. Frame-level tasks contribute `frames` rows per item.
#[derive(Debug, Clone)]
pub(crate) struct SplitData {
    pub x: Tensor2,
    pub y: Targets,
    pub groups: Vec<String>,
    pub frames: usize,
}

impl SplitData {
    pub fn items(&self) -> usize {
        self.groups.len()
    }
}

pub(crate) fn has_label(rec: &ManifestRecord, target: TaskTarget) -> bool {
    let l = &rec.labels;
    match target {
        TaskTarget::InstrumentClass => l.instrument_id.is_some(),
        TaskTarget::PitchClass => l.pitch_class.is_some(),
        TaskTarget::ChordType => l.chord_type.is_some(),
        TaskTarget::TempoRegression => l.tempo_bpm.is_some(),
        TaskTarget::Multipitch => l.pianoroll.is_some(),
    }
}

pub(crate) fn class_label(rec: &ManifestRecord, target: TaskTarget) -> Option<usize> {
    let l = &rec.labels;
    let v = match target {
        TaskTarget::InstrumentClass => l.instrument_id,
        TaskTarget::PitchClass => l.pitch_class,
        TaskTarget::ChordType => l.chord_type,
        _ => None,
    };
    v.map(|v| v as usize)
}

pub(crate) fn class_count(ds: &Dataset, target: TaskTarget) -> usize {
    let v = &ds.header().vocab;
    match target {
        TaskTarget::InstrumentClass => v.instrument_classes,
        TaskTarget::PitchClass => v.pitch_classes,
        TaskTarget::ChordType => v.chord_types,
        _ => 0,
    }
}

/// Clean records of `split` carrying the label for `target`.
pub(crate) fn labelled(ds: &Dataset, split: Split, target: TaskTarget) -> Vec<&ManifestRecord> {
    ds.clean_records(split)
        .into_iter()
        .filter(|r| has_label(r, target))
        .collect()
}

fn embedding<'a>(ds: &'a Dataset, id: &str, stream: Stream) -> Result<&'a crate::datamodel::EmbeddingRecord> {
    ds.embedding(id, stream)
        .ok_or_else(|| Error::Empty(format!("item `{id}` has no {stream} embedding")))
}

/// Pooled `1 x D` vector of one stream.
pub(crate) fn pooled(ds: &Dataset, id: &str, stream: Stream) -> Result<Tensor2> {
    Ok(pool_time(embedding(ds, id, stream)?).data)
}

/// Feature rows of one item: one pooled row, or every frame of the own stream
/// when `framewise`. The complement is always pooled and, frame-wise, repeated
/// on every row.
pub(crate) fn item_features(ds: &Dataset, id: &str, input: Input, framewise: bool) -> Result<Tensor2> {
    let own = if framewise {
        embedding(ds, id, input.own())?.data.clone()
    } else {
        pooled(ds, id, input.own())?
    };
    match input {
        Input::Own(_) => Ok(own),
        Input::WithComplement(s) => {
            let comp = pooled(ds, id, s.complement())?;
            let rows = vec![comp.row(0); own.rows()];
            own.hcat(&Tensor2::from_rows(&rows)?)
        }
    }
}

/// Train-split min and max of the tempo labels.
pub(crate) fn tempo_range(train: &[&ManifestRecord]) -> Result<(f64, f64)> {
    let (lo, hi) = train
        .iter()
        .filter_map(|r| r.labels.tempo_bpm)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi <= lo {
        return Err(Error::Degenerate("tempo labels are constant on the train split".into()));
    }
    Ok((lo, hi))
}

/// Builds the probe data for one split. `tempo` carries the train-split range
/// used to min-max normalise tempo targets.
pub(crate) fn split_data(
    ds: &Dataset,
    records: &[&ManifestRecord],
    target: TaskTarget,
    input: Input,
    tempo: Option<(f64, f64)>,
) -> Result<SplitData> {
    let framewise = target == TaskTarget::Multipitch;
    let frames = if framewise {
        ds.header().streams[&input.own()].frames
    } else {
        1
    };
    let mut blocks = Vec::with_capacity(records.len());
    let mut groups = Vec::with_capacity(records.len());
    for rec in records {
        blocks.push(item_features(ds, &rec.item_id, input, framewise)?);
        groups.push(rec.labels.group_id.clone());
    }
    let x = if blocks.is_empty() {
        Tensor2::zeros(0, 0)
    } else {
        Tensor2::vcat(&blocks)?
    };
    let missing = |rec: &ManifestRecord, label: &str| Error::MissingLabel {
        item_id: rec.item_id.clone(),
        label: label.into(),
    };
    let y = match target {
        TaskTarget::InstrumentClass | TaskTarget::PitchClass | TaskTarget::ChordType => {
            let classes = records
                .iter()
                .map(|r| class_label(r, target).ok_or_else(|| missing(r, "class")))
                .collect::<Result<Vec<_>>>()?;
            Targets::Classes(classes)
        }
        TaskTarget::TempoRegression => {
            let (lo, hi) = tempo.expect("tempo range supplied for tempo tasks");
            let values = records
                .iter()
                .map(|r| {
                    r.labels
                        .tempo_bpm
                        .map(|b| (b - lo) / (hi - lo))
                        .ok_or_else(|| missing(r, "tempo_bpm"))
                })
                .collect::<Result<Vec<_>>>()?;
            Targets::Real(Tensor2::from_vec(values.len(), 1, values)?)
        }
        TaskTarget::Multipitch => {
            let mut data = Vec::with_capacity(records.len() * frames * PIANOROLL_PITCHES);
            for rec in records {
                let roll = ds.aligned_pianoroll(&rec.item_id, frames)?;
                data.extend(roll.as_slice().iter().map(|&b| b as f64));
            }
            Targets::Binary(Tensor2::from_vec(records.len() * frames, PIANOROLL_PITCHES, data)?)
        }
    };
    Ok(SplitData { x, y, groups, frames })
}
