use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::spec::{Action, Encoding, FactorKind, FactorWorldSpec, LabelField, ParamSampling};
use crate::datamodel::ops::nearest_source;
use crate::datamodel::{
    to_canonical_string, DatasetWriter, LabelSet, LabelVocab, ManifestHeader, ParamNorm, Pianoroll,
    Split, Stream, StreamInfo, ViewMeta,
};
use crate::error::{Error, Result};
use crate::numerics::{dot, matmul_nt, Rng, Tensor2};

pub const WORLD_SPEC_FILE: &str = "world_spec.json";

// Rng stream ids, one per independent source of randomness.
const FACTORS: u64 = 1;
const SPLITS: u64 = 2;
const NOISE: u64 = 3;
const ROLLS: u64 = 4;
const SHUFFLES: u64 = 5;
const ACTIONS: u64 = 100;
const VIEWS: u64 = 200;

#[derive(Debug, Clone)]
pub(crate) struct Item {
    pub id: String,
    pub split: Split,
    pub labels: LabelSet,
    pub streams: BTreeMap<Stream, Tensor2>,
    pub roll: Option<Pianoroll>,
}

#[derive(Debug, Clone)]
pub(crate) struct View {
    pub id: String,
    pub base: usize,
    pub model: usize,
    pub meta: ViewMeta,
    pub streams: BTreeMap<Stream, Tensor2>,
}

/// An action with its random parts drawn.
#[derive(Debug, Clone)]
pub(crate) enum Resolved {
    Additive(Vec<f64>),
    /// `a` is `D x D`; frames map to `a z + p b`.
    Linear { a: Tensor2, b: Vec<f64> },
    Noise,
}

#[derive(Debug, Clone)]
pub(crate) struct World {
    pub items: Vec<Item>,
    pub views: Vec<View>,
    pub actions: Vec<Resolved>,
}

fn unit_vector(d: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn encode(kind: FactorKind, encoding: Encoding, value: f64, gain: f64, out: &mut [f64]) {
    match (kind, encoding) {
        (FactorKind::Categorical(_), Encoding::OneHot) => out[value as usize] = gain,
        (FactorKind::Categorical(_), Encoding::Scalar) => out[0] = gain * value,
        (FactorKind::Continuous([lo, hi]), _) => out[0] = gain * (value - lo) / (hi - lo),
    }
}

fn split_counts(n: usize, spec: &FactorWorldSpec) -> (usize, usize) {
    let train = ((n as f64 * spec.split.train).round() as usize).clamp(1, n - 2);
    let val = ((n as f64 * spec.split.val).round() as usize).clamp(1, n - 1 - train);
    (train, val)
}

impl Resolved {
    fn apply(&self, z: &Tensor2, p: f64, rng: &mut Rng) -> Tensor2 {
        match self {
            Resolved::Additive(u) => {
                let mut out = z.clone();
                for r in 0..out.rows() {
                    for (v, ui) in out.row_mut(r).iter_mut().zip(u) {
                        *v += p * ui;
                    }
                }
                out
            }
            Resolved::Linear { a, b } => {
                let mut out = matmul_nt(z, a).expect("square action matches stream width");
                for r in 0..out.rows() {
                    for (v, bi) in out.row_mut(r).iter_mut().zip(b) {
                        *v += p * bi;
                    }
                }
                out
            }
            Resolved::Noise => Tensor2::from_vec(
                z.rows(),
                z.cols(),
                (0..z.rows() * z.cols()).map(|_| rng.normal()).collect(),
            )
            .expect("sized from z"),
        }
    }
}

/// Samples every item and view of the world in memory.
pub(crate) fn build_world(spec: &FactorWorldSpec) -> Result<World> {
    spec.validate()?;
    let n = spec.n_items;
    let width = n.to_string().len().max(5);

    let mut rng = Rng::fork(spec.seed, FACTORS);
    let values: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            spec.factors
                .iter()
                .map(|f| match f.kind {
                    FactorKind::Categorical(k) => rng.below(k) as f64,
                    FactorKind::Continuous([lo, hi]) => rng.uniform_range(lo, hi),
                })
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    Rng::fork(spec.seed, SPLITS).shuffle(&mut order);
    let (n_train, n_val) = split_counts(n, spec);
    let mut splits = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank < n_train {
            splits[i] = Split::Train;
        } else if rank < n_train + n_val {
            splits[i] = Split::Val;
        }
    }

    // label values, permuted across items for shuffled factors
    let mut shuffles = Rng::fork(spec.seed, SHUFFLES);
    let label_values: Vec<Vec<f64>> = spec
        .factors
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let mut col: Vec<f64> = values.iter().map(|v| v[k]).collect();
            if f.shuffle_labels {
                shuffles.shuffle(&mut col);
            }
            col
        })
        .collect();

    let mut roll_rng = Rng::fork(spec.seed, ROLLS);
    let mut noise = Rng::fork(spec.seed, NOISE);
    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("item{i:0width$}");
        let mut labels = LabelSet {
            group_id: match spec.tracks {
                Some(t) => format!("track{:0width$}", i % t),
                None => id.clone(),
            },
            ..LabelSet::default()
        };
        for (k, f) in spec.factors.iter().enumerate() {
            let v = label_values[k][i];
            match f.label {
                Some(LabelField::InstrumentId) => labels.instrument_id = Some(v as u32),
                Some(LabelField::PitchClass) => labels.pitch_class = Some(v as u32),
                Some(LabelField::ChordType) => labels.chord_type = Some(v as u32),
                Some(LabelField::TempoBpm) => labels.tempo_bpm = Some(v),
                None => {}
            }
        }

        let roll = spec.multipitch.as_ref().map(|m| {
            let mut roll = Pianoroll::zeros(m.label_frames);
            for t in 0..m.label_frames {
                for &p in &m.pitches {
                    if roll_rng.uniform() < m.density {
                        roll.set(t, p, true);
                    }
                }
            }
            roll
        });

        let mut streams = BTreeMap::new();
        for stream in Stream::ALL {
            let frames = spec.frames(stream);
            let dim = spec.dims.get(stream);
            let mut z = Tensor2::zeros(frames, dim);
            let signal = spec.signal_width(stream);
            let (own, leaked) = spec.layout(stream);
            for t in 0..frames {
                let row = z.row_mut(t);
                let mut at = 0;
                if let (Some(m), Stream::Structure, Some(roll)) = (&spec.multipitch, stream, &roll) {
                    let src = nearest_source(t, m.label_frames, frames);
                    for (j, &p) in m.pitches.iter().enumerate() {
                        if roll.get(src, p) {
                            row[j] = m.gain;
                        }
                    }
                    at = m.pitches.len();
                }
                for (&k, leak) in own.iter().map(|k| (k, false)).chain(leaked.iter().map(|k| (k, true))) {
                    let f = &spec.factors[k];
                    let gain = if leak { f.leakage } else { f.gain };
                    let w = f.width();
                    encode(f.kind, f.encoding(), values[i][k], gain, &mut row[at..at + w]);
                    at += w;
                }
                for (d, v) in row.iter_mut().enumerate() {
                    let std = if d < signal { spec.noise_std } else { spec.filler_std };
                    if std > 0.0 {
                        *v += std * noise.normal();
                    }
                }
            }
            streams.insert(stream, z);
        }
        items.push(Item {
            id,
            split: splits[i],
            labels,
            streams,
            roll,
        });
    }

    let mut actions = Vec::with_capacity(spec.transforms.len());
    let mut views = Vec::new();
    for (j, model) in spec.transforms.iter().enumerate() {
        let d = spec.dims.get(model.stream);
        let mut arng = Rng::fork(spec.seed, ACTIONS + j as u64);
        let action = match &model.action {
            Action::Additive { direction } => {
                Resolved::Additive(direction.clone().unwrap_or_else(|| unit_vector(d, &mut arng)))
            }
            Action::Linear { matrix, bias } => {
                let a = match matrix {
                    Some(rows) => Tensor2::from_rows(rows)?,
                    None => {
                        let scale = 1.0 / (d as f64).sqrt();
                        let mut a = Tensor2::identity(d);
                        for v in a.as_mut_slice() {
                            *v += scale * arng.normal();
                        }
                        a
                    }
                };
                let b = bias.clone().unwrap_or_else(|| unit_vector(d, &mut arng));
                Resolved::Linear { a, b }
            }
            Action::ReplaceWithNoise => Resolved::Noise,
        };
        let [lo, hi] = model.raw_range();
        let norm = ParamNorm::from_range(lo, hi);
        let mut vrng = Rng::fork(spec.seed, VIEWS + j as u64);
        for (i, item) in items.iter().enumerate() {
            for v in 0..model.views_per_item {
                let raw = match &model.params {
                    ParamSampling::Values(vals) => vals[vrng.below(vals.len())],
                    ParamSampling::Uniform([a, b]) => vrng.uniform_range(*a, *b),
                };
                let p = norm.apply(raw).clamp(-1.0, 1.0);
                let mut streams = item.streams.clone();
                let acted = action.apply(&item.streams[&model.stream], p, &mut vrng);
                streams.insert(model.stream, acted);
                views.push(View {
                    id: format!("{}.{}{v}", item.id, model.transform),
                    base: i,
                    model: j,
                    meta: ViewMeta {
                        base_item_id: item.id.clone(),
                        transform: model.transform,
                        param_raw: raw,
                        param_norm: p,
                    },
                    streams,
                });
            }
        }
        actions.push(action);
    }
    Ok(World {
        items,
        views,
        actions,
    })
}

fn header(spec: &FactorWorldSpec) -> ManifestHeader {
    let streams = Stream::ALL
        .into_iter()
        .map(|s| {
            (
                s,
                StreamInfo {
                    dim: spec.dims.get(s),
                    frames: spec.frames(s),
                },
            )
        })
        .collect();
    let mut vocab = LabelVocab::default();
    for f in &spec.factors {
        if let FactorKind::Categorical(k) = f.kind {
            match f.label {
                Some(LabelField::InstrumentId) => vocab.instrument_classes = k,
                Some(LabelField::PitchClass) => vocab.pitch_classes = k,
                Some(LabelField::ChordType) => vocab.chord_types = k,
                _ => {}
            }
        }
    }
    let mut h = ManifestHeader::new(streams, vocab);
    for t in &spec.transforms {
        let [lo, hi] = t.raw_range();
        h.param_norm.insert(t.transform, ParamNorm::from_range(lo, hi));
    }
    h
}

/// Writes the world under `out`: `manifest.jsonl`, `tensors/`, and the spec as
/// a JSON sidecar. Returns the manifest path.
pub fn generate_world(spec: &FactorWorldSpec, out: impl AsRef<Path>) -> Result<PathBuf> {
    let out = out.as_ref();
    let world = build_world(spec)?;
    let mut writer = DatasetWriter::create(out, header(spec))?;
    for item in &world.items {
        writer.add_item(
            &item.id,
            item.split,
            item.labels.clone(),
            None,
            &item.streams,
            item.roll.as_ref(),
        )?;
    }
    for view in &world.views {
        let base = &world.items[view.base];
        let labels = LabelSet {
            pianoroll: None,
            ..base.labels.clone()
        };
        writer.add_item(
            &view.id,
            base.split,
            labels,
            Some(view.meta.clone()),
            &view.streams,
            None,
        )?;
    }
    let manifest = writer.finish()?;
    let sidecar = out.join(WORLD_SPEC_FILE);
    fs::write(&sidecar, to_canonical_string(spec)? + "\n").map_err(|e| Error::io(&sidecar, e))?;
    Ok(manifest)
}
