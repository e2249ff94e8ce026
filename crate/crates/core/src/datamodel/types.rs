use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numerics::Tensor2;

/// Number of MIDI pitches in a pianoroll row.
pub const PIANOROLL_PITCHES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    Timbre,
    Structure,
}

impl Stream {
    pub const ALL: [Stream; 2] = [Stream::Timbre, Stream::Structure];

    pub fn complement(self) -> Stream {
        match self {
            Stream::Timbre => Stream::Structure,
            Stream::Structure => Stream::Timbre,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stream::Timbre => "timbre",
            Stream::Structure => "structure",
        }
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    PitchShift,
    TimeStretch,
    InstrumentChange,
}

impl Transform {
    pub fn as_str(self) -> &'static str {
        match self {
            Transform::None => "none",
            Transform::PitchShift => "pitch_shift",
            Transform::TimeStretch => "time_stretch",
            Transform::InstrumentChange => "instrument_change",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Declared shape of one stream: `frames x dim` per item (`frames == 1` is a
/// global vector).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamInfo {
    pub dim: usize,
    pub frames: usize,
}

/// Affine map from a transform's raw parameter to `[-1, 1]`:
/// `param_norm = scale * param_raw + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamNorm {
    pub scale: f64,
    pub offset: f64,
}

impl ParamNorm {
    /// Map sending `[lo, hi]` onto `[-1, 1]`.
    pub fn from_range(lo: f64, hi: f64) -> Self {
        if hi > lo {
            let scale = 2.0 / (hi - lo);
            Self {
                scale,
                offset: -1.0 - scale * lo,
            }
        } else {
            // a single magnitude: keep it at 1
            Self {
                scale: 1.0 / lo.abs().max(f64::MIN_POSITIVE),
                offset: 0.0,
            }
        }
    }

    pub fn apply(&self, raw: f64) -> f64 {
        self.scale * raw + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelVocab {
    pub instrument_classes: usize,
    pub pitch_classes: usize,
    pub chord_types: usize,
}

impl Default for LabelVocab {
    fn default() -> Self {
        Self {
            instrument_classes: 92,
            pitch_classes: 12,
            chord_types: 4,
        }
    }
}

/// First line of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub format: String,
    pub version: u32,
    pub streams: BTreeMap<Stream, StreamInfo>,
    #[serde(default)]
    pub param_norm: BTreeMap<Transform, ParamNorm>,
    pub vocab: LabelVocab,
}

impl ManifestHeader {
    pub const FORMAT: &'static str = "axes-eval-manifest";
    pub const VERSION: u32 = 1;

    pub fn new(streams: BTreeMap<Stream, StreamInfo>, vocab: LabelVocab) -> Self {
        Self {
            format: Self::FORMAT.to_string(),
            version: Self::VERSION,
            streams,
            param_norm: BTreeMap::new(),
            vocab,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_class: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chord_type: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tempo_bpm: Option<f64>,
    /// Path of a `|u1` npy file of shape `(T_lab, 128)`, relative to the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pianoroll: Option<String>,
    pub group_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewMeta {
    pub base_item_id: String,
    pub transform: Transform,
    pub param_raw: f64,
    pub param_norm: f64,
}

impl ViewMeta {
    pub fn clean(item_id: &str) -> Self {
        Self {
            base_item_id: item_id.to_string(),
            transform: Transform::None,
            param_raw: 0.0,
            param_norm: 0.0,
        }
    }
}

/// One manifest line after the header. A missing `view` means a clean item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub item_id: String,
    pub split: Split,
    pub tensors: BTreeMap<Stream, String>,
    pub labels: LabelSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<ViewMeta>,
}

impl ManifestRecord {
    pub fn transform(&self) -> Transform {
        self.view.as_ref().map_or(Transform::None, |v| v.transform)
    }

    pub fn is_clean(&self) -> bool {
        self.transform() == Transform::None
    }

    pub fn view_meta(&self) -> ViewMeta {
        self.view
            .clone()
            .unwrap_or_else(|| ViewMeta::clean(&self.item_id))
    }
}

/// One item's embedding for one stream, `frames x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub item_id: String,
    pub stream: Stream,
    pub data: Tensor2,
    pub frame_rate: usize,
}

impl EmbeddingRecord {
    pub fn frames(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }
}

/// Binary `frames x 128` activity matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pianoroll {
    frames: usize,
    data: Vec<u8>,
}

impl Pianoroll {
    pub fn new(frames: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == frames * PIANOROLL_PITCHES && data.iter().all(|&v| v <= 1))
            .then_some(Self { frames, data })
    }

    pub fn zeros(frames: usize) -> Self {
        Self {
            frames,
            data: vec![0; frames * PIANOROLL_PITCHES],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        &self.data[t * PIANOROLL_PITCHES..(t + 1) * PIANOROLL_PITCHES]
    }

    pub fn get(&self, t: usize, pitch: usize) -> bool {
        self.data[t * PIANOROLL_PITCHES + pitch] == 1
    }

    pub fn set(&mut self, t: usize, pitch: usize, on: bool) {
        self.data[t * PIANOROLL_PITCHES + pitch] = on as u8;
    }
}
