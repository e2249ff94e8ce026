use serde::{Deserialize, Serialize};

use crate::datamodel::{Stream, Transform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Categorical(usize),
    Continuous([f64; 2]),
}

/// How a factor value is written into embedding dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// `k` dims, `gain` at the class index.
    OneHot,
    /// One dim: the class index, or `(v - lo) / (hi - lo)` for continuous factors.
    Scalar,
}

/// Manifest label a factor is written to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelField {
    InstrumentId,
    PitchClass,
    ChordType,
    TempoBpm,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub name: String,
    pub kind: FactorKind,
    /// Stream that carries the factor.
    pub stream: Stream,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<Encoding>,
    /// Scale of the encoding in its own stream; 0 leaves only noise there.
    #[serde(default = "one")]
    pub gain: f64,
    /// Scale γ of the copy written into the complementary stream.
    #[serde(default)]
    pub leakage: f64,
    /// Write labels permuted across items, so they carry no information.
    #[serde(default)]
    pub shuffle_labels: bool,
}

impl FactorSpec {
    pub fn encoding(&self) -> Encoding {
        self.encoding.unwrap_or(match self.kind {
            FactorKind::Categorical(_) => Encoding::OneHot,
            FactorKind::Continuous(_) => Encoding::Scalar,
        })
    }

    /// Number of dims one copy of the encoding occupies.
    pub fn width(&self) -> usize {
        match (self.kind, self.encoding()) {
            (FactorKind::Categorical(k), Encoding::OneHot) => k,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// Every frame moves by `p * u`; `u` is a random unit vector unless given.
    Additive {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
    /// Every frame maps to `A z + p b`; `A` defaults to `I + G / sqrt(D)` with
    /// Gaussian `G`, `b` to a random unit vector.
    Linear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bias: Option<Vec<f64>>,
    },
    /// The transformed view is fresh standard normal noise.
    ReplaceWithNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSampling {
    Values(Vec<f64>),
    Uniform([f64; 2]),
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformModel {
    pub transform: Transform,
    /// Stream the action applies to; the other stream is copied unchanged.
    pub stream: Stream,
    pub action: Action,
    pub params: ParamSampling,
    /// Raw range mapped onto `[-1, 1]`; defaults to the span of `params`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default = "one_usize")]
    pub views_per_item: usize,
}

impl TransformModel {
    pub fn raw_range(&self) -> [f64; 2] {
        self.range.unwrap_or(match &self.params {
            ParamSampling::Uniform(r) => *r,
            ParamSampling::Values(v) => [
                v.iter().copied().fold(f64::INFINITY, f64::min),
                v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ],
        })
    }
}

/// Random pianorolls over a small pitch set, written multi-hot into the
/// leading structure dims of every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultipitchSpec {
    pub label_frames: usize,
    pub pitches: Vec<usize>,
    /// Probability that a pitch is active in a label frame.
    pub density: f64,
    #[serde(default = "one")]
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamDims {
    pub timbre: usize,
    pub structure: usize,
}

impl StreamDims {
    pub fn get(&self, s: Stream) -> usize {
        match s {
            Stream::Timbre => self.timbre,
            Stream::Structure => self.structure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.7, val: 0.15 }
    }
}

/// A synthetic two-stream world with known factor structure.
///
/// Each stream is laid out as contiguous blocks: the multipitch block
/// (structure only), encodings of the factors it carries, leaked copies of
/// the complementary stream's factors, then filler dims of pure noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorWorldSpec {
    pub n_items: usize,
    pub seed: u64,
    pub dims: StreamDims,
    pub factors: Vec<FactorSpec>,
    /// Frames of the structure stream; the timbre stream is always global.
    #[serde(default = "one_usize")]
    pub structure_frames: usize,
    /// Std of Gaussian noise added to every signal dim, per frame.
    #[serde(default)]
    pub noise_std: f64,
    /// Std of the filler dims.
    #[serde(default = "one")]
    pub filler_std: f64,
    #[serde(default)]
    pub transforms: Vec<TransformModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipitch: Option<MultipitchSpec>,
    /// Items are spread round-robin over this many tracks (group ids); by
    /// default every item is its own track.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracks: Option<usize>,
    #[serde(default)]
    pub split: SplitFractions,
}

impl FactorWorldSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// `(own, leaked)` factor indices laid out in `stream`, in spec order.
    pub fn layout(&self, stream: Stream) -> (Vec<usize>, Vec<usize>) {
        let own = (0..self.factors.len())
            .filter(|&i| self.factors[i].stream == stream)
            .collect();
        let leaked = (0..self.factors.len())
            .filter(|&i| self.factors[i].stream != stream && self.factors[i].leakage > 0.0)
            .collect();
        (own, leaked)
    }

    pub fn frames(&self, stream: Stream) -> usize {
        match stream {
            Stream::Timbre => 1,
            Stream::Structure => self.structure_frames,
        }
    }

    pub(crate) fn multipitch_width(&self, stream: Stream) -> usize {
        match (&self.multipitch, stream) {
            (Some(m), Stream::Structure) => m.pitches.len(),
            _ => 0,
        }
    }

    /// Dims used by signal blocks in `stream`.
    pub fn signal_width(&self, stream: Stream) -> usize {
        let (own, leaked) = self.layout(stream);
        self.multipitch_width(stream)
            + own.iter().chain(&leaked).map(|&i| self.factors[i].width()).sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("world spec: {msg}")));
        if self.n_items < 3 {
            return bad("need at least 3 items".into());
        }
        if self.structure_frames == 0 {
            return bad("structure_frames must be >= 1".into());
        }
        if !(self.noise_std >= 0.0 && self.filler_std >= 0.0) {
            return bad("noise_std and filler_std must be non-negative".into());
        }
        let s = self.split;
        if !(s.train > 0.0 && s.val > 0.0 && s.train + s.val < 1.0) {
            return bad("split fractions must leave room for all three splits".into());
        }
        let mut labels = Vec::new();
        for f in &self.factors {
            if !(0.0..=1.0).contains(&f.leakage) {
                return bad(format!("factor `{}`: leakage must lie in [0, 1]", f.name));
            }
            if !f.gain.is_finite() || f.gain < 0.0 {
                return bad(format!("factor `{}`: gain must be non-negative", f.name));
            }
            match (f.kind, f.encoding(), f.label) {
                (FactorKind::Categorical(k), _, _) if k < 2 => {
                    return bad(format!("factor `{}`: need at least 2 classes", f.name))
                }
                (FactorKind::Continuous([lo, hi]), enc, label) => {
                    if hi <= lo || !(lo.is_finite() && hi.is_finite()) {
                        return bad(format!("factor `{}`: empty range", f.name));
                    }
                    if enc != Encoding::Scalar {
                        return bad(format!("factor `{}`: continuous factors are scalar", f.name));
                    }
                    if label.is_some_and(|l| l != LabelField::TempoBpm) {
                        return bad(format!("factor `{}`: continuous labels go to tempo_bpm", f.name));
                    }
                    if label == Some(LabelField::TempoBpm) && lo <= 0.0 {
                        return bad(format!("factor `{}`: tempo must stay positive", f.name));
                    }
                }
                (FactorKind::Categorical(_), _, Some(LabelField::TempoBpm)) => {
                    return bad(format!("factor `{}`: tempo needs a continuous factor", f.name))
                }
                _ => {}
            }
            if let Some(l) = f.label {
                if labels.contains(&l) {
                    return bad(format!("label {l:?} assigned twice"));
                }
                labels.push(l);
            }
        }
        for stream in Stream::ALL {
            let need = self.signal_width(stream);
            if need > self.dims.get(stream) {
                return bad(format!(
                    "{stream} stream needs {need} signal dims but has {}",
                    self.dims.get(stream)
                ));
            }
            if self.dims.get(stream) == 0 {
                return bad(format!("{stream} stream has no dims"));
            }
        }
        if let Some(m) = &self.multipitch {
            if m.label_frames == 0 || m.pitches.is_empty() || !(0.0..=1.0).contains(&m.density) {
                return bad("multipitch needs frames, pitches and a density in [0, 1]".into());
            }
            if m.pitches.iter().any(|&p| p >= crate::datamodel::PIANOROLL_PITCHES) {
                return bad("multipitch pitch outside 0..128".into());
            }
        }
        if self.tracks == Some(0) {
            return bad("tracks must be >= 1".into());
        }
        let mut seen = Vec::new();
        for t in &self.transforms {
            if t.transform == Transform::None {
                return bad("transform `none` cannot be modelled".into());
            }
            if seen.contains(&t.transform) {
                return bad(format!("transform {} modelled twice", t.transform));
            }
            seen.push(t.transform);
            if t.views_per_item == 0 {
                return bad("views_per_item must be >= 1".into());
            }
            let [lo, hi] = t.raw_range();
            let within = |v: f64| v >= lo && v <= hi;
            let ok = match &t.params {
                ParamSampling::Values(v) => !v.is_empty() && v.iter().all(|&x| within(x)),
                ParamSampling::Uniform([a, b]) => a < b && within(*a) && within(*b),
            };
            if !ok || !lo.is_finite() || !hi.is_finite() {
                return bad(format!("{}: parameters must lie inside the range", t.transform));
            }
            if hi <= lo && lo == 0.0 {
                return bad(format!("{}: a single zero parameter cannot be normalised", t.transform));
            }
            let d = self.dims.get(t.stream);
            match &t.action {
                Action::Additive { direction: Some(u) } if u.len() != d => {
                    return bad(format!("{}: direction has the wrong length", t.transform))
                }
                Action::Linear { matrix, bias } => {
                    if matrix.as_ref().is_some_and(|m| m.len() != d || m.iter().any(|r| r.len() != d)) {
                        return bad(format!("{}: matrix must be {d} x {d}", t.transform));
                    }
                    if bias.as_ref().is_some_and(|b| b.len() != d) {
                        return bad(format!("{}: bias has the wrong length", t.transform));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
