use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::canonical::to_canonical_string;
use super::npy::{self, NpyData};
use super::types::{
    EmbeddingRecord, ManifestHeader, ManifestRecord, Pianoroll, Split, Stream, Transform,
    PIANOROLL_PITCHES,
};
use crate::error::{Error, Result};
use crate::numerics::Tensor2;

const PARAM_TOLERANCE: f64 = 1e-6;

/// Header plus records, as they appear in the JSON Lines file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    /// Parses JSON Lines text. Blank lines are not allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty manifest".into(),
        })?;
        let header: ManifestHeader = serde_json::from_str(first).map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        let mut records = Vec::new();
        for (i, line) in lines {
            let rec: ManifestRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            records.push(rec);
        }
        Ok(Self { header, records })
    }

    /// Canonical serialization: sorted keys, no whitespace, one object per line.
    pub fn to_canonical_string(&self) -> Result<String> {
        let mut out = to_canonical_string(&self.header)?;
        out.push('\n');
        for rec in &self.records {
            out.push_str(&to_canonical_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_canonical_string()?).map_err(|e| Error::io(path, e))
    }

    /// Checks every invariant that does not require reading tensor files.
    pub fn validate_structure(&self) -> Result<()> {
        let h = &self.header;
        if h.format != ManifestHeader::FORMAT || h.version != ManifestHeader::VERSION {
            return Err(Error::validation(
                "<header>",
                format!("unsupported format {} v{}", h.format, h.version),
            ));
        }
        if h.streams.is_empty() {
            return Err(Error::validation("<header>", "no streams declared"));
        }
        for (stream, info) in &h.streams {
            if info.dim == 0 || info.frames == 0 {
                return Err(Error::validation(
                    "<header>",
                    format!("stream {stream} has zero dim or frames"),
                ));
            }
        }
        for (t, norm) in &h.param_norm {
            if !(norm.scale.is_finite() && norm.offset.is_finite()) || norm.scale == 0.0 {
                return Err(Error::validation(
                    "<header>",
                    format!("param_norm for {t} is not a monotone affine map"),
                ));
            }
        }

        let mut by_id: HashMap<&str, &ManifestRecord> = HashMap::new();
        for rec in &self.records {
            if by_id.insert(rec.item_id.as_str(), rec).is_some() {
                return Err(Error::validation(&rec.item_id, "duplicate item_id"));
            }
        }

        for rec in &self.records {
            let id = rec.item_id.as_str();
            let declared: Vec<Stream> = h.streams.keys().copied().collect();
            let present: Vec<Stream> = rec.tensors.keys().copied().collect();
            if declared != present {
                return Err(Error::validation(
                    id,
                    format!("tensors for {present:?}, header declares {declared:?}"),
                ));
            }
            self.validate_labels(rec)?;
            self.validate_view(rec, &by_id)?;
        }
        Ok(())
    }

    fn validate_labels(&self, rec: &ManifestRecord) -> Result<()> {
        let id = rec.item_id.as_str();
        let l = &rec.labels;
        let vocab = &self.header.vocab;
        let check = |value: Option<u32>, n: usize, name: &str| -> Result<()> {
            match value {
                Some(v) if v as usize >= n => Err(Error::validation(
                    id,
                    format!("{name} {v} outside vocabulary of {n}"),
                )),
                _ => Ok(()),
            }
        };
        check(l.instrument_id, vocab.instrument_classes, "instrument_id")?;
        check(l.pitch_class, vocab.pitch_classes, "pitch_class")?;
        check(l.chord_type, vocab.chord_types, "chord_type")?;
        if let Some(bpm) = l.tempo_bpm {
            if !(bpm.is_finite() && bpm > 0.0) {
                return Err(Error::validation(id, format!("tempo_bpm {bpm} must be > 0")));
            }
        }
        if l.group_id.is_empty() {
            return Err(Error::validation(id, "empty group_id"));
        }
        Ok(())
    }

    fn validate_view(
        &self,
        rec: &ManifestRecord,
        by_id: &HashMap<&str, &ManifestRecord>,
    ) -> Result<()> {
        let id = rec.item_id.as_str();
        let Some(view) = &rec.view else {
            return Ok(());
        };
        if !(view.param_raw.is_finite() && view.param_norm.is_finite()) {
            return Err(Error::validation(id, "non-finite transform parameter"));
        }
        if view.transform == Transform::None {
            if view.param_raw != 0.0 || view.param_norm != 0.0 || view.base_item_id != id {
                return Err(Error::validation(
                    id,
                    "untransformed view must reference itself with zero parameters",
                ));
            }
            return Ok(());
        }
        let base = by_id.get(view.base_item_id.as_str()).ok_or_else(|| {
            Error::validation(
                id,
                format!("base_item_id `{}` does not exist", view.base_item_id),
            )
        })?;
        if !base.is_clean() {
            return Err(Error::validation(
                id,
                format!("base `{}` is itself a transformed view", base.item_id),
            ));
        }
        if base.split != rec.split {
            return Err(Error::validation(
                id,
                format!("base `{}` is in a different split", base.item_id),
            ));
        }
        let norm = self.header.param_norm.get(&view.transform).ok_or_else(|| {
            Error::validation(
                id,
                format!("header declares no param_norm for {}", view.transform),
            )
        })?;
        let expected = norm.apply(view.param_raw);
        if (expected - view.param_norm).abs() > PARAM_TOLERANCE {
            return Err(Error::validation(
                id,
                format!(
                    "param_norm {} disagrees with header map ({expected})",
                    view.param_norm
                ),
            ));
        }
        if view.param_norm.abs() > 1.0 + PARAM_TOLERANCE {
            return Err(Error::validation(
                id,
                format!("param_norm {} outside [-1, 1]", view.param_norm),
            ));
        }
        Ok(())
    }
}

/// A validated manifest together with every tensor it references.
///
/// Immutable after load.
#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    manifest: DatasetManifest,
    index: HashMap<String, usize>,
    embeddings: HashMap<(usize, Stream), EmbeddingRecord>,
    pianorolls: HashMap<usize, Pianoroll>,
    content_hash: String,
}

/// Loads and fully validates a manifest and the tensors it references.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse {
        line: 1,
        msg: format!("not utf-8: {e}"),
    })?;
    let manifest = DatasetManifest::parse(text)?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Dataset::from_manifest(root, manifest, &bytes)
}

impl Dataset {
    fn from_manifest(root: PathBuf, manifest: DatasetManifest, manifest_bytes: &[u8]) -> Result<Self> {
        manifest.validate_structure()?;
        let mut hasher = Sha256::new();
        hasher.update(manifest_bytes);
        let mut embeddings = HashMap::new();
        let mut pianorolls = HashMap::new();
        for (i, rec) in manifest.records.iter().enumerate() {
            for (&stream, rel) in &rec.tensors {
                let info = manifest.header.streams[&stream];
                let arr = read_npy(&root.join(rel), &rec.item_id, &mut hasher)?;
                let NpyData::Float(values) = arr.data else {
                    return Err(Error::validation(
                        &rec.item_id,
                        format!("{stream} tensor is not a float array"),
                    ));
                };
                if arr.shape != (info.frames, info.dim) {
                    return Err(Error::validation(
                        &rec.item_id,
                        format!(
                            "{stream} tensor has shape {:?}, header declares ({}, {})",
                            arr.shape, info.frames, info.dim
                        ),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::validation(
                        &rec.item_id,
                        format!("{stream} tensor contains non-finite values"),
                    ));
                }
                let data = Tensor2::from_vec(arr.shape.0, arr.shape.1, values)?;
                embeddings.insert(
                    (i, stream),
                    EmbeddingRecord {
                        item_id: rec.item_id.clone(),
                        stream,
                        data,
                        frame_rate: info.frames,
                    },
                );
            }
            if let Some(rel) = &rec.labels.pianoroll {
                let arr = read_npy(&root.join(rel), &rec.item_id, &mut hasher)?;
                let bad = || Error::validation(&rec.item_id, "pianoroll must be (T, 128) of 0/1 bytes");
                let NpyData::Byte(bytes) = arr.data else {
                    return Err(bad());
                };
                if arr.shape.1 != PIANOROLL_PITCHES || arr.shape.0 == 0 {
                    return Err(bad());
                }
                let roll = Pianoroll::new(arr.shape.0, bytes).ok_or_else(bad)?;
                pianorolls.insert(i, roll);
            }
        }
        let index = manifest
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.item_id.clone(), i))
            .collect();
        Ok(Self {
            root,
            manifest,
            index,
            embeddings,
            pianorolls,
            content_hash: hex::encode(hasher.finalize()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn header(&self) -> &ManifestHeader {
        &self.manifest.header
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.manifest.records
    }

    /// SHA-256 over the manifest bytes followed by every referenced file's
    /// bytes, in manifest order.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn has_stream(&self, stream: Stream) -> bool {
        self.manifest.header.streams.contains_key(&stream)
    }

    pub fn record(&self, item_id: &str) -> Option<&ManifestRecord> {
        self.index.get(item_id).map(|&i| &self.manifest.records[i])
    }

    pub fn embedding(&self, item_id: &str, stream: Stream) -> Option<&EmbeddingRecord> {
        let i = *self.index.get(item_id)?;
        self.embeddings.get(&(i, stream))
    }

    pub fn pianoroll(&self, item_id: &str) -> Result<&Pianoroll> {
        self.index
            .get(item_id)
            .and_then(|i| self.pianorolls.get(i))
            .ok_or_else(|| Error::MissingLabel {
                item_id: item_id.to_string(),
                label: "pianoroll".into(),
            })
    }

    /// Clean (untransformed) records of a split, sorted by item_id.
    pub fn clean_records(&self, split: Split) -> Vec<&ManifestRecord> {
        let mut out: Vec<&ManifestRecord> = self
            .manifest
            .records
            .iter()
            .filter(|r| r.split == split && r.is_clean())
            .collect();
        out.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        out
    }

    /// Number of records per split and transform, for diagnostics.
    pub fn summary(&self) -> BTreeMap<(Split, Transform), usize> {
        let mut out = BTreeMap::new();
        for r in &self.manifest.records {
            *out.entry((r.split, r.transform())).or_insert(0) += 1;
        }
        out
    }
}

fn read_npy(path: &Path, item_id: &str, hasher: &mut Sha256) -> Result<npy::NpyArray> {
    let bytes = fs::read(path).map_err(|e| {
        Error::validation(item_id, format!("cannot read {}: {e}", path.display()))
    })?;
    hasher.update(&bytes);
    npy::read(&mut bytes.as_slice())
        .map_err(|e| Error::validation(item_id, format!("{}: {e}", path.display())))
}
