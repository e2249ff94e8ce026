use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::manifest::DatasetManifest;
use super::npy;
use super::types::{
    LabelSet, ManifestHeader, ManifestRecord, Pianoroll, Split, Stream, ViewMeta,
    PIANOROLL_PITCHES,
};
use crate::error::{Error, Result};
use crate::numerics::Tensor2;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
const TENSOR_DIR: &str = "tensors";

/// Writes tensor files and assembles a canonical manifest under `root`.
///
/// Records are sorted by item_id when the manifest is written.
pub struct DatasetWriter {
    root: PathBuf,
    header: ManifestHeader,
    records: Vec<ManifestRecord>,
}

impl DatasetWriter {
    pub fn create(root: impl Into<PathBuf>, header: ManifestHeader) -> Result<Self> {
        let root = root.into();
        let dir = root.join(TENSOR_DIR);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            root,
            header,
            records: Vec::new(),
        })
    }

    pub fn header_mut(&mut self) -> &mut ManifestHeader {
        &mut self.header
    }

    pub fn add_item(
        &mut self,
        item_id: &str,
        split: Split,
        mut labels: LabelSet,
        view: Option<ViewMeta>,
        tensors: &BTreeMap<Stream, Tensor2>,
        pianoroll: Option<&Pianoroll>,
    ) -> Result<()> {
        if item_id.is_empty()
            || !item_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            return Err(Error::validation(item_id, "item_id is not filename-safe"));
        }
        let mut paths = BTreeMap::new();
        for (stream, t) in tensors {
            let rel = format!("{TENSOR_DIR}/{item_id}.{stream}.npy");
            write_file(&self.root.join(&rel), |w| {
                npy::write_f32(w, t.shape(), t.as_slice())
            })?;
            paths.insert(*stream, rel);
        }
        labels.pianoroll = match pianoroll {
            Some(roll) => {
                let rel = format!("{TENSOR_DIR}/{item_id}.roll.npy");
                write_file(&self.root.join(&rel), |w| {
                    npy::write_u8(w, (roll.frames(), PIANOROLL_PITCHES), roll.as_slice())
                })?;
                Some(rel)
            }
            None => None,
        };
        self.records.push(ManifestRecord {
            item_id: item_id.to_string(),
            split,
            tensors: paths,
            labels,
            view,
        });
        Ok(())
    }

    /// Writes `manifest.jsonl` and returns its path.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.records.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        let manifest = DatasetManifest {
            header: self.header,
            records: self.records,
        };
        manifest.validate_structure()?;
        let path = self.root.join(MANIFEST_FILE);
        manifest.write(&path)?;
        Ok(path)
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))
}
