//! Single-file probe container.
//!
//! Layout: the 8-byte magic `AXPROBE1`, then frames of `u64` little-endian
//! length followed by that many bytes. Frame 0 is a canonical JSON header;
//! every later frame is an npy `<f8` block, in the order the header lists.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{Dense, Network};
use super::spec::ProbeSpec;
use super::train::{Standardizer, TrainedProbe};
use crate::datamodel::npy::{self, NpyData};
use crate::datamodel::to_canonical_string;
use crate::error::{Error, Result};
use crate::numerics::Tensor2;

const MAGIC: &[u8; 8] = b"AXPROBE1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContainerHeader {
    spec: ProbeSpec,
    best_val_loss: f64,
    epochs_run: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    blocks: Vec<String>,
}

fn push_frame(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(bytes);
}

fn npy_block(t: &Tensor2) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    npy::write_f64(&mut buf, t.shape(), t.as_slice())?;
    Ok(buf)
}

impl TrainedProbe {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let dim = self.spec.input_dim;
        let mut blocks = vec![
            ("mean".to_string(), Tensor2::from_vec(1, dim, self.standardizer.mean.clone())?),
            ("std".to_string(), Tensor2::from_vec(1, dim, self.standardizer.std.clone())?),
        ];
        for (i, layer) in self.network.layers.iter().enumerate() {
            blocks.push((format!("w{i}"), layer.w.clone()));
            blocks.push((format!("b{i}"), layer.b.clone()));
        }
        let header = ContainerHeader {
            spec: self.spec,
            best_val_loss: self.best_val_loss,
            epochs_run: self.epochs_run,
            threshold: self.threshold,
            blocks: blocks.iter().map(|(n, _)| n.clone()).collect(),
        };
        let mut out = MAGIC.to_vec();
        push_frame(&mut out, to_canonical_string(&header)?.as_bytes());
        for (_, t) in &blocks {
            push_frame(&mut out, &npy_block(t)?);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Npy(format!("probe container: {msg}"));
        let mut rest = bytes.strip_prefix(MAGIC).ok_or_else(|| bad("bad magic"))?;
        let mut frames = Vec::new();
        while !rest.is_empty() {
            if rest.len() < 8 {
                return Err(bad("truncated frame length"));
            }
            let (len, tail) = rest.split_at(8);
            let len = u64::from_le_bytes(len.try_into().expect("8 bytes")) as usize;
            if tail.len() < len {
                return Err(bad("truncated frame"));
            }
            let (frame, tail) = tail.split_at(len);
            frames.push(frame);
            rest = tail;
        }
        let (head, blocks) = frames.split_first().ok_or_else(|| bad("no header"))?;
        let header: ContainerHeader = serde_json::from_slice(head)?;
        header.spec.validate()?;
        if header.blocks.len() != blocks.len() {
            return Err(bad("block count disagrees with header"));
        }
        let mut tensors = Vec::with_capacity(blocks.len());
        for mut b in blocks.iter().copied() {
            let arr = npy::read(&mut b)?;
            let NpyData::Float(values) = arr.data else {
                return Err(bad("weight block is not float"));
            };
            tensors.push(Tensor2::from_vec(arr.shape.0, arr.shape.1, values)?);
        }
        let mut iter = tensors.into_iter();
        let mean = iter.next().ok_or_else(|| bad("missing mean"))?.into_vec();
        let std = iter.next().ok_or_else(|| bad("missing std"))?.into_vec();
        let mut layers = Vec::new();
        while let (Some(w), Some(b)) = (iter.next(), iter.next()) {
            layers.push(Dense { w, b });
        }
        let expected_layers = if header.spec.hidden_dim.is_some() { 2 } else { 1 };
        if layers.len() != expected_layers || mean.len() != header.spec.input_dim {
            return Err(bad("weights do not match spec"));
        }
        Ok(TrainedProbe {
            spec: header.spec,
            standardizer: Standardizer { mean, std },
            best_val_loss: header.best_val_loss,
            epochs_run: header.epochs_run,
            threshold: header.threshold,
            network: Network {
                kind: header.spec.kind,
                layers,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
