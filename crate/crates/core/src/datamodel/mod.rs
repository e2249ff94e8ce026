//! On-disk dataset contract: a JSON Lines manifest plus npy tensor files, and
//! the pooling, pairing and alignment operations built on it.

mod canonical;
mod manifest;
pub mod npy;
pub(crate) mod ops;
mod types;
mod writer;

pub use canonical::to_canonical_string;
pub use manifest::{load_manifest, Dataset, DatasetManifest};
pub use ops::{align_pianoroll, concat_streams, pair_views, pool_time, ViewPair};
pub use types::{
    EmbeddingRecord, LabelSet, LabelVocab, ManifestHeader, ManifestRecord, ParamNorm, Pianoroll,
    Split, Stream, StreamInfo, Transform, ViewMeta, PIANOROLL_PITCHES,
};
pub use writer::{DatasetWriter, MANIFEST_FILE};
