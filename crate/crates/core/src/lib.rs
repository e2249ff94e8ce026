//! Evaluation engine for paired timbre/structure embeddings.
//!
//! Shallow probes trained on frozen embeddings measure four properties of each
//! stream: informativeness, equivariance (parameter and representation
//! prediction), invariance, and disentanglement (the change in probe
//! performance when the complementary stream is concatenated). A synthetic
//! factor-world generator provides datasets with known ground truth for every
//! metric.

pub mod axes;
pub mod datamodel;
pub mod error;
pub mod numerics;
pub mod probes;
pub mod report;
pub mod runner;
pub mod synthworld;

pub use error::{Error, Result};
