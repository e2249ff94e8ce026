//! Shallow probes trained on frozen embeddings: linear classifier, linear
//! regressor, linear map, and a two-layer multilabel MLP.

mod container;
mod gradcheck;
mod net;
mod ridge;
mod spec;
mod threshold;
mod train;

pub use gradcheck::mlp_gradient_check;
pub use net::Targets;
pub use ridge::closed_form_ridge;
pub use spec::{ProbeConfig, ProbeKind, ProbeSpec};
pub use threshold::{frame_f1, select_threshold, threshold_grid, tune_threshold};
pub use train::{predict, train_probe, Predictions, Standardizer, TrainedProbe};

pub(crate) use threshold::f1_from_counts;
