//! The evaluation axes: informativeness, P-/R-equivariance, invariance,
//! disentanglement Δ and a binned MIG cross-check.

mod equivariance;
mod features;
mod informativeness;
pub mod metrics;
mod mig;
mod types;

pub use equivariance::{run_invariance, run_p_equivariance, run_r_equivariance};
pub use informativeness::{run_disentanglement_delta, run_informativeness};
pub use metrics::{metric_accuracy, metric_cosine, metric_cosine_frames, metric_f1_track, metric_mse};
pub use mig::{mig_score, run_mig, MIG_BINS};
pub use types::{
    Axis, AxisOptions, AxisResult, Direction, InvarianceMode, Metric, PairInput, TaskSpec,
    TaskStream, TaskTarget,
};
