//! Synthetic two-stream worlds with planted factor structure, and the
//! analytic or Monte-Carlo ground truth for the axes evaluated on them.

mod generate;
mod oracle;
mod spec;

pub use generate::{generate_world, WORLD_SPEC_FILE};
pub use oracle::{world_oracle, OracleQuery, OracleValue, MONTE_CARLO_SAMPLES};
pub use spec::{
    Action, Encoding, FactorKind, FactorSpec, FactorWorldSpec, LabelField, MultipitchSpec,
    ParamSampling, SplitFractions, StreamDims, TransformModel,
};
