//! Dense matrices, a seeded RNG and the Adam optimizer used to train probes.

mod adam;
mod rng;
mod solve;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use rng::Rng;
pub use solve::solve;
pub use tensor::{dot, matmul, matmul_nt, matmul_tn, softmax_rows, Tensor2};
