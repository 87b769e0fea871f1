//! Minimal differentiable core: tensors, LSTM and dense layers, losses,
//! Adam, seeded sampling and a finite-difference checker.

pub mod activation;
pub mod adam;
pub mod dense;
pub mod gradcheck;
pub mod kernels;
pub mod linalg;
pub mod loss;
pub mod lstm;
pub mod rng;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use dense::{Dense, DenseGrads};
pub use lstm::{BackwardOptions, LstmBackward, LstmCache, LstmGrads, LstmParams, SeqInput};
pub use rng::Rng;
pub use tensor::Tensor;
