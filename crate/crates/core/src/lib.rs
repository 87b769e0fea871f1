pub(crate) mod codec;
pub mod config;
pub mod data;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod plot;
pub mod synth;
pub mod training;

pub use error::{Error, FormatError, Result};
