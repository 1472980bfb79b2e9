//! Inference-only U-Net used as a learned projector on normalized contrast images.
//!
//! The network takes two `N × N` planes (real and imaginary part) and returns
//! one real `N × N` plane. Its parameters come from `LPW1` weight files.

mod error;
pub mod ops;
mod unet;
mod weights;

pub use error::{ProjectorError, Result};
pub use unet::{infer, ProjectorInput};
pub use weights::{
    decode_weights, encode_weights, load_weights, write_weights, Architecture, ProjectorWeights, Tensor,
    DEFAULT_BN_EPS, DEFAULT_LEAKY_SLOPE, FORMAT_VERSION, INPUT_CHANNELS,
};
