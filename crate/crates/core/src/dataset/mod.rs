//! Ground truths from digit rasters, simulated far-field datasets, and
//! input/label pairs for projector training.

mod idx;
mod manifest;
mod pairs;
mod synth;

pub use idx::{decode_idx_images, decode_idx_labels, encode_idx_images, encode_idx_labels, DigitSource};
pub use manifest::{draw_amplitudes, generate_dataset, DatasetManifest, DatasetParams, SampleEntry, MANIFEST_FILE};
pub use pairs::{emit_training_pairs, PairSettings, TrainingPair, TrainingStage};
pub use synth::synthesize_contrast;
