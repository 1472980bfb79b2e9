//! Reconstruction of a 2D acoustic medium from far-field measurements.
//!
//! The forward model solves the Lippmann–Schwinger equation on a pixel grid
//! with an FFT-accelerated volume potential. On top of it sit the Fréchet
//! derivative and its adjoint, Landweber and iteratively regularized
//! Gauss–Newton iterations, a multi-frequency/multi-resolution combination of
//! the two, and a variant that interleaves a learned projector network.

pub mod config;
pub mod dataset;
pub mod error;
pub mod farfield;
pub mod forward;
pub mod grid;
pub mod inversion;
pub mod io;
pub mod kernel;
pub mod krylov;
pub mod linearization;
pub mod oracle;
pub mod residual;

pub use config::ScatterConfig;
pub use error::{Error, Result};
pub use farfield::FarField;
pub use forward::{add_noise, born_far_field, far_field, forward_map, solve_forward, TotalFieldSet};
pub use grid::{downscale, normalize, relative_error, upscale, ContrastGrid, Grid};
pub use kernel::{apply_volume_potential, GreenKernel};
pub use linearization::{jacobian_adjoint, jacobian_apply, operator_norm, LinearOperator, LinearizedMap};
pub use oracle::disk_oracle;
pub use residual::ResidualLog;
