//! Iterative reconstruction: Landweber, IRGNM, their multi-frequency/multi-resolution
//! combination, and the variant that interleaves a learned projector.

mod combined;
mod irgnm;
mod landweber;
mod learned;

use std::path::Path;

pub use combined::{combined, CombinedOutput, CombinedParams};
pub(crate) use combined::multi_frequency_landweber;
pub(crate) use learned::scaled_projection;
pub use irgnm::{irgnm, irgnm_with, IrgnmParams, DEFAULT_CG_MAXITER, DEFAULT_CG_TOL};
pub use landweber::{landweber, landweber_with, LandweberParams};
pub use learned::{
    learned_combined, simplified_learned_combined, FnProjector, LearnedOutput, LearnedParams, Projector,
    INITIAL_RESIDUAL,
};

use crate::config::ScatterConfig;
use crate::error::{Error, Result};
use crate::farfield::FarField;
use crate::grid::ContrastGrid;
use crate::io::write_contrast;

fn check_data(data: &FarField, cfg: &ScatterConfig) -> Result<()> {
    if data.k() != cfg.k {
        return Err(Error::InvalidParameter(format!(
            "data were measured at k = {} but the solver runs at k = {}",
            data.k(),
            cfg.k
        )));
    }
    if data.values().dim() != (cfg.p, cfg.q) {
        return Err(Error::DimensionMismatch(format!(
            "data of shape {:?}, configuration expects ({}, {})",
            data.values().dim(),
            cfg.p,
            cfg.q
        )));
    }
    Ok(())
}

fn check_initial(m: &ContrastGrid, cfg: &ScatterConfig) -> Result<()> {
    if m.n() != cfg.n || m.grid().rho() != cfg.rho {
        return Err(Error::DimensionMismatch(format!(
            "initial guess on n = {} but the solver grid has n = {}",
            m.n(),
            cfg.n
        )));
    }
    Ok(())
}

/// Writes `<dir>/<name>.ctr` when a snapshot directory is configured.
fn snapshot(dir: Option<&Path>, name: &str, m: &ContrastGrid) -> Result<()> {
    match dir {
        Some(dir) => write_contrast(&dir.join(format!("{name}.ctr")), m),
        None => Ok(()),
    }
}
