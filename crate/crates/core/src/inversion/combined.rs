use std::path::Path;

use crate::config::ScatterConfig;
use crate::error::{Error, Result};
use crate::farfield::FarField;
use crate::forward::kernel_for;
use crate::grid::{upscale, ContrastGrid};
use crate::residual::ResidualLog;

use super::irgnm::{irgnm_with, IrgnmParams, DEFAULT_CG_MAXITER, DEFAULT_CG_TOL};
use super::landweber::{landweber_with, LandweberParams};
use super::snapshot;

/// Inputs of the two-stage reconstruction.
///
/// `base` supplies the geometry, direction counts and linear-solver settings;
/// its `k` and `n` are replaced per stage.
#[derive(Debug, Clone)]
pub struct CombinedParams {
    pub base: ScatterConfig,
    /// Landweber data at increasing wave numbers `k_1 < … < k_L`.
    pub landweber_data: Vec<FarField>,
    pub n_la: usize,
    pub n1: usize,
    /// IRGNM data at `k_{L+1}`.
    pub irgnm_data: FarField,
    pub alphas: Vec<f64>,
    pub n2: usize,
    pub cg_tol: f64,
    pub cg_maxiter: usize,
}

impl CombinedParams {
    pub fn new(
        base: ScatterConfig,
        landweber_data: Vec<FarField>,
        n_la: usize,
        n1: usize,
        irgnm_data: FarField,
        alphas: Vec<f64>,
        n2: usize,
    ) -> Self {
        Self {
            base,
            landweber_data,
            n_la,
            n1,
            irgnm_data,
            alphas,
            n2,
            cg_tol: DEFAULT_CG_TOL,
            cg_maxiter: DEFAULT_CG_MAXITER,
        }
    }

    /// Upscaling factor `d = n2 / n1`.
    pub fn factor(&self) -> usize {
        self.n2 / self.n1
    }

    pub fn validate(&self) -> Result<()> {
        if self.landweber_data.is_empty() {
            return Err(Error::InvalidParameter("at least one Landweber frequency is required".into()));
        }
        if self.landweber_data.windows(2).any(|w| w[1].k() <= w[0].k()) {
            return Err(Error::InvalidParameter("Landweber wave numbers must increase strictly".into()));
        }
        if self.n1 == 0 || self.n2 % self.n1 != 0 || self.n2 < self.n1 {
            return Err(Error::InvalidParameter(format!(
                "IRGNM resolution {} is not a multiple of the Landweber resolution {}",
                self.n2, self.n1
            )));
        }
        self.landweber_config(self.landweber_data[0].k())?;
        self.irgnm_config()?;
        Ok(())
    }

    pub fn landweber_config(&self, k: f64) -> Result<ScatterConfig> {
        self.base.with_k(k)?.with_n(self.n1)
    }

    pub fn irgnm_config(&self) -> Result<ScatterConfig> {
        self.base.with_k(self.irgnm_data.k())?.with_n(self.n2)
    }

    pub(crate) fn irgnm_params(&self, initial: ContrastGrid) -> IrgnmParams {
        let mut p = IrgnmParams::new(self.alphas.clone(), initial);
        p.cg_tol = self.cg_tol;
        p.cg_maxiter = self.cg_maxiter;
        p
    }
}

#[derive(Debug, Clone)]
pub struct CombinedOutput {
    /// Multi-frequency Landweber result at `n1`.
    pub landweber: ContrastGrid,
    /// The Landweber result replicated onto `n2`.
    pub upscaled: ContrastGrid,
    /// Final IRGNM result at `n2`.
    pub estimate: ContrastGrid,
    pub log: ResidualLog,
}

/// Multi-frequency Landweber from zero at `n1`; returns the result and the log.
pub(crate) fn multi_frequency_landweber(
    params: &CombinedParams,
    snapshots: Option<&Path>,
) -> Result<(ContrastGrid, ResidualLog)> {
    let grid = params.landweber_config(params.landweber_data[0].k())?.grid();
    let mut m = ContrastGrid::zeros(grid);
    let mut log = ResidualLog::new();
    for data in &params.landweber_data {
        let cfg = params.landweber_config(data.k())?;
        let stage = format!("landweber-k{}", data.k());
        let lp = LandweberParams::new(params.n_la, m);
        let (next, stage_log) = landweber_with(&kernel_for(&cfg), &lp, data, &cfg, &stage)?;
        log.extend(stage_log);
        snapshot(snapshots, &stage, &next)?;
        m = next;
    }
    snapshot(snapshots, "landweber", &m)?;
    Ok((m, log))
}

/// Landweber over the frequency schedule at `n1`, upscaling to `n2`, then IRGNM at `k_{L+1}`.
pub fn combined(params: &CombinedParams, snapshots: Option<&Path>) -> Result<CombinedOutput> {
    params.validate()?;
    let (landweber, mut log) = multi_frequency_landweber(params, snapshots)?;
    let up = upscale(&landweber, params.factor())?;
    snapshot(snapshots, "upscaled", &up)?;
    let cfg = params.irgnm_config()?;
    let (estimate, irgnm_log) = irgnm_with(
        &kernel_for(&cfg),
        &params.irgnm_params(up.clone()),
        &params.irgnm_data,
        &cfg,
        "irgnm",
    )?;
    log.extend(irgnm_log);
    snapshot(snapshots, "irgnm", &estimate)?;
    Ok(CombinedOutput { landweber, upscaled: up, estimate, log })
}
