use std::sync::Arc;

use crate::config::ScatterConfig;
use crate::error::Result;
use crate::farfield::FarField;
use crate::forward::{forward_map, kernel_for};
use crate::grid::ContrastGrid;
use crate::kernel::GreenKernel;
use crate::linearization::{operator_norm, LinearOperator, LinearizedMap, DEFAULT_NORM_TOL};
use crate::residual::ResidualLog;

use super::{check_data, check_initial};

#[derive(Debug, Clone)]
pub struct LandweberParams {
    pub n_la: usize,
    pub initial: ContrastGrid,
    /// Relative tolerance of the power iteration behind the step size.
    pub norm_tol: f64,
}

impl LandweberParams {
    pub fn new(n_la: usize, initial: ContrastGrid) -> Self {
        Self { n_la, initial, norm_tol: DEFAULT_NORM_TOL }
    }
}

/// `m ← m + μ F'(m)* (u^δ - F(m))` with `μ = 1/‖F'(m)‖²`, `n_la` times.
///
/// Logs the misfit of every iterate, `0..=n_la`, under stage `landweber`.
pub fn landweber(params: &LandweberParams, data: &FarField, cfg: &ScatterConfig) -> Result<(ContrastGrid, ResidualLog)> {
    cfg.validate()?;
    landweber_with(&kernel_for(cfg), params, data, cfg, "landweber")
}

/// [`landweber`] with a prebuilt kernel and a custom stage label.
pub fn landweber_with(
    kernel: &Arc<GreenKernel>,
    params: &LandweberParams,
    data: &FarField,
    cfg: &ScatterConfig,
    stage: &str,
) -> Result<(ContrastGrid, ResidualLog)> {
    check_data(data, cfg)?;
    check_initial(&params.initial, cfg)?;
    let mut log = ResidualLog::new();
    let mut m = params.initial.clone();
    for i in 0..params.n_la {
        let j = LinearizedMap::new(kernel, &m, cfg)?;
        let residual = FarField::new(cfg.k, data.values() - j.value().values())?;
        let misfit = residual.norm();
        log.record(stage, i, misfit);
        if misfit == 0.0 {
            continue;
        }
        let estimate = operator_norm(&j, params.norm_tol)?;
        if !estimate.converged {
            log.note(format!(
                "{stage} step {i}: operator norm not converged after {} power iterations, using {:.6e}",
                estimate.iterations, estimate.value
            ));
        }
        if estimate.value == 0.0 {
            log.note(format!("{stage} step {i}: vanishing derivative, iterate kept"));
            continue;
        }
        let step = 1.0 / (estimate.value * estimate.value);
        let gradient = j.adjoint(&residual)?;
        m.values_mut().zip_mut_with(&gradient, |v, g| *v += step * g);
    }
    let final_misfit = forward_map(kernel, &m, cfg)?.distance(data)?;
    log.record(stage, params.n_la, final_misfit);
    Ok((m, log))
}
