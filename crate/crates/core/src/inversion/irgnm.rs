use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::config::ScatterConfig;
use crate::error::{Error, Result};
use crate::farfield::FarField;
use crate::forward::{forward_map, kernel_for};
use crate::grid::ContrastGrid;
use crate::kernel::GreenKernel;
use crate::krylov::conjugate_gradient;
use crate::linearization::{LinearOperator, LinearizedMap};
use crate::residual::ResidualLog;

use super::{check_data, check_initial};

pub const DEFAULT_CG_TOL: f64 = 1e-4;
pub const DEFAULT_CG_MAXITER: usize = 50;

#[derive(Debug, Clone)]
pub struct IrgnmParams {
    pub n_ir: usize,
    /// `α_0 ≥ α_1 ≥ … > 0`, one per step.
    pub alphas: Vec<f64>,
    pub initial: ContrastGrid,
    pub cg_tol: f64,
    pub cg_maxiter: usize,
}

impl IrgnmParams {
    pub fn new(alphas: Vec<f64>, initial: ContrastGrid) -> Self {
        Self {
            n_ir: alphas.len(),
            alphas,
            initial,
            cg_tol: DEFAULT_CG_TOL,
            cg_maxiter: DEFAULT_CG_MAXITER,
        }
    }

    /// `α_i = α_0 q^i` for `i < n_ir`.
    pub fn geometric(alpha0: f64, ratio: f64, n_ir: usize, initial: ContrastGrid) -> Self {
        Self::new((0..n_ir).map(|i| alpha0 * ratio.powi(i as i32)).collect(), initial)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.len() != self.n_ir {
            return Err(Error::InvalidParameter(format!(
                "{} regularization parameters for {} steps",
                self.alphas.len(),
                self.n_ir
            )));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("regularization parameters must be positive".into()));
        }
        // A finite positive sequence always admits a bounded ratio σ, so
        // monotonicity is the only thing left to check.
        if self.alphas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("regularization parameters must not increase".into()));
        }
        if !(self.cg_tol > 0.0) || self.cg_maxiter == 0 {
            return Err(Error::InvalidParameter("CG tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// Iteratively regularized Gauss–Newton.
///
/// Step `i` solves `(A*A + α_i) h = A*(u^δ - F(m_i)) - α_i (m_i - m_0)` with
/// `A = F'(m_i)` by conjugate gradients and sets `m_{i+1} = m_i + h`. Logs
/// the misfit of every iterate, `0..=n_ir`, under stage `irgnm`.
pub fn irgnm(params: &IrgnmParams, data: &FarField, cfg: &ScatterConfig) -> Result<(ContrastGrid, ResidualLog)> {
    cfg.validate()?;
    irgnm_with(&kernel_for(cfg), params, data, cfg, "irgnm")
}

pub fn irgnm_with(
    kernel: &Arc<GreenKernel>,
    params: &IrgnmParams,
    data: &FarField,
    cfg: &ScatterConfig,
    stage: &str,
) -> Result<(ContrastGrid, ResidualLog)> {
    params.validate()?;
    check_data(data, cfg)?;
    check_initial(&params.initial, cfg)?;
    let n = cfg.n;
    let m0 = params.initial.values();
    let mut log = ResidualLog::new();
    let mut m = params.initial.clone();
    for (i, &alpha) in params.alphas.iter().enumerate() {
        let j = LinearizedMap::new(kernel, &m, cfg)?;
        let residual = FarField::new(cfg.k, data.values() - j.value().values())?;
        log.record(stage, i, residual.norm());
        let mut rhs = j.adjoint(&residual)?;
        rhs.zip_mut_with(&(m.values() - m0), |r, d| *r -= alpha * d);

        let mut failure = None;
        let op = |x: &[Complex64], y: &mut [Complex64]| {
            if failure.is_some() {
                return;
            }
            let v = Array2::from_shape_vec((n, n), x.to_vec()).expect("grid-sized vector");
            let result = j.apply(&v).and_then(|f| j.adjoint(&f));
            match result {
                Ok(ata) => {
                    for ((yi, a), xi) in y.iter_mut().zip(ata.iter()).zip(x) {
                        *yi = a + alpha * xi;
                    }
                }
                Err(e) => failure = Some(e),
            }
        };
        let (h, stats) = conjugate_gradient(op, rhs.as_slice().expect("standard layout"), params.cg_tol, params.cg_maxiter);
        if let Some(e) = failure {
            return Err(e);
        }
        if !stats.converged {
            log.note(format!(
                "{stage} step {i}: CG stopped at its cap of {} iterations, relative residual {:.3e}",
                stats.iterations, stats.residual
            ));
        }
        for (v, hv) in m.values_mut().iter_mut().zip(&h) {
            *v += hv;
        }
    }
    let final_misfit = forward_map(kernel, &m, cfg)?.distance(data)?;
    log.record(stage, params.n_ir, final_misfit);
    Ok((m, log))
}
