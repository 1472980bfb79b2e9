use std::path::Path;

use lpinv_projector::{infer, ProjectorInput, ProjectorWeights};

use crate::error::{Error, Result};
use crate::forward::kernel_for;
use crate::grid::{downscale, normalize, upscale, ContrastGrid};
use crate::residual::ResidualLog;

use super::combined::{multi_frequency_landweber, CombinedParams};
use super::irgnm::irgnm_with;
use super::snapshot;

/// Starting value of both residual sequences, large enough that the first
/// outer iteration never triggers the stopping rule.
pub const INITIAL_RESIDUAL: f64 = 1e4;

/// A map from normalized contrast estimates to cleaned-up contrasts on the same grid.
pub trait Projector {
    fn project(&self, normalized: &ContrastGrid) -> Result<ContrastGrid>;
}

impl Projector for ProjectorWeights {
    fn project(&self, normalized: &ContrastGrid) -> Result<ContrastGrid> {
        let v = normalized.values();
        let re = v.mapv(|z| z.re as f32);
        let im = v.mapv(|z| z.im as f32);
        let out = infer(self, &ProjectorInput::new(re, im)?)?;
        ContrastGrid::from_real(*normalized.grid(), &out.mapv(f64::from))
    }
}

/// Adapter for closures, mostly for tests and ablations.
pub struct FnProjector<F>(pub F);

impl<F> Projector for FnProjector<F>
where
    F: Fn(&ContrastGrid) -> Result<ContrastGrid>,
{
    fn project(&self, normalized: &ContrastGrid) -> Result<ContrastGrid> {
        (self.0)(normalized)
    }
}

pub struct LearnedParams<P> {
    pub combined: CombinedParams,
    pub projector: P,
    /// Outer-iteration cap `N_O`.
    pub n_o: usize,
}

#[derive(Debug, Clone)]
pub struct LearnedOutput {
    /// Final estimate at `n1`.
    pub estimate: ContrastGrid,
    /// Multi-frequency Landweber result the loop started from.
    pub landweber: ContrastGrid,
    pub projector_applications: usize,
    /// True when the residual test fired before the cap.
    pub stopped_early: bool,
    pub log: ResidualLog,
}

/// `‖m‖_∞ P(N(m))`.
pub(crate) fn scaled_projection<P: Projector + ?Sized>(projector: &P, m: &ContrastGrid) -> Result<ContrastGrid> {
    let scale = m.norm_inf();
    let projected = projector.project(&normalize(m))?;
    if projected.grid() != m.grid() {
        return Err(Error::DimensionMismatch("projector changed the grid".into()));
    }
    Ok(projected.scaled(scale))
}

/// Alternates the projector at `n1` with IRGNM at `n2`.
///
/// Outer step `i` (from 0) sets `m̄_{i+1} = ‖m̃_i‖_∞ P(N(m̃_i))`, runs IRGNM from
/// its upscaled copy, and records `r0` (misfit of the IRGNM start) and `r1`
/// (misfit of the IRGNM result) at index `i + 1`. When both grow the loop
/// returns `m̄_i`; otherwise `m̃_{i+1}` is the downscaled IRGNM result. After
/// `n_o + 1` outer steps `m̄_{n_o+1}` is returned.
///
/// Stopping at `i = 0` has no earlier projector output to return; the
/// Landweber result is returned instead.
pub fn learned_combined<P: Projector>(params: &LearnedParams<P>, snapshots: Option<&Path>) -> Result<LearnedOutput> {
    let cp = &params.combined;
    cp.validate()?;
    let (landweber, mut log) = multi_frequency_landweber(cp, snapshots)?;
    let cfg = cp.irgnm_config()?;
    let kernel = kernel_for(&cfg);
    let d = cp.factor();

    let (mut r0_prev, mut r1_prev) = (INITIAL_RESIDUAL, INITIAL_RESIDUAL);
    let mut tilde = landweber.clone();
    let mut bar_prev: Option<ContrastGrid> = None;
    let mut applications = 0;
    for i in 0..=params.n_o {
        let bar = scaled_projection(&params.projector, &tilde)?;
        applications += 1;
        snapshot(snapshots, &format!("projector-{}", i + 1), &bar)?;
        let stage = format!("outer{}-irgnm", i + 1);
        let (refined, stage_log) = irgnm_with(&kernel, &cp.irgnm_params(upscale(&bar, d)?), &cp.irgnm_data, &cfg, &stage)?;
        let entries = stage_log.entries();
        let r0 = entries.first().map(|e| e.residual).unwrap_or(f64::NAN);
        let r1 = entries.last().map(|e| e.residual).unwrap_or(f64::NAN);
        log.extend(stage_log);
        log.record("r0", i + 1, r0);
        log.record("r1", i + 1, r1);
        snapshot(snapshots, &format!("irgnm-{}", i + 1), &refined)?;

        if r0 > r0_prev && r1 > r1_prev {
            let estimate = bar_prev.unwrap_or_else(|| landweber.clone());
            snapshot(snapshots, "final", &estimate)?;
            return Ok(LearnedOutput {
                estimate,
                landweber,
                projector_applications: applications,
                stopped_early: true,
                log,
            });
        }
        tilde = downscale(&refined, d)?;
        bar_prev = Some(bar);
        r0_prev = r0;
        r1_prev = r1;
    }
    let estimate = bar_prev.expect("the loop body runs at least once");
    snapshot(snapshots, "final", &estimate)?;
    Ok(LearnedOutput {
        estimate,
        landweber,
        projector_applications: applications,
        stopped_early: false,
        log,
    })
}

/// [`learned_combined`] driven by a projector trained without the IRGNM-stage data.
///
/// The algorithm is identical; only the weights differ.
pub fn simplified_learned_combined<P: Projector>(
    params: &LearnedParams<P>,
    snapshots: Option<&Path>,
) -> Result<LearnedOutput> {
    learned_combined(params, snapshots)
}
