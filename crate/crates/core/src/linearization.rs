//! Fréchet derivative of the contrast-to-far-field map and its adjoint.
//!
//! Writing `e_p(y) = c h² e^{-ik x̂_p·y}`, the derivative at `m` in direction
//! `q` is `Σ_y e_p (m v_d + q u_d)` where `v_d` solves the linearized
//! Lippmann–Schwinger equation. Moving the inverse onto the observation side
//! turns `e_p + k² K(m t_p)` into the total field for the incident wave
//! `e_p`, i.e. `c h² u(·, -x̂_p)`. So
//!
//! ```text
//! (F'(m) q)_{pd} = c h² Σ_{y ∈ B_ρ} u(y, -x̂_p) u(y, d) q(y)
//! ```
//!
//! and after `P + Q` solves both the derivative and its adjoint are dense
//! contractions, exact transposes of each other by construction.
//! [`jacobian_apply_direct`] keeps the textbook route for cross-checking.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ScatterConfig;
use crate::error::{Error, Result};
use crate::farfield::{direction, FarField};
use crate::forward::{
    far_field, far_field_constant, observation_weights, solve_for_incident, solve_forward_with, Medium,
    TotalFieldSet,
};
use crate::grid::ContrastGrid;
use crate::kernel::GreenKernel;

type C = Complex64;

/// Default relative-change tolerance of [`operator_norm`].
pub const DEFAULT_NORM_TOL: f64 = 1e-3;
pub const NORM_MAX_ITER: usize = 50;

/// A linear map from contrasts on an `n × n` grid to `P × Q` far fields.
pub trait LinearOperator {
    fn domain_shape(&self) -> (usize, usize);
    fn apply(&self, q: &Array2<C>) -> Result<FarField>;
    fn adjoint(&self, w: &FarField) -> Result<Array2<C>>;
}

/// The derivative `F'(m)` for one configuration, with `F(m)` as a by-product.
#[derive(Debug, Clone)]
pub struct LinearizedMap {
    m: ContrastGrid,
    cfg: ScatterConfig,
    kernel: Arc<GreenKernel>,
    fields: TotalFieldSet,
    value: FarField,
    pixels: Vec<(usize, usize)>,
    /// `u(y_j, d_q)`, shape `Q × |pixels|`.
    incident_side: Array2<C>,
    /// `c h² u(y_j, -x̂_p)`, shape `P × |pixels|`.
    observation_side: Array2<C>,
}

impl LinearizedMap {
    pub fn new(kernel: &Arc<GreenKernel>, m: &ContrastGrid, cfg: &ScatterConfig) -> Result<Self> {
        cfg.validate()?;
        if kernel.grid() != &cfg.grid() || kernel.k() != cfg.k {
            return Err(Error::DimensionMismatch("kernel was built for a different configuration".into()));
        }
        let fields = solve_forward_with(kernel, m, cfg)?;
        let value = far_field(m, &fields, cfg)?;
        let backward: Vec<_> = (0..cfg.p)
            .map(|p| {
                let (x, y) = direction(p, cfg.p);
                (-x, -y)
            })
            .collect();
        let adjoint_fields = solve_for_incident(kernel, Medium::new(m), backward, cfg)?;

        let grid = cfg.grid();
        let pixels = grid.disk_pixels();
        let off = fields.support_offset();
        let incident_side = Array2::from_shape_fn((cfg.q, pixels.len()), |(q, j)| {
            let (a, b) = pixels[j];
            fields.support_field(q)[[a - off, b - off]]
        });
        let scale = far_field_constant(cfg.k) * grid.h() * grid.h();
        let observation_side = Array2::from_shape_fn((cfg.p, pixels.len()), |(p, j)| {
            let (a, b) = pixels[j];
            scale * adjoint_fields.support_field(p)[[a - off, b - off]]
        });
        Ok(Self {
            m: m.clone(),
            cfg: *cfg,
            kernel: Arc::clone(kernel),
            fields,
            value,
            pixels,
            incident_side,
            observation_side,
        })
    }

    pub fn contrast(&self) -> &ContrastGrid {
        &self.m
    }

    pub fn config(&self) -> &ScatterConfig {
        &self.cfg
    }

    pub fn kernel(&self) -> &Arc<GreenKernel> {
        &self.kernel
    }

    pub fn fields(&self) -> &TotalFieldSet {
        &self.fields
    }

    /// `F(m)`.
    pub fn value(&self) -> &FarField {
        &self.value
    }

    fn check_domain(&self, q: &Array2<C>) -> Result<()> {
        let n = self.cfg.n;
        if q.dim() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "perturbation of shape {:?} on a grid of side {n}",
                q.dim()
            )));
        }
        Ok(())
    }
}

impl LinearOperator for LinearizedMap {
    fn domain_shape(&self) -> (usize, usize) {
        (self.cfg.n, self.cfg.n)
    }

    fn apply(&self, q: &Array2<C>) -> Result<FarField> {
        self.check_domain(q)?;
        let mut weighted = self.incident_side.clone();
        for (mut col, &(i, j)) in weighted.axis_iter_mut(Axis(1)).zip(&self.pixels) {
            col *= q[[i, j]];
        }
        FarField::new(self.cfg.k, self.observation_side.dot(&weighted.t()))
    }

    fn adjoint(&self, w: &FarField) -> Result<Array2<C>> {
        if w.values().dim() != (self.cfg.p, self.cfg.q) {
            return Err(Error::DimensionMismatch(format!(
                "far field of shape {:?}, expected ({}, {})",
                w.values().dim(),
                self.cfg.p,
                self.cfg.q
            )));
        }
        // t[p, j] = Σ_d w_pd conj(u(y_j, d))
        let t = w.values().dot(&self.incident_side.mapv(|v| v.conj()));
        let n = self.cfg.n;
        let mut out = Array2::zeros((n, n));
        for (j, &(a, b)) in self.pixels.iter().enumerate() {
            let s: C = self
                .observation_side
                .column(j)
                .iter()
                .zip(t.column(j))
                .map(|(g, tv)| g.conj() * tv)
                .sum();
            out[[a, b]] = s;
        }
        Ok(out)
    }
}

pub fn jacobian_apply(j: &LinearizedMap, q: &Array2<C>) -> Result<FarField> {
    j.apply(q)
}

pub fn jacobian_adjoint(j: &LinearizedMap, w: &FarField) -> Result<Array2<C>> {
    j.adjoint(w)
}

/// `F'(m) q` through one linearized solve per incident direction.
///
/// Slower than [`jacobian_apply`]; used to cross-check it.
pub fn jacobian_apply_direct(j: &LinearizedMap, q: &Array2<C>) -> Result<FarField> {
    j.check_domain(q)?;
    let cfg = &j.cfg;
    let grid = cfg.grid();
    let kernel = &j.kernel;
    let (off, len) = (kernel.support_offset(), kernel.support_len());
    let k2 = cfg.k * cfg.k;
    let medium = Medium::new(&j.m);
    let q_masked = Medium::new(&ContrastGrid::new(grid, q.clone())?);
    let mut ws = kernel.support_workspace();
    let mut rhs = Vec::with_capacity(cfg.q);
    for d in 0..cfg.q {
        let source = &q_masked.values * j.fields.support_field(d);
        let mut out = Array2::zeros((len, len));
        kernel.apply_on_support(source.view(), out.view_mut(), &mut ws);
        rhs.push(out * C::new(k2, 0.0));
    }
    let v = crate::forward::solve_rhs(kernel, &medium, rhs, cfg)?;
    let weights = observation_weights(&grid, cfg.k, cfg.p, &j.pixels);
    let integrand = Array2::from_shape_fn((j.pixels.len(), cfg.q), |(col, d)| {
        let (a, b) = (j.pixels[col].0 - off, j.pixels[col].1 - off);
        medium.values[[a, b]] * v[d][[a, b]] + q_masked.values[[a, b]] * j.fields.support_field(d)[[a, b]]
    });
    FarField::new(cfg.k, weights.dot(&integrand))
}

/// Outcome of the power iteration in [`operator_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest singular value by power iteration on `A* A`, from a fixed seed-0 start vector.
///
/// The eigenvalue estimate is the Rayleigh quotient `‖A v‖²` for unit `v`;
/// iteration stops when it changes by less than `tol` relative, or after
/// [`NORM_MAX_ITER`] rounds.
pub fn operator_norm<A: LinearOperator + ?Sized>(op: &A, tol: f64) -> Result<NormEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut v = Array2::from_shape_fn(op.domain_shape(), |_| {
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let mut previous = f64::NAN;
    for it in 1..=NORM_MAX_ITER {
        let nv = frobenius(&v);
        if nv == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it, converged: true });
        }
        v.mapv_inplace(|x| x / nv);
        let av = op.apply(&v)?;
        let lambda = av.norm().powi(2);
        if lambda == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it, converged: true });
        }
        if (lambda - previous).abs() < tol * lambda {
            return Ok(NormEstimate { value: lambda.sqrt(), iterations: it, converged: true });
        }
        previous = lambda;
        v = op.adjoint(&av)?;
    }
    Ok(NormEstimate { value: previous.sqrt(), iterations: NORM_MAX_ITER, converged: false })
}

pub(crate) fn frobenius(a: &Array2<C>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
