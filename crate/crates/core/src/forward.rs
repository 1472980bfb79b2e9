//! Direct scattering: Lippmann–Schwinger solves, far-field quadrature, Born data and noise.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{s, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::ScatterConfig;
use crate::error::{Error, Result};
use crate::farfield::{direction, FarField};
use crate::grid::{ContrastGrid, Grid};
use crate::kernel::GreenKernel;
use crate::krylov::{gmres, SolveStats};

type C = Complex64;

/// `k^{3/2} e^{iπ/4} / √(8π)`.
pub fn far_field_constant(k: f64) -> C {
    C::from_polar(k.powf(1.5) / (8.0 * PI).sqrt(), PI / 4.0)
}

/// Plane wave `e^{ik x·d}` sampled on the grid.
pub fn plane_wave(grid: &Grid, k: f64, d: (f64, f64)) -> Array2<C> {
    let n = grid.n();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let (x, y) = grid.point(i, j);
        C::from_polar(1.0, k * (x * d.0 + y * d.1))
    })
}

/// Contrast restricted to the central block, with pixels outside `B_ρ` zeroed.
///
/// Every solve and quadrature sees the contrast through this view, so values
/// a caller leaves outside the disk never influence the physics.
#[derive(Debug, Clone)]
pub(crate) struct Medium {
    pub(crate) values: Array2<C>,
    pub(crate) offset: usize,
}

impl Medium {
    pub(crate) fn new(m: &ContrastGrid) -> Self {
        let grid = *m.grid();
        let n = grid.n();
        let (off, len) = (n / 4, n / 2);
        let values = Array2::from_shape_fn((len, len), |(a, b)| {
            let (i, j) = (a + off, b + off);
            if grid.in_disk(i, j) {
                m.values()[[i, j]]
            } else {
                C::new(0.0, 0.0)
            }
        });
        Self { values, offset: off }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm_sqr() == 0.0)
    }
}

/// Box-restricted fields solving the discrete equation `u - k² K(m u) = rhs`.
fn solve_fields(
    kernel: &GreenKernel,
    medium: &Medium,
    rhs: Vec<Array2<C>>,
    cfg: &ScatterConfig,
) -> Result<(Vec<Array2<C>>, Vec<SolveStats>)> {
    let len = kernel.support_len();
    let k2 = kernel.k() * kernel.k();
    let m = &medium.values;
    let results: Vec<Result<(Array2<C>, SolveStats)>> = rhs
        .into_par_iter()
        .map_init(
            || (kernel.support_workspace(), Array2::<C>::zeros((len, len)), Array2::<C>::zeros((len, len))),
            |(ws, tmp, conv), b| {
                let mut op = |x: &[C], y: &mut [C]| {
                    for ((t, xv), mv) in tmp.iter_mut().zip(x).zip(m.iter()) {
                        *t = mv * xv;
                    }
                    kernel.apply_on_support(tmp.view(), conv.view_mut(), ws);
                    for ((yv, xv), cv) in y.iter_mut().zip(x).zip(conv.iter()) {
                        *yv = xv - k2 * cv;
                    }
                };
                let rhs = b.as_slice().expect("standard layout");
                let mut x = rhs.to_vec();
                let stats = gmres(
                    &mut op,
                    rhs,
                    &mut x,
                    cfg.gmres_restart,
                    cfg.linsolve_tol,
                    cfg.linsolve_maxiter,
                )?;
                Ok((Array2::from_shape_vec((len, len), x).expect("box shape"), stats))
            },
        )
        .collect();
    let mut fields = Vec::with_capacity(results.len());
    let mut stats = Vec::with_capacity(results.len());
    for r in results {
        let (f, s) = r?;
        fields.push(f);
        stats.push(s);
    }
    Ok((fields, stats))
}

pub(crate) fn solve_rhs(
    kernel: &GreenKernel,
    medium: &Medium,
    rhs: Vec<Array2<C>>,
    cfg: &ScatterConfig,
) -> Result<Vec<Array2<C>>> {
    Ok(solve_fields(kernel, medium, rhs, cfg)?.0)
}

/// Total fields `u(·, d_q)` for every incident direction of a configuration.
#[derive(Debug, Clone)]
pub struct TotalFieldSet {
    kernel: Arc<GreenKernel>,
    medium: Medium,
    directions: Vec<(f64, f64)>,
    /// Fields on the central `n/2 × n/2` block, which contains `B_ρ`.
    support_fields: Vec<Array2<C>>,
    stats: Vec<SolveStats>,
}

impl TotalFieldSet {
    pub fn grid(&self) -> &Grid {
        self.kernel.grid()
    }

    pub fn k(&self) -> f64 {
        self.kernel.k()
    }

    pub fn q(&self) -> usize {
        self.support_fields.len()
    }

    pub fn directions(&self) -> &[(f64, f64)] {
        &self.directions
    }

    pub fn solver_stats(&self) -> &[SolveStats] {
        &self.stats
    }

    pub fn support_offset(&self) -> usize {
        self.medium.offset
    }

    pub fn support_field(&self, q: usize) -> &Array2<C> {
        &self.support_fields[q]
    }

    /// Field `q` on the whole grid.
    ///
    /// Outside the central block the field is evaluated from the integral
    /// representation `u = u^i + k² K(m u)`.
    pub fn field(&self, q: usize) -> Array2<C> {
        let grid = *self.grid();
        let n = grid.n();
        let k = self.k();
        let off = self.medium.offset;
        let len = n / 2;
        let mut incident = plane_wave(&grid, k, self.directions[q]);
        if self.medium.is_zero() {
            return incident;
        }
        let mut source = Array2::zeros((n, n));
        source
            .slice_mut(s![off..off + len, off..off + len])
            .assign(&(&self.medium.values * &self.support_fields[q]));
        let scattered = self.kernel.apply(&source);
        incident.zip_mut_with(&scattered, |u, v| *u += k * k * v);
        incident
            .slice_mut(s![off..off + len, off..off + len])
            .assign(&self.support_fields[q]);
        incident
    }

    /// `‖u - u^i - k² K(m u)‖ / ‖u^i‖` over the central block, per direction.
    pub fn relative_residuals(&self) -> Vec<f64> {
        let len = self.kernel.support_len();
        let k2 = self.k() * self.k();
        let mut ws = self.kernel.support_workspace();
        let grid = *self.grid();
        let off = self.medium.offset;
        self.support_fields
            .iter()
            .zip(&self.directions)
            .map(|(u, &d)| {
                let ui = support_plane_wave(&grid, self.k(), d, off, len);
                let mu = &self.medium.values * u;
                let mut ku = Array2::zeros((len, len));
                self.kernel.apply_on_support(mu.view(), ku.view_mut(), &mut ws);
                let res: f64 = u
                    .iter()
                    .zip(ui.iter())
                    .zip(ku.iter())
                    .map(|((a, b), c)| (a - b - k2 * c).norm_sqr())
                    .sum();
                let scale: f64 = ui.iter().map(|v| v.norm_sqr()).sum();
                (res / scale).sqrt()
            })
            .collect()
    }
}

fn support_plane_wave(grid: &Grid, k: f64, d: (f64, f64), off: usize, len: usize) -> Array2<C> {
    Array2::from_shape_fn((len, len), |(a, b)| {
        let (x, y) = grid.point(a + off, b + off);
        C::from_polar(1.0, k * (x * d.0 + y * d.1))
    })
}

fn check_grid(m: &ContrastGrid, cfg: &ScatterConfig) -> Result<()> {
    if m.n() != cfg.n || m.grid().rho() != cfg.rho {
        return Err(Error::DimensionMismatch(format!(
            "contrast on n = {}, rho = {} but configuration has n = {}, rho = {}",
            m.n(),
            m.grid().rho(),
            cfg.n,
            cfg.rho
        )));
    }
    Ok(())
}

/// Kernel for the configuration's grid and wave number.
pub fn kernel_for(cfg: &ScatterConfig) -> Arc<GreenKernel> {
    Arc::new(GreenKernel::new(cfg.grid(), cfg.k))
}

/// Solves the Lippmann–Schwinger equation for each incident direction `d_q`.
pub fn solve_forward(m: &ContrastGrid, cfg: &ScatterConfig) -> Result<TotalFieldSet> {
    cfg.validate()?;
    solve_forward_with(&kernel_for(cfg), m, cfg)
}

/// [`solve_forward`] reusing a kernel built for `cfg`.
pub fn solve_forward_with(
    kernel: &Arc<GreenKernel>,
    m: &ContrastGrid,
    cfg: &ScatterConfig,
) -> Result<TotalFieldSet> {
    check_grid(m, cfg)?;
    let directions: Vec<_> = (0..cfg.q).map(|q| direction(q, cfg.q)).collect();
    solve_for_incident(kernel, Medium::new(m), directions, cfg)
}

pub(crate) fn solve_for_incident(
    kernel: &Arc<GreenKernel>,
    medium: Medium,
    directions: Vec<(f64, f64)>,
    cfg: &ScatterConfig,
) -> Result<TotalFieldSet> {
    let grid = *kernel.grid();
    let (off, len) = (kernel.support_offset(), kernel.support_len());
    let incident: Vec<_> = directions
        .iter()
        .map(|&d| support_plane_wave(&grid, kernel.k(), d, off, len))
        .collect();
    let (support_fields, stats) = if medium.is_zero() {
        let stats = vec![SolveStats { iterations: 0, residual: 0.0, converged: true }; incident.len()];
        (incident, stats)
    } else {
        solve_fields(kernel, &medium, incident, cfg)?
    };
    Ok(TotalFieldSet {
        kernel: Arc::clone(kernel),
        medium,
        directions,
        support_fields,
        stats,
    })
}

/// Far-field exponentials `c h² e^{-ik x̂_p·y}` on the disk pixels, one row per `p`.
pub(crate) fn observation_weights(grid: &Grid, k: f64, p: usize, pixels: &[(usize, usize)]) -> Array2<C> {
    let c = far_field_constant(k) * grid.h() * grid.h();
    Array2::from_shape_fn((p, pixels.len()), |(row, col)| {
        let (xh, yh) = direction(row, p);
        let (x, y) = grid.point(pixels[col].0, pixels[col].1);
        c * C::from_polar(1.0, -k * (xh * x + yh * y))
    })
}

/// Midpoint quadrature of `c ∫_{B_ρ} e^{-ik x̂_p·y} m(y) u(y, d_q) dy`.
pub fn far_field(m: &ContrastGrid, u: &TotalFieldSet, cfg: &ScatterConfig) -> Result<FarField> {
    check_grid(m, cfg)?;
    if u.grid() != m.grid() || u.k() != cfg.k || u.q() != cfg.q {
        return Err(Error::DimensionMismatch(
            "total fields were computed for a different configuration".into(),
        ));
    }
    let grid = *m.grid();
    let pixels = grid.disk_pixels();
    let off = u.support_offset();
    let weights = observation_weights(&grid, cfg.k, cfg.p, &pixels);
    let sources = Array2::from_shape_fn((pixels.len(), cfg.q), |(col, q)| {
        let (i, j) = pixels[col];
        m.values()[[i, j]] * u.support_field(q)[[i - off, j - off]]
    });
    FarField::new(cfg.k, weights.dot(&sources))
}

/// `F(m)`: solve, then integrate.
pub fn forward_map(kernel: &Arc<GreenKernel>, m: &ContrastGrid, cfg: &ScatterConfig) -> Result<FarField> {
    let u = solve_forward_with(kernel, m, cfg)?;
    far_field(m, &u, cfg)
}

/// Born approximation: [`far_field`] with the total field replaced by the incident wave.
pub fn born_far_field(m: &ContrastGrid, cfg: &ScatterConfig) -> Result<FarField> {
    cfg.validate()?;
    check_grid(m, cfg)?;
    let grid = *m.grid();
    let pixels = grid.disk_pixels();
    let weights = observation_weights(&grid, cfg.k, cfg.p, &pixels);
    let sources = Array2::from_shape_fn((pixels.len(), cfg.q), |(col, q)| {
        let (i, j) = pixels[col];
        let (x, y) = grid.point(i, j);
        let d = direction(q, cfg.q);
        m.values()[[i, j]] * C::from_polar(1.0, cfg.k * (x * d.0 + y * d.1))
    });
    FarField::new(cfg.k, weights.dot(&sources))
}

/// Multiplicative noise `a (1 + δ ξ)` with independent real standard normal `ξ` per entry.
pub fn add_noise(ff: &FarField, delta: f64, seed: u64) -> Result<FarField> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(ff.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ff.clone();
    for v in out.values_mut().iter_mut() {
        let xi: f64 = StandardNormal.sample(&mut rng);
        *v *= 1.0 + delta * xi;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn disk(n: usize, radius: f64, value: f64) -> ContrastGrid {
        let g = Grid::new(1.0, n).unwrap();
        let vals = Array2::from_shape_fn((n, n), |(i, j)| {
            let (x, y) = g.point(i, j);
            if x * x + y * y <= radius * radius { value } else { 0.0 }
        });
        ContrastGrid::from_real(g, &vals).unwrap()
    }

    #[test]
    fn zero_contrast_gives_incident_wave() {
        let cfg = ScatterConfig::new(1.0, 3.0, 16, 4, 3).unwrap();
        let m = ContrastGrid::zeros(cfg.grid());
        let u = solve_forward(&m, &cfg).unwrap();
        for q in 0..3 {
            assert_eq!(u.field(q), plane_wave(&cfg.grid(), 3.0, direction(q, 3)));
        }
        let ff = far_field(&m, &u, &cfg).unwrap();
        assert!(ff.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn residual_contract_holds() {
        let cfg = ScatterConfig::new(1.0, 4.0, 32, 4, 4).unwrap();
        let u = solve_forward(&disk(32, 0.6, 1.5), &cfg).unwrap();
        for r in u.relative_residuals() {
            assert!(r <= cfg.linsolve_tol, "{r}");
        }
    }

    #[test]
    fn full_field_agrees_with_box_field_inside() {
        let cfg = ScatterConfig::new(1.0, 3.0, 32, 2, 2).unwrap();
        let m = disk(32, 0.5, 1.0);
        let u = solve_forward(&m, &cfg).unwrap();
        let full = u.field(1);
        // Re-evaluate the representation formula inside the block and compare.
        let kernel = GreenKernel::new(cfg.grid(), 3.0);
        let source = m.values() * &full;
        let rep = plane_wave(&cfg.grid(), 3.0, direction(1, 2)) + kernel.apply(&source) * C::new(9.0, 0.0);
        let diff: f64 = full.iter().zip(rep.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let scale: f64 = full.iter().map(|a| a.norm_sqr()).sum();
        assert!((diff / scale).sqrt() < 1e-5);
    }

    #[test]
    fn born_is_linear() {
        let cfg = ScatterConfig::new(1.0, 2.0, 16, 5, 3).unwrap();
        let g = cfg.grid();
        let m1 = ContrastGrid::new(g, Array2::from_shape_fn((16, 16), |(i, j)| C::new(i as f64, j as f64 * 0.5))).unwrap();
        let m2 = ContrastGrid::new(g, Array2::from_shape_fn((16, 16), |(i, j)| C::new((i * j) as f64, -1.0))).unwrap();
        let (a, b) = (C::new(0.3, -1.2), C::new(2.0, 0.5));
        let combo = ContrastGrid::new(g, m1.values() * a + m2.values() * b).unwrap();
        let lhs = born_far_field(&combo, &cfg).unwrap();
        let rhs = born_far_field(&m1, &cfg).unwrap().into_values() * a
            + born_far_field(&m2, &cfg).unwrap().into_values() * b;
        let rhs = FarField::new(2.0, rhs).unwrap();
        assert!(lhs.distance(&rhs).unwrap() <= 1e-12 * rhs.norm());
    }

    #[test]
    fn born_is_first_order_accurate_for_weak_contrast() {
        let cfg = ScatterConfig::new(1.0, 1.0, 32, 8, 4).unwrap();
        let kernel = kernel_for(&cfg);
        let mut errs = Vec::new();
        for amp in [0.01, 0.005] {
            let m = disk(32, 0.7, amp);
            let f = forward_map(&kernel, &m, &cfg).unwrap();
            let fb = born_far_field(&m, &cfg).unwrap();
            errs.push(f.distance(&fb).unwrap() / fb.norm());
        }
        assert!(errs[0] < 0.05);
        let ratio = errs[0] / errs[1];
        assert!((1.8..2.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn noise_is_deterministic_and_scaled() {
        let ff = FarField::new(1.0, Array2::from_elem((64, 64), C::new(1.0, 1.0))).unwrap();
        assert_eq!(add_noise(&ff, 0.0, 9).unwrap(), ff);
        let a = add_noise(&ff, 0.05, 9).unwrap();
        assert_eq!(a, add_noise(&ff, 0.05, 9).unwrap());
        assert_ne!(a, add_noise(&ff, 0.05, 10).unwrap());
        let rel: Vec<f64> = a.values().iter().map(|v| v.re - 1.0).collect();
        let mean = rel.iter().sum::<f64>() / rel.len() as f64;
        let std = (rel.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rel.len() as f64).sqrt();
        assert!((std - 0.05).abs() < 0.005, "{std}");
        assert!(add_noise(&ff, -0.1, 0).is_err());
    }

    #[test]
    fn contrast_outside_disk_is_ignored() {
        let cfg = ScatterConfig::new(1.0, 3.0, 16, 4, 4).unwrap();
        let m = disk(16, 0.6, 1.0);
        let mut noisy = m.clone();
        noisy.values_mut()[[0, 0]] = C::new(5.0, 0.0);
        noisy.values_mut()[[4, 4]] = C::new(5.0, 0.0);
        let kernel = kernel_for(&cfg);
        let a = forward_map(&kernel, &m, &cfg).unwrap();
        let b = forward_map(&kernel, &noisy, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
