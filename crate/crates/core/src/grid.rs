//! Pixel grids over the square `[-2ρ, 2ρ]²` and the contrast matrices sampled on them.
//!
//! A grid of side `n` has pixel width `h = 4ρ/n`; pixel `(i, j)` sits at
//! `(c_i, c_j)` with `c_i = (i + 1/2 - n/2) h`, so the centers are exactly
//! symmetric under `x -> -x`. The support disk `B_ρ` fits inside the central
//! `n/2 × n/2` block of pixels.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this infinity norm a contrast is treated as zero by [`normalize`].
pub const NORMALIZE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    rho: f64,
    n: usize,
}

impl Grid {
    pub fn new(rho: f64, n: usize) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("grid side must be at least 1".into()));
        }
        Ok(Self { rho, n })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pixel width `4ρ/n`.
    pub fn h(&self) -> f64 {
        4.0 * self.rho / self.n as f64
    }

    /// Coordinate of the center of pixel index `i` along either axis.
    pub fn center(&self, i: usize) -> f64 {
        ((2 * i + 1) as f64 - self.n as f64) * 0.5 * self.h()
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.center(i), self.center(j))
    }

    /// Whether the center of pixel `(i, j)` lies in the closed disk `|x| <= ρ`.
    pub fn in_disk(&self, i: usize, j: usize) -> bool {
        let (x, y) = self.point(i, j);
        x * x + y * y <= self.rho * self.rho
    }

    pub fn disk_mask(&self) -> Array2<bool> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| self.in_disk(i, j))
    }

    /// Row-major list of the pixels whose centers lie in the disk.
    pub fn disk_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.in_disk(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Same support radius, `factor` times as many pixels per side.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParameter("scale factor must be at least 1".into()));
        }
        Grid::new(self.rho, self.n * factor)
    }
}

/// A contrast `m = n - 1` sampled at the pixel centers of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastGrid {
    grid: Grid,
    values: Array2<Complex64>,
}

impl ContrastGrid {
    pub fn new(grid: Grid, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != (grid.n(), grid.n()) {
            return Err(Error::DimensionMismatch(format!(
                "contrast of shape {:?} on a grid of side {}",
                values.dim(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: Array2::zeros((grid.n(), grid.n())),
        }
    }

    pub fn from_real(grid: Grid, values: &Array2<f64>) -> Result<Self> {
        Self::new(grid, values.mapv(|v| Complex64::new(v, 0.0)))
    }

    /// Builds a contrast from raw samples, zeroing every pixel outside `B_ρ`.
    pub fn masked(grid: Grid, values: Array2<Complex64>) -> Result<Self> {
        let mut out = Self::new(grid, values)?;
        out.apply_disk_mask();
        Ok(out)
    }

    pub fn apply_disk_mask(&mut self) {
        let grid = self.grid;
        for ((i, j), v) in self.values.indexed_iter_mut() {
            if !grid.in_disk(i, j) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    /// Entrywise maximum modulus.
    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
    }

    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn real_part(&self) -> Array2<f64> {
        self.values.mapv(|v| v.re)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.mapv(|v| v * factor),
        }
    }
}

/// `N(m) = m / ‖m‖_∞`; contrasts with `‖m‖_∞ < 1e-12` are returned unchanged.
///
/// A peak within a few ulps of one counts as normalized, which makes the map
/// exactly idempotent despite rounding in the modulus.
pub fn normalize(m: &ContrastGrid) -> ContrastGrid {
    let peak = m.norm_inf();
    if peak < NORMALIZE_FLOOR || (peak - 1.0).abs() <= 4.0 * f64::EPSILON {
        return m.clone();
    }
    m.scaled(1.0 / peak)
}

/// Replicates each entry into a `factor × factor` block.
pub fn upscale(m: &ContrastGrid, factor: usize) -> Result<ContrastGrid> {
    let grid = m.grid().refined(factor)?;
    let values = Array2::from_shape_fn((grid.n(), grid.n()), |(i, j)| {
        m.values[[i / factor, j / factor]]
    });
    ContrastGrid::new(grid, values)
}

/// `factor × factor` average pooling.
pub fn downscale(m: &ContrastGrid, factor: usize) -> Result<ContrastGrid> {
    if factor == 0 || m.n() % factor != 0 {
        return Err(Error::DimensionMismatch(format!(
            "cannot downscale a grid of side {} by {}",
            m.n(),
            factor
        )));
    }
    let grid = Grid::new(m.grid().rho(), m.n() / factor)?;
    let count = (factor * factor) as f64;
    let mut values = Array2::<Complex64>::zeros((grid.n(), grid.n()));
    for ((i, j), out) in values.indexed_iter_mut() {
        let block = m
            .values
            .slice(ndarray::s![i * factor..(i + 1) * factor, j * factor..(j + 1) * factor]);
        // Averaging offsets from the first entry is exact on constant blocks.
        let first = block[[0, 0]];
        *out = first + block.iter().map(|v| v - first).sum::<Complex64>() / count;
    }
    ContrastGrid::new(grid, values)
}

/// Root-mean-square relative refractive-index error over the disk pixels.
///
/// Both arguments are contrasts; the indices compared are `1 + m`.
pub fn relative_error(truth: &ContrastGrid, estimate: &ContrastGrid) -> Result<f64> {
    if truth.grid() != estimate.grid() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare contrasts on grids of side {} and {}",
            truth.n(),
            estimate.n()
        )));
    }
    let grid = *truth.grid();
    let one = Complex64::new(1.0, 0.0);
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut zero_at = None;
    Zip::indexed(&truth.values)
        .and(&estimate.values)
        .for_each(|(i, j), &t, &e| {
            if !grid.in_disk(i, j) {
                return;
            }
            let n_true = t + one;
            if n_true.norm() == 0.0 {
                zero_at.get_or_insert((i, j));
                return;
            }
            sum += ((n_true - (e + one)) / n_true).norm_sqr();
            count += 1;
        });
    if let Some((row, col)) = zero_at {
        return Err(Error::ZeroRefractiveIndex { row, col });
    }
    if count == 0 {
        return Err(Error::InvalidParameter("grid has no pixels inside the disk".into()));
    }
    Ok((sum / count as f64).sqrt())
}
