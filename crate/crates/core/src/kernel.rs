//! FFT evaluation of the volume potential `(K f)(x) = ∫ Φ(x, y) f(y) dy` on a pixel grid.
//!
//! The kernel `Φ(x, y) = (i/4) H₀⁽¹⁾(k|x - y|)` is sampled at pixel offsets
//! with midpoint weight `h²`, truncated at `|x - y| <= 2ρ`, and the singular
//! self-cell is replaced by the cell mean of `Φ` from its small-argument
//! expansion. Offsets are stored on a doubled periodic grid so that the
//! circular FFT convolution equals the linear discrete sum exactly.
//!
//! Two convolvers share the same weights: one over the whole `n × n` grid
//! (padded to `2n`), and one over the central `n/2 × n/2` block that holds
//! `B_ρ` (padded to `n`), which is what the Lippmann–Schwinger solves use.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Mean of `ln|y|` over the unit square `[0,1]²`.
const UNIT_SQUARE_MEAN_LOG: f64 = -0.368_028_246_322_579_04;
/// Mean of `|y|² ln|y|` over the unit square `[0,1]²`.
const UNIT_SQUARE_MEAN_R2_LOG: f64 = -0.062_707_107_569_757_68;

/// Hankel function of the first kind, `H_n⁽¹⁾(x)` for integer order and `x > 0`.
pub fn hankel1(order: u32, x: f64) -> Complex64 {
    Complex64::new(puruspe::Jn(order, x), puruspe::Yn(order, x))
}

/// Fundamental solution `(i/4) H₀⁽¹⁾(k r)` of the 2D Helmholtz equation, `r > 0`.
pub fn fundamental_solution(k: f64, r: f64) -> Complex64 {
    Complex64::new(0.0, 0.25) * hankel1(0, k * r)
}

/// Mean of `Φ` over a square cell of side `h` centered on the singularity.
///
/// Uses `H₀⁽¹⁾(x) ≈ (1 - x²/4) + (2i/π)[(ln(x/2) + γ)(1 - x²/4) + x²/4]`,
/// exact through `O(x²)` and `O(x² ln x)`.
pub fn self_cell_mean(k: f64, h: f64) -> Complex64 {
    let s = 0.5 * h;
    let ln_s = s.ln();
    let mean_log_r = ln_s + UNIT_SQUARE_MEAN_LOG;
    let mean_r2 = 2.0 * s * s / 3.0;
    let mean_r2_log_r = s * s * (UNIT_SQUARE_MEAN_R2_LOG + ln_s * 2.0 / 3.0);
    let ln_half_k = (0.5 * k).ln();
    let k2 = k * k;

    let mean_j0 = 1.0 - k2 * mean_r2 / 4.0;
    // <(ln(kr/2) + γ) J0(kr)>
    let mean_log_j0 = (mean_log_r + ln_half_k + EULER_GAMMA)
        - k2 / 4.0 * (mean_r2_log_r + (ln_half_k + EULER_GAMMA) * mean_r2);
    let mean_y0 = 2.0 / PI * (mean_log_j0 + k2 * mean_r2 / 4.0);
    Complex64::new(0.0, 0.25) * Complex64::new(mean_j0, mean_y0)
}

/// Discrete kernel weight at pixel offset `(di, dj)`, including the `h²` factor.
pub fn kernel_weight(grid: &Grid, k: f64, di: i64, dj: i64) -> Complex64 {
    let n = grid.n() as i64;
    let h = grid.h();
    if di == 0 && dj == 0 {
        return h * h * self_cell_mean(k, h);
    }
    // |offset| <= 2ρ  <=>  4 (di² + dj²) <= n²
    if 4 * (di * di + dj * dj) > n * n {
        return Complex64::new(0.0, 0.0);
    }
    let r = h * ((di * di + dj * dj) as f64).sqrt();
    h * h * fundamental_solution(k, r)
}

/// Precomputed Fourier symbol of the volume potential for one `(k, grid)` pair.
pub struct GreenKernel {
    grid: Grid,
    k: f64,
    support: Convolver,
    full: OnceLock<Convolver>,
}

impl std::fmt::Debug for GreenKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenKernel")
            .field("n", &self.grid.n())
            .field("rho", &self.grid.rho())
            .field("k", &self.k)
            .finish()
    }
}

impl GreenKernel {
    /// # Panics
    /// If the grid side is not divisible by 4.
    pub fn new(grid: Grid, k: f64) -> Self {
        assert!(grid.n() % 4 == 0, "grid side must be divisible by 4");
        let support = Convolver::new(&grid, k, grid.n() / 2, grid.n());
        Self {
            grid,
            k,
            support,
            full: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Side of the central block containing `B_ρ`.
    pub fn support_len(&self) -> usize {
        self.grid.n() / 2
    }

    /// Grid index of the first row/column of the central block.
    pub fn support_offset(&self) -> usize {
        self.grid.n() / 4
    }

    /// `K f` for `f` sampled on the whole grid.
    pub fn apply(&self, f: &Array2<Complex64>) -> Array2<Complex64> {
        let n = self.grid.n();
        assert_eq!(f.dim(), (n, n), "input must be sampled on the kernel grid");
        let conv = self
            .full
            .get_or_init(|| Convolver::new(&self.grid, self.k, n, 2 * n));
        let mut ws = conv.workspace();
        let mut out = Array2::zeros((n, n));
        conv.apply(f.view(), out.view_mut(), &mut ws);
        out
    }

    pub fn support_workspace(&self) -> ConvWorkspace {
        self.support.workspace()
    }

    /// `K f` restricted to the central block, for `f` supported in that block.
    ///
    /// Equal to [`GreenKernel::apply`] on the block up to round-off, at a
    /// quarter of the cost.
    pub fn apply_on_support(
        &self,
        f: ArrayView2<Complex64>,
        out: ArrayViewMut2<Complex64>,
        ws: &mut ConvWorkspace,
    ) {
        self.support.apply(f, out, ws);
    }
}

/// `K f` for `f` sampled on `kernel`'s grid.
pub fn apply_volume_potential(kernel: &GreenKernel, f: &Array2<Complex64>) -> Array2<Complex64> {
    kernel.apply(f)
}

/// Linear convolution of a `block × block` input with the kernel weights via
/// circular convolution of period `size >= 2 block`.
struct Convolver {
    block: usize,
    size: usize,
    /// Transposed symbol, matching the layout after the column pass.
    symbol_t: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

pub struct ConvWorkspace {
    buf: Vec<Complex64>,
    tbuf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Convolver {
    fn new(grid: &Grid, k: f64, block: usize, size: usize) -> Self {
        debug_assert!(size >= 2 * block);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        let ifft = planner.plan_fft_inverse(size);
        let wrap = |a: usize| -> i64 {
            if a < size / 2 {
                a as i64
            } else {
                a as i64 - size as i64
            }
        };
        let mut samples = vec![Complex64::new(0.0, 0.0); size * size];
        for a in 0..size {
            for b in 0..size {
                samples[a * size + b] = kernel_weight(grid, k, wrap(a), wrap(b));
            }
        }
        let mut conv = Self {
            block,
            size,
            symbol_t: Vec::new(),
            fft,
            ifft,
        };
        let mut ws = conv.workspace();
        ws.buf.copy_from_slice(&samples);
        conv.forward_2d(&mut ws, size);
        // Undo the 1/size² of the inverse transform once, here.
        let scale = 1.0 / (size * size) as f64;
        conv.symbol_t = ws.tbuf.iter().map(|v| v * scale).collect();
        conv
    }

    fn workspace(&self) -> ConvWorkspace {
        let len = self.size * self.size;
        let scratch_len = self
            .fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len());
        ConvWorkspace {
            buf: vec![Complex64::new(0.0, 0.0); len],
            tbuf: vec![Complex64::new(0.0, 0.0); len],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// FFT of the first `rows` rows of `ws.buf` (the rest must be zero),
    /// leaving the transposed 2D spectrum in `ws.tbuf`.
    fn forward_2d(&self, ws: &mut ConvWorkspace, rows: usize) {
        let s = self.size;
        self.fft
            .process_with_scratch(&mut ws.buf[..rows * s], &mut ws.scratch);
        transpose(&ws.buf, &mut ws.tbuf, s);
        self.fft.process_with_scratch(&mut ws.tbuf, &mut ws.scratch);
    }

    fn apply(
        &self,
        input: ArrayView2<Complex64>,
        mut output: ArrayViewMut2<Complex64>,
        ws: &mut ConvWorkspace,
    ) {
        let (b, s) = (self.block, self.size);
        assert_eq!(input.dim(), (b, b));
        assert_eq!(output.dim(), (b, b));
        ws.buf.fill(Complex64::new(0.0, 0.0));
        for (i, row) in input.outer_iter().enumerate() {
            for (dst, src) in ws.buf[i * s..i * s + b].iter_mut().zip(row.iter()) {
                *dst = *src;
            }
        }
        self.forward_2d(ws, b);
        for (v, w) in ws.tbuf.iter_mut().zip(self.symbol_t.iter()) {
            *v *= w;
        }
        self.ifft.process_with_scratch(&mut ws.tbuf, &mut ws.scratch);
        // Only the first `b` rows of the un-transposed result are needed.
        for i in 0..b {
            for j in 0..s {
                ws.buf[i * s + j] = ws.tbuf[j * s + i];
            }
        }
        self.ifft
            .process_with_scratch(&mut ws.buf[..b * s], &mut ws.scratch);
        for (i, mut row) in output.outer_iter_mut().enumerate() {
            for (dst, src) in row.iter_mut().zip(ws.buf[i * s..i * s + b].iter()) {
                *dst = *src;
            }
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const TILE: usize = 32;
    for i0 in (0..n).step_by(TILE) {
        for j0 in (0..n).step_by(TILE) {
            for i in i0..(i0 + TILE).min(n) {
                for j in j0..(j0 + TILE).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}
