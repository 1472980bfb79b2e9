use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ContrastGrid, Grid};

/// Ground-truth contrast from a grayscale raster.
///
/// The raster is read as a bilinear image covering `[-ρ, ρ]²` (raster rows
/// along the first grid axis), sampled at the pixel centers, cut to `B_ρ`,
/// and scaled so that its maximum equals `amplitude`. On a 64-pixel grid over
/// `[-2, 2]²` this is a 32 × 32 bilinear resample centered in the grid; finer
/// grids sample the same continuous image.
pub fn synthesize_contrast(img: &Array2<u8>, amplitude: f64, grid: &Grid) -> Result<ContrastGrid> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!("amplitude must be positive, got {amplitude}")));
    }
    let (rows, cols) = img.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("empty raster".into()));
    }
    let rho = grid.rho();
    let n = grid.n();
    let source = |coord: f64, len: usize| {
        let s = ((coord + rho) / (2.0 * rho) * len as f64 - 0.5).clamp(0.0, (len - 1) as f64);
        let lo = (s.floor() as usize).min(len - 1);
        let hi = (lo + 1).min(len - 1);
        (lo, hi, s - lo as f64)
    };
    let mut values = Array2::<f64>::zeros((n, n));
    for ((i, j), v) in values.indexed_iter_mut() {
        if !grid.in_disk(i, j) {
            continue;
        }
        let (x, y) = grid.point(i, j);
        let (r0, r1, fr) = source(x, rows);
        let (c0, c1, fc) = source(y, cols);
        let px = |r: usize, c: usize| f64::from(img[[r, c]]);
        *v = (1.0 - fr) * ((1.0 - fc) * px(r0, c0) + fc * px(r0, c1))
            + fr * ((1.0 - fc) * px(r1, c0) + fc * px(r1, c1));
    }
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        values.mapv_inplace(|v| v / peak * amplitude);
    }
    ContrastGrid::new(*grid, values.mapv(|v| Complex64::new(v, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob() -> Array2<u8> {
        Array2::from_shape_fn((28, 28), |(i, j)| {
            let (di, dj) = (i as f64 - 12.0, j as f64 - 15.0);
            (255.0 * (-(di * di + dj * dj) / 30.0).exp()) as u8
        })
    }

    #[test]
    fn zero_raster_gives_zero() {
        let g = Grid::new(1.0, 64).unwrap();
        let m = synthesize_contrast(&Array2::zeros((28, 28)), 2.0, &g).unwrap();
        assert_eq!(m.norm_inf(), 0.0);
    }

    #[test]
    fn peak_support_and_sign() {
        for n in [64, 128] {
            let g = Grid::new(1.0, n).unwrap();
            let m = synthesize_contrast(&blob(), 3.5, &g).unwrap();
            assert!((m.norm_inf() - 3.5).abs() < 1e-12);
            assert!(m.is_real());
            for ((i, j), v) in m.values().indexed_iter() {
                assert!(v.re >= 0.0);
                if v.re != 0.0 {
                    assert!(g.in_disk(i, j));
                }
            }
        }
    }

    #[test]
    fn matches_32_pixel_resample_on_coarse_grid() {
        // Centers of the middle 32 pixels map to source rows (t + 0.5) 28/32 - 0.5.
        let img = blob();
        let g = Grid::new(1.0, 64).unwrap();
        let m = synthesize_contrast(&img, 1.0, &g).unwrap();
        let (t, u) = (16usize, 15usize);
        let sr = ((t as f64 + 0.5) * 28.0 / 32.0 - 0.5).max(0.0);
        let sc = ((u as f64 + 0.5) * 28.0 / 32.0 - 0.5).max(0.0);
        let (r0, c0) = (sr.floor() as usize, sc.floor() as usize);
        let (fr, fc) = (sr - r0 as f64, sc - c0 as f64);
        let px = |r: usize, c: usize| f64::from(img[[r, c]]);
        let expected = (1.0 - fr) * ((1.0 - fc) * px(r0, c0) + fc * px(r0, c0 + 1))
            + fr * ((1.0 - fc) * px(r0 + 1, c0) + fc * px(r0 + 1, c0 + 1));
        let peak = img.iter().map(|&v| f64::from(v)).fold(0.0, f64::max);
        let got = m.values()[[t + 16, u + 16]].re;
        // Peak of the sampled image is within one grid step of the raster peak.
        assert!((got * peak - expected).abs() / expected < 0.02, "{got} {expected}");
    }
}
