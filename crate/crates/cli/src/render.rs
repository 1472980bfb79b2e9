//! Heatmap rendering of contrast grids.

use image::codecs::png::PngEncoder;
use image::{ImageEncoder, RgbImage};
use lpinv_core::ContrastGrid;

/// Perceptually ordered dark-blue to yellow ramp, sampled at nine stops.
const RAMP: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

fn color(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let (a, b) = (f64::from(RAMP[i][c]), f64::from(RAMP[i + 1][c]));
        out[c] = (a + f * (b - a)).round() as u8;
    }
    out
}

/// PNG bytes of the real part over `[min, max]`, `scale` pixels per cell.
///
/// The first grid axis runs left to right and the second bottom to top.
pub fn render_png(m: &ContrastGrid, min: f64, max: f64, scale: u32) -> Result<Vec<u8>, String> {
    if !(min < max) || !min.is_finite() || !max.is_finite() {
        return Err(format!("color range needs min < max, got [{min}, {max}]"));
    }
    if scale == 0 {
        return Err("scale must be at least 1".into());
    }
    let n = m.n() as u32;
    let side = n * scale;
    let values = m.values();
    let img = RgbImage::from_fn(side, side, |px, py| {
        let i = (px / scale) as usize;
        let j = (n - 1 - py / scale) as usize;
        image::Rgb(color((values[[i, j]].re - min) / (max - min)))
    });
    let mut bytes = Vec::new();
    PngEncoder::new(&mut bytes)
        .write_image(img.as_raw(), side, side, image::ExtendedColorType::Rgb8)
        .map_err(|e| e.to_string())?;
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(color(0.0), RAMP[0]);
        assert_eq!(color(1.0), RAMP[8]);
        assert_eq!(color(-3.0), RAMP[0]);
        assert_eq!(color(0.5), RAMP[4]);
    }
}
