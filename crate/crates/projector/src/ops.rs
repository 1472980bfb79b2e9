//! `f32` feature-map primitives in channel-major layout.

/// A `c × h × w` stack of feature planes, row-major within each plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_planes(planes: &[&[f32]], height: usize, width: usize) -> Self {
        let mut data = Vec::with_capacity(planes.len() * height * width);
        for p in planes {
            assert_eq!(p.len(), height * width);
            data.extend_from_slice(p);
        }
        Self { channels: planes.len(), height, width, data }
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let hw = self.height * self.width;
        &self.data[c * hw..(c + 1) * hw]
    }

    fn plane_len(&self) -> usize {
        self.height * self.width
    }
}

/// `C = A B` for row-major `A: m × k`, `B: k × n`, overwriting `c`.
fn matmul(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    // SAFETY: the slices have the asserted lengths and the strides below
    // describe dense row-major matrices inside them.
    unsafe {
        matrixmultiply::sgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            0.0,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// 3×3 convolution, stride 1, zero padding 1. `weight` has layout `(out, in, 3, 3)`.
pub fn conv3x3(x: &FeatureMap, weight: &[f32], bias: &[f32]) -> FeatureMap {
    let (cin, h, w) = (x.channels, x.height, x.width);
    let cout = bias.len();
    assert_eq!(weight.len(), cout * cin * 9);
    let hw = h * w;
    // Column matrix: row (c, dy, dx), column (i, j).
    let mut cols = vec![0.0f32; cin * 9 * hw];
    for c in 0..cin {
        let plane = x.plane(c);
        for dy in 0..3 {
            for dx in 0..3 {
                let row = &mut cols[((c * 9) + dy * 3 + dx) * hw..][..hw];
                for i in 0..h {
                    let si = i as isize + dy as isize - 1;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    let src = &plane[si as usize * w..][..w];
                    let dst = &mut row[i * w..][..w];
                    match dx {
                        0 => dst[1..].copy_from_slice(&src[..w - 1]),
                        1 => dst.copy_from_slice(src),
                        _ => dst[..w - 1].copy_from_slice(&src[1..]),
                    }
                }
            }
        }
    }
    let mut out = FeatureMap::zeros(cout, h, w);
    matmul(cout, cin * 9, hw, weight, &cols, &mut out.data);
    add_bias(&mut out, bias);
    out
}

/// 1×1 convolution. `weight` has layout `(out, in, 1, 1)`.
pub fn conv1x1(x: &FeatureMap, weight: &[f32], bias: &[f32]) -> FeatureMap {
    let cout = bias.len();
    assert_eq!(weight.len(), cout * x.channels);
    let mut out = FeatureMap::zeros(cout, x.height, x.width);
    matmul(cout, x.channels, x.plane_len(), weight, &x.data, &mut out.data);
    add_bias(&mut out, bias);
    out
}

fn add_bias(x: &mut FeatureMap, bias: &[f32]) {
    let hw = x.plane_len();
    for (plane, b) in x.data.chunks_mut(hw).zip(bias) {
        plane.iter_mut().for_each(|v| *v += b);
    }
}

/// Inference-mode batch normalization with running statistics.
pub fn batch_norm(x: &mut FeatureMap, gamma: &[f32], beta: &[f32], mean: &[f32], var: &[f32], eps: f32) {
    let hw = x.plane_len();
    for (c, plane) in x.data.chunks_mut(hw).enumerate() {
        let scale = gamma[c] / (var[c] + eps).sqrt();
        let shift = beta[c] - mean[c] * scale;
        plane.iter_mut().for_each(|v| *v = *v * scale + shift);
    }
}

pub fn relu(x: &mut FeatureMap) {
    x.data.iter_mut().for_each(|v| *v = v.max(0.0));
}

pub fn leaky_relu(v: f32, slope: f32) -> f32 {
    if v >= 0.0 { v } else { slope * v }
}

/// 2×2 max pooling with stride 2.
pub fn max_pool2(x: &FeatureMap) -> FeatureMap {
    let (h, w) = (x.height / 2, x.width / 2);
    let mut out = FeatureMap::zeros(x.channels, h, w);
    for c in 0..x.channels {
        let src = x.plane(c);
        let dst = &mut out.data[c * h * w..][..h * w];
        for i in 0..h {
            for j in 0..w {
                let a = src[2 * i * x.width + 2 * j];
                let b = src[2 * i * x.width + 2 * j + 1];
                let c2 = src[(2 * i + 1) * x.width + 2 * j];
                let d = src[(2 * i + 1) * x.width + 2 * j + 1];
                dst[i * w + j] = a.max(b).max(c2).max(d);
            }
        }
    }
    out
}

/// 2×2 transposed convolution with stride 2. `weight` has layout `(in, out, 2, 2)`.
pub fn conv_transpose2x2(x: &FeatureMap, weight: &[f32], bias: &[f32]) -> FeatureMap {
    let (cin, h, w) = (x.channels, x.height, x.width);
    let cout = bias.len();
    assert_eq!(weight.len(), cin * cout * 4);
    let hw = h * w;
    let mut out = FeatureMap::zeros(cout, 2 * h, 2 * w);
    let mut tap = vec![0.0f32; cout * cin];
    let mut prod = vec![0.0f32; cout * hw];
    for a in 0..2 {
        for b in 0..2 {
            for o in 0..cout {
                for c in 0..cin {
                    tap[o * cin + c] = weight[((c * cout + o) * 2 + a) * 2 + b];
                }
            }
            matmul(cout, cin, hw, &tap, &x.data, &mut prod);
            for o in 0..cout {
                let dst = &mut out.data[o * 4 * hw..][..4 * hw];
                for i in 0..h {
                    for j in 0..w {
                        dst[(2 * i + a) * 2 * w + 2 * j + b] = prod[o * hw + i * w + j] + bias[o];
                    }
                }
            }
        }
    }
    out
}

/// Channel concatenation `[first, second]`.
pub fn concat(first: &FeatureMap, second: &FeatureMap) -> FeatureMap {
    assert_eq!((first.height, first.width), (second.height, second.width));
    let mut data = Vec::with_capacity(first.data.len() + second.data.len());
    data.extend_from_slice(&first.data);
    data.extend_from_slice(&second.data);
    FeatureMap {
        channels: first.channels + second.channels,
        height: first.height,
        width: first.width,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(c: usize, h: usize, w: usize) -> FeatureMap {
        let mut x = FeatureMap::zeros(c, h, w);
        for (i, v) in x.data.iter_mut().enumerate() {
            *v = ((i * 37) % 11) as f32 - 5.0;
        }
        x
    }

    /// Direct six-loop convolution.
    fn conv3x3_naive(x: &FeatureMap, weight: &[f32], bias: &[f32]) -> FeatureMap {
        let (cin, h, w) = (x.channels, x.height, x.width);
        let mut out = FeatureMap::zeros(bias.len(), h, w);
        for o in 0..bias.len() {
            for i in 0..h {
                for j in 0..w {
                    let mut acc = bias[o];
                    for c in 0..cin {
                        for dy in 0..3 {
                            for dx in 0..3 {
                                let (si, sj) = (i as isize + dy - 1, j as isize + dx - 1);
                                if si >= 0 && sj >= 0 && si < h as isize && sj < w as isize {
                                    acc += weight[((o * cin + c) * 3 + dy as usize) * 3 + dx as usize]
                                        * x.data[(c * h + si as usize) * w + sj as usize];
                                }
                            }
                        }
                    }
                    out.data[(o * h + i) * w + j] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn conv3x3_matches_direct_loops() {
        let x = ramp(3, 5, 6);
        let weight: Vec<f32> = (0..4 * 3 * 9).map(|i| ((i * 13) % 7) as f32 * 0.1 - 0.3).collect();
        let bias = [0.5, -0.25, 0.0, 1.0];
        let fast = conv3x3(&x, &weight, &bias);
        let slow = conv3x3_naive(&x, &weight, &bias);
        for (a, b) in fast.data.iter().zip(&slow.data) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn identity_kernels_are_identity() {
        let x = ramp(2, 4, 4);
        let mut w1 = vec![0.0; 4];
        w1[0] = 1.0;
        w1[3] = 1.0;
        assert_eq!(conv1x1(&x, &w1, &[0.0, 0.0]), x);
        let mut w3 = vec![0.0; 2 * 2 * 9];
        w3[4] = 1.0;
        w3[(2 + 1) * 9 + 4] = 1.0;
        assert_eq!(conv3x3(&x, &w3, &[0.0, 0.0]), x);
    }

    #[test]
    fn unit_batch_norm_is_identity() {
        let x = ramp(3, 4, 4);
        let mut y = x.clone();
        batch_norm(&mut y, &[1.0; 3], &[0.0; 3], &[0.0; 3], &[1.0; 3], 1e-12);
        for (a, b) in x.data.iter().zip(&y.data) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn max_pool_undoes_replication() {
        let x = ramp(2, 3, 3);
        let mut up = FeatureMap::zeros(2, 6, 6);
        for c in 0..2 {
            for i in 0..6 {
                for j in 0..6 {
                    up.data[(c * 6 + i) * 6 + j] = x.data[(c * 3 + i / 2) * 3 + j / 2];
                }
            }
        }
        assert_eq!(max_pool2(&up), x);
    }

    #[test]
    fn transposed_conv_of_delta_places_kernel() {
        let mut x = FeatureMap::zeros(1, 3, 3);
        x.data[4] = 1.0;
        let weight = [1.0, 2.0, 3.0, 4.0, -1.0, -2.0, -3.0, -4.0];
        let y = conv_transpose2x2(&x, &weight, &[0.0, 0.5]);
        assert_eq!((y.channels, y.height, y.width), (2, 6, 6));
        for o in 0..2 {
            for i in 0..6 {
                for j in 0..6 {
                    let inside = (2..4).contains(&i) && (2..4).contains(&j);
                    let expected = if inside { weight[o * 4 + (i - 2) * 2 + (j - 2)] } else { 0.0 };
                    let bias = if o == 1 { 0.5 } else { 0.0 };
                    assert_eq!(y.data[(o * 6 + i) * 6 + j], expected + bias);
                }
            }
        }
    }
}
