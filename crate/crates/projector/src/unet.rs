//! Forward pass of the projector network.

use ndarray::Array2;

use crate::error::{ProjectorError, Result};
use crate::ops::{self, FeatureMap};
use crate::weights::ProjectorWeights;

/// Real and imaginary planes of a normalized contrast estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorInput {
    re: Array2<f32>,
    im: Array2<f32>,
}

impl ProjectorInput {
    pub fn new(re: Array2<f32>, im: Array2<f32>) -> Result<Self> {
        if re.dim() != im.dim() || re.nrows() != re.ncols() {
            return Err(ProjectorError::InputShapeMismatch {
                found: re.dim(),
                reason: format!("channels must be equal square planes, got {:?} and {:?}", re.dim(), im.dim()),
            });
        }
        Ok(Self { re, im })
    }

    pub fn n(&self) -> usize {
        self.re.nrows()
    }

    pub fn re(&self) -> &Array2<f32> {
        &self.re
    }

    pub fn im(&self) -> &Array2<f32> {
        &self.im
    }
}

fn conv_block(w: &ProjectorWeights, prefix: &str, mut x: FeatureMap) -> FeatureMap {
    let eps = w.architecture().bn_eps;
    for i in 0..2 {
        let t = |s: &str| w.data(&format!("{prefix}.{s}"));
        x = ops::conv3x3(&x, t(&format!("conv{i}.weight")), t(&format!("conv{i}.bias")));
        ops::batch_norm(
            &mut x,
            t(&format!("bn{i}.weight")),
            t(&format!("bn{i}.bias")),
            t(&format!("bn{i}.running_mean")),
            t(&format!("bn{i}.running_var")),
            eps,
        );
        ops::relu(&mut x);
    }
    x
}

/// Evaluates the network on one input; output has the input's spatial size.
///
/// The last stages are: 1×1 convolution to one channel, addition of input
/// channel 0, then LeakyReLU.
pub fn infer(w: &ProjectorWeights, x: &ProjectorInput) -> Result<Array2<f32>> {
    let n = x.n();
    let factor = 1usize << w.depth();
    if n == 0 || n % factor != 0 {
        return Err(ProjectorError::InputShapeMismatch {
            found: x.re.dim(),
            reason: format!("side must be a positive multiple of {factor}"),
        });
    }
    let re: Vec<f32> = x.re.iter().copied().collect();
    let im: Vec<f32> = x.im.iter().copied().collect();
    let mut h = FeatureMap::from_planes(&[&re, &im], n, n);

    let mut skips = Vec::with_capacity(w.depth());
    for level in 0..w.depth() {
        h = conv_block(w, &format!("enc{level}"), h);
        let pooled = ops::max_pool2(&h);
        skips.push(std::mem::replace(&mut h, pooled));
    }
    h = conv_block(w, "mid", h);
    for level in (0..w.depth()).rev() {
        let up = ops::conv_transpose2x2(
            &h,
            w.data(&format!("dec{level}.up.weight")),
            w.data(&format!("dec{level}.up.bias")),
        );
        let skip = skips.pop().expect("one skip per level");
        h = conv_block(w, &format!("dec{level}"), ops::concat(&skip, &up));
    }
    let out = ops::conv1x1(&h, w.data("out.weight"), w.data("out.bias"));
    let slope = w.architecture().leaky_slope;
    let values = out
        .data
        .iter()
        .zip(&re)
        .map(|(v, skip)| ops::leaky_relu(v + skip, slope))
        .collect();
    Ok(Array2::from_shape_vec((n, n), values).expect("n × n output"))
}
