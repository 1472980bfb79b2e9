use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unit vector at angle `2π index / count`.
///
/// Both the observation directions `x̂_p` and the incident directions `d_q`
/// use this placement, starting from angle zero.
pub fn direction(index: usize, count: usize) -> (f64, f64) {
    let theta = 2.0 * PI * index as f64 / count as f64;
    (theta.cos(), theta.sin())
}

/// Far-field samples `u^∞(x̂_p, d_q)` at one wave number, observation index first.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    k: f64,
    values: Array2<Complex64>,
}

impl FarField {
    pub fn new(k: f64, values: Array2<Complex64>) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("wave number must be positive, got {k}")));
        }
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::DimensionMismatch("far field needs at least one direction".into()));
        }
        Ok(Self { k, values })
    }

    pub fn zeros(k: f64, p: usize, q: usize) -> Result<Self> {
        Self::new(k, Array2::zeros((p, q)))
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
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

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &FarField) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn check_same_shape(&self, other: &FarField) -> Result<()> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::DimensionMismatch(format!(
                "far fields of shape {:?} and {:?}",
                self.values.dim(),
                other.values.dim()
            )));
        }
        Ok(())
    }
}
