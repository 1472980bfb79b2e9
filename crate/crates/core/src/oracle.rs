//! Separation-of-variables solution for a homogeneous penetrable disk.
//!
//! For a disk of radius `a` and constant contrast `m` centered at the origin,
//! the scattered field is `Σ_n i^n β_n H_n(kr) e^{in(θ-φ)}` with
//!
//! ```text
//! β_n = [k₁ J'_n(k₁a) J_n(ka) - k J'_n(ka) J_n(k₁a)] / [k H'_n(ka) J_n(k₁a) - k₁ J'_n(k₁a) H_n(ka)]
//! ```
//!
//! and `k₁ = k √(1 + m)`. Used only to check the discretized solver.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::config::ScatterConfig;
use crate::error::{Error, Result};
use crate::farfield::{direction, FarField};
use crate::kernel::hankel1;

type C = Complex64;

/// Highest series order tried before giving up.
pub const MAX_ORDER: usize = 200;
const TRUNCATION: f64 = 1e-12;

fn bessel_j(n: usize, x: f64) -> f64 {
    puruspe::Jn(n as u32, x)
}

fn bessel_j_prime(n: usize, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

fn hankel_prime(n: usize, x: f64) -> C {
    if n == 0 {
        -hankel1(1, x)
    } else {
        0.5 * (hankel1(n as u32 - 1, x) - hankel1(n as u32 + 1, x))
    }
}

/// Series coefficients `(β_n, γ_n)` of the scattered and interior fields.
#[derive(Debug, Clone)]
pub struct DiskSeries {
    pub k: f64,
    pub k_inner: f64,
    pub radius: f64,
    pub beta: Vec<C>,
    pub gamma: Vec<C>,
}

impl DiskSeries {
    /// Coefficients up to the automatic truncation order.
    pub fn new(contrast: f64, radius: f64, k: f64) -> Result<Self> {
        Self::build(contrast, radius, k, None)
    }

    /// Coefficients `0..=order`, bypassing the truncation rule.
    pub fn with_order(contrast: f64, radius: f64, k: f64, order: usize) -> Result<Self> {
        Self::build(contrast, radius, k, Some(order))
    }

    fn build(contrast: f64, radius: f64, k: f64, order: Option<usize>) -> Result<Self> {
        if !(1.0 + contrast > 0.0) || !(radius > 0.0) || !(k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "disk series needs 1 + m > 0, a > 0, k > 0 (m = {contrast}, a = {radius}, k = {k})"
            )));
        }
        let k1 = k * (1.0 + contrast).sqrt();
        let (x, x1) = (k * radius, k1 * radius);
        let mut beta = Vec::new();
        let mut gamma = Vec::new();
        let mut total = 0.0;
        let limit = order.unwrap_or(MAX_ORDER);
        for n in 0..=limit {
            let (j, jp) = (bessel_j(n, x), bessel_j_prime(n, x));
            let (j1, j1p) = (bessel_j(n, x1), bessel_j_prime(n, x1));
            let (h, hp) = (hankel1(n as u32, x), hankel_prime(n, x));
            let num = k1 * j1p * j - k * jp * j1;
            let den = k * hp * j1 - k1 * j1p * h;
            let b = if num == 0.0 { C::new(0.0, 0.0) } else { num / den };
            let g = if j1 == 0.0 { C::new(0.0, 0.0) } else { (j + b * h) / j1 };
            if !(b.re.is_finite() && b.im.is_finite() && g.re.is_finite() && g.im.is_finite()) {
                return Err(Error::SeriesDivergence { max_order: MAX_ORDER });
            }
            total += b.norm();
            beta.push(b);
            gamma.push(g);
            // Past the turning point the coefficients decay monotonically.
            let past_turning = n as f64 > x1.max(x);
            if order.is_none() && past_turning && b.norm() <= TRUNCATION * total {
                return Ok(Self { k, k_inner: k1, radius, beta, gamma });
            }
        }
        if order.is_some() {
            Ok(Self { k, k_inner: k1, radius, beta, gamma })
        } else {
            Err(Error::SeriesDivergence { max_order: MAX_ORDER })
        }
    }

    pub fn order(&self) -> usize {
        self.beta.len() - 1
    }

    /// `u^∞` at observation angle `θ` for incidence angle `φ`.
    pub fn far_field(&self, theta: f64, phi: f64) -> C {
        let t = theta - phi;
        let mut sum = self.beta[0];
        for (n, b) in self.beta.iter().enumerate().skip(1) {
            sum += 2.0 * b * (n as f64 * t).cos();
        }
        (2.0 / (PI * self.k)).sqrt() * C::from_polar(1.0, -PI / 4.0) * sum
    }

    /// Total field at `(x, y)` for incidence angle `φ`.
    pub fn total_field(&self, x: f64, y: f64, phi: f64) -> C {
        let r = (x * x + y * y).sqrt();
        let t = y.atan2(x) - phi;
        let inside = r <= self.radius;
        let mut sum = C::new(0.0, 0.0);
        for n in 0..self.beta.len() {
            let radial = if inside {
                self.gamma[n] * bessel_j(n, self.k_inner * r)
            } else {
                bessel_j(n, self.k * r) + self.beta[n] * hankel1(n as u32, self.k * r)
            };
            let weight = if n == 0 { 1.0 } else { 2.0 * (n as f64 * t).cos() };
            sum += C::i().powu(n as u32) * radial * weight;
        }
        if !inside {
            // The incident series is cut at the same order, which is fine near
            // the disk but not far from it.
            let d = (phi.cos(), phi.sin());
            let incident = C::from_polar(1.0, self.k * (x * d.0 + y * d.1));
            let mut inc_series = C::new(0.0, 0.0);
            for n in 0..self.beta.len() {
                let weight = if n == 0 { 1.0 } else { 2.0 * (n as f64 * t).cos() };
                inc_series += C::i().powu(n as u32) * bessel_j(n, self.k * r) * weight;
            }
            sum += incident - inc_series;
        }
        sum
    }
}

/// Far field of a homogeneous disk at the configuration's directions.
pub fn disk_oracle(contrast: f64, radius: f64, cfg: &ScatterConfig) -> Result<FarField> {
    let series = DiskSeries::new(contrast, radius, cfg.k)?;
    Ok(sample_far_field(&series, cfg))
}

pub(crate) fn sample_far_field(series: &DiskSeries, cfg: &ScatterConfig) -> FarField {
    let angle = |(x, y): (f64, f64)| y.atan2(x);
    let values = Array2::from_shape_fn((cfg.p, cfg.q), |(p, q)| {
        series.far_field(angle(direction(p, cfg.p)), angle(direction(q, cfg.q)))
    });
    FarField::new(cfg.k, values).expect("validated configuration")
}
