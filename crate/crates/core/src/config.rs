use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const DEFAULT_LINSOLVE_TOL: f64 = 1e-6;
pub const DEFAULT_LINSOLVE_MAXITER: usize = 500;
pub const DEFAULT_GMRES_RESTART: usize = 50;

/// Geometry and discretization of one scattering experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterConfig {
    pub rho: f64,
    pub k: f64,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub linsolve_tol: f64,
    pub linsolve_maxiter: usize,
    pub gmres_restart: usize,
    pub rng_seed: u64,
}

impl ScatterConfig {
    pub fn new(rho: f64, k: f64, n: usize, p: usize, q: usize) -> Result<Self> {
        let cfg = Self {
            rho,
            k,
            n,
            p,
            q,
            linsolve_tol: DEFAULT_LINSOLVE_TOL,
            linsolve_maxiter: DEFAULT_LINSOLVE_MAXITER,
            gmres_restart: DEFAULT_GMRES_RESTART,
            rng_seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("wave number must be positive, got {}", self.k));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("grid side must be a power of two >= 8, got {}", self.n));
        }
        if self.p == 0 || self.q == 0 {
            return bad("direction counts must be at least 1".into());
        }
        if !(self.linsolve_tol > 0.0) || self.linsolve_maxiter == 0 || self.gmres_restart == 0 {
            return bad("linear solver tolerance, iteration cap and restart must be positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.rho, self.n).expect("validated config")
    }

    pub fn with_k(mut self, k: f64) -> Result<Self> {
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n(mut self, n: usize) -> Result<Self> {
        self.n = n;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: f64, maxiter: usize) -> Result<Self> {
        self.linsolve_tol = tol;
        self.linsolve_maxiter = maxiter;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}
