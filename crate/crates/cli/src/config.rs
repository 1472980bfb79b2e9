//! Run configuration files.
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use lpinv_core::config::{DEFAULT_GMRES_RESTART, DEFAULT_LINSOLVE_MAXITER, DEFAULT_LINSOLVE_TOL};
use lpinv_core::inversion::{DEFAULT_CG_MAXITER, DEFAULT_CG_TOL};
use lpinv_core::ScatterConfig;
use serde::Deserialize;

use crate::failure::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scatter: ScatterSection,
    pub simulate: Option<SimulateSection>,
    pub reconstruct: Option<ReconstructSection>,
    pub dataset: Option<DatasetSection>,
    #[serde(skip)]
    pub root: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub p: usize,
    pub q: usize,
    #[serde(default = "default_linsolve_tol")]
    pub linsolve_tol: f64,
    #[serde(default = "default_linsolve_maxiter")]
    pub linsolve_maxiter: usize,
    #[serde(default = "default_gmres_restart")]
    pub gmres_restart: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default = "default_n_sim")]
    pub n: usize,
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSection {
    /// Far fields for the Landweber stage, in increasing wave number.
    #[serde(default)]
    pub landweber_data: Vec<PathBuf>,
    /// Far field for the IRGNM stage.
    pub irgnm_data: Option<PathBuf>,
    #[serde(default = "default_n_la")]
    pub n_la: usize,
    #[serde(default = "default_n1")]
    pub n1: usize,
    #[serde(default = "default_n2")]
    pub n2: usize,
    /// Explicit IRGNM regularization parameters; overrides the geometric schedule.
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "default_alpha0")]
    pub alpha0: f64,
    #[serde(default = "default_alpha_ratio")]
    pub alpha_ratio: f64,
    #[serde(default = "default_n_ir")]
    pub n_ir: usize,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
    #[serde(default = "default_cg_maxiter")]
    pub cg_maxiter: usize,
    #[serde(default = "default_n_o")]
    pub n_o: usize,
    /// Starting contrast for the single-stage methods; zero when absent.
    pub initial: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub snapshots: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub images: PathBuf,
    pub labels: Option<PathBuf>,
    pub count: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
    #[serde(default = "default_n1")]
    pub n_truth: usize,
    pub out: PathBuf,
    /// Training sets to emit after generation: any of s1, s2, s3, s4.
    #[serde(default)]
    pub stages: Vec<String>,
}

fn default_rho() -> f64 {
    1.0
}
fn default_linsolve_tol() -> f64 {
    DEFAULT_LINSOLVE_TOL
}
fn default_linsolve_maxiter() -> usize {
    DEFAULT_LINSOLVE_MAXITER
}
fn default_gmres_restart() -> usize {
    DEFAULT_GMRES_RESTART
}
fn default_n_sim() -> usize {
    512
}
fn default_n_la() -> usize {
    100
}
fn default_n1() -> usize {
    64
}
fn default_n2() -> usize {
    256
}
fn default_alpha0() -> f64 {
    10.0
}
fn default_alpha_ratio() -> f64 {
    0.2
}
fn default_n_ir() -> usize {
    5
}
fn default_cg_tol() -> f64 {
    DEFAULT_CG_TOL
}
fn default_cg_maxiter() -> usize {
    DEFAULT_CG_MAXITER
}
fn default_n_o() -> usize {
    20
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_amplitude() -> [f64; 2] {
    [1.0, 5.0]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::from_io(path, e))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {}", path.display(), e.message())))?;
        cfg.root = path.parent().map(Path::to_owned).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }

    fn validate(&self) -> Result<(), Failure> {
        // Any wave number works for the geometry check.
        self.scatter_config(1.0, 8)?;
        if let Some(s) = &self.simulate {
            if s.frequencies.is_empty() {
                return Err(Failure::config("simulate.frequencies is empty"));
            }
            for &k in &s.frequencies {
                self.scatter_config(k, s.n)?;
            }
            if !(s.delta >= 0.0) {
                return Err(Failure::config("simulate.delta must be >= 0"));
            }
        }
        if let Some(r) = &self.reconstruct {
            for n in [r.n1, r.n2] {
                self.scatter_config(1.0, n)?;
            }
            if r.n2 % r.n1 != 0 {
                return Err(Failure::config("reconstruct.n2 must be a multiple of reconstruct.n1"));
            }
            let alphas = r.alphas();
            if alphas.iter().any(|a| !(*a > 0.0)) || alphas.windows(2).any(|w| w[1] > w[0]) {
                return Err(Failure::config("IRGNM parameters must be positive and non-increasing"));
            }
        }
        if let Some(d) = &self.dataset {
            let [a, b] = d.amplitude;
            if !(a > 0.0 && a <= b) {
                return Err(Failure::config("dataset.amplitude must satisfy 0 < a <= b"));
            }
            for s in &d.stages {
                s.parse::<lpinv_core::dataset::TrainingStage>().map_err(|e| Failure::config(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn scatter_config(&self, k: f64, n: usize) -> Result<ScatterConfig, Failure> {
        let s = &self.scatter;
        let cfg = ScatterConfig {
            rho: s.rho,
            k,
            n,
            p: s.p,
            q: s.q,
            linsolve_tol: s.linsolve_tol,
            linsolve_maxiter: s.linsolve_maxiter,
            gmres_restart: s.gmres_restart,
            rng_seed: 0,
        };
        cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn simulate(&self) -> Result<&SimulateSection, Failure> {
        self.simulate.as_ref().ok_or_else(|| Failure::config("configuration has no [simulate] section"))
    }

    pub fn reconstruct(&self) -> Result<&ReconstructSection, Failure> {
        self.reconstruct.as_ref().ok_or_else(|| Failure::config("configuration has no [reconstruct] section"))
    }

    pub fn dataset(&self) -> Result<&DatasetSection, Failure> {
        self.dataset.as_ref().ok_or_else(|| Failure::config("configuration has no [dataset] section"))
    }
}

impl ReconstructSection {
    pub fn alphas(&self) -> Vec<f64> {
        match &self.alphas {
            Some(a) => a.clone(),
            None => (0..self.n_ir).map(|i| self.alpha0 * self.alpha_ratio.powi(i as i32)).collect(),
        }
    }
}
