use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScatterConfig;
use crate::error::{Error, Result};
use crate::forward::{add_noise, forward_map, kernel_for};
use crate::grid::{ContrastGrid, Grid};
use crate::io::{read_contrast, read_far_field, write_contrast, write_far_field};

use super::idx::DigitSource;
use super::synth::synthesize_contrast;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Settings of one generated dataset.
#[derive(Debug, Clone)]
pub struct DatasetParams {
    /// Geometry, direction counts and solver settings; `n` is the simulation grid.
    pub base: ScatterConfig,
    pub count: usize,
    /// Amplitudes `‖m‖_∞` are drawn uniformly from `[a, b]`.
    pub amplitude: (f64, f64),
    /// Landweber wave numbers `k_1 < … < k_L`, then the IRGNM wave number `k_{L+1}`.
    pub frequencies: Vec<f64>,
    pub delta: f64,
    pub seed: u64,
    /// Resolution of the stored ground truths.
    pub n_truth: usize,
}

impl DatasetParams {
    pub fn validate(&self, available: usize) -> Result<()> {
        self.base.validate()?;
        let (a, b) = self.amplitude;
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("amplitude range [{a}, {b}] is invalid")));
        }
        if self.count > available {
            return Err(Error::InvalidParameter(format!(
                "{} samples requested but the source holds {available} images",
                self.count
            )));
        }
        let landweber = &self.frequencies[..self.frequencies.len().saturating_sub(1)];
        if self.frequencies.is_empty() || landweber.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "frequencies must be non-empty with the Landweber wave numbers increasing".into(),
            ));
        }
        for &k in &self.frequencies {
            self.base.with_k(k)?;
        }
        Grid::new(self.base.rho, self.n_truth)?;
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEntry {
    pub id: String,
    pub image_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    pub amplitude: f64,
    pub noise_seed: u64,
    /// Ground truth, relative to the manifest directory.
    pub truth: PathBuf,
    /// One far field per frequency, in schedule order.
    pub data: Vec<PathBuf>,
}

/// Index of a generated dataset. Paths are stored relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub rho: f64,
    pub n_truth: usize,
    pub n_sim: usize,
    pub p: usize,
    pub q: usize,
    pub delta: f64,
    pub seed: u64,
    pub frequencies: Vec<f64>,
    pub samples: Vec<SampleEntry>,
    #[serde(skip)]
    root: PathBuf,
}

impl DatasetManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always representable")
    }

    pub fn from_toml(text: &str, root: &Path) -> Result<Self> {
        let mut m: Self = toml::from_str(text).map_err(|e| Error::Format {
            path: root.join(MANIFEST_FILE),
            reason: e.to_string(),
        })?;
        m.root = root.to_owned();
        Ok(m)
    }

    /// Writes `<root>/manifest.toml`.
    pub fn write(&self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_toml()).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }

    /// Reads a manifest file; relative paths resolve against its directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn resolve(&self, relative: &Path) -> PathBuf {
        self.root.join(relative)
    }

    /// Base configuration at the first frequency and the simulation grid.
    pub fn config(&self) -> Result<ScatterConfig> {
        ScatterConfig::new(self.rho, self.frequencies[0], self.n_sim, self.p, self.q)
    }

    pub fn truth(&self, sample: &SampleEntry) -> Result<ContrastGrid> {
        read_contrast(&self.resolve(&sample.truth)).map_err(|e| e.for_sample(&sample.id))
    }

    pub fn data(&self, sample: &SampleEntry) -> Result<Vec<crate::farfield::FarField>> {
        sample
            .data
            .iter()
            .map(|p| read_far_field(&self.resolve(p)).map_err(|e| e.for_sample(&sample.id)))
            .collect()
    }

    /// Reads every referenced file and checks it against the manifest.
    pub fn verify(&self) -> Result<()> {
        for s in &self.samples {
            let truth = self.truth(s)?;
            if truth.n() != self.n_truth {
                return Err(Error::DimensionMismatch(format!("truth on n = {}", truth.n())).for_sample(&s.id));
            }
            let data = self.data(s)?;
            if data.len() != self.frequencies.len() {
                return Err(Error::DimensionMismatch(format!("{} data files", data.len())).for_sample(&s.id));
            }
            for (ff, &k) in data.iter().zip(&self.frequencies) {
                if ff.k() != k || ff.p() != self.p || ff.q() != self.q {
                    return Err(Error::DimensionMismatch(format!("far field at k = {}", ff.k())).for_sample(&s.id));
                }
            }
        }
        Ok(())
    }
}

fn sample_id(index: usize) -> String {
    format!("s{index:05}")
}

/// Draws the sample plan: image indices, amplitudes and noise seeds.
fn plan(src: &DigitSource, params: &DatasetParams) -> Vec<(usize, f64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let picks = sample(&mut rng, src.len(), params.count).into_vec();
    let (a, b) = params.amplitude;
    picks
        .into_iter()
        .map(|idx| {
            let amp = if a == b { a } else { rng.random_range(a..=b) };
            (idx, amp, rng.random::<u64>())
        })
        .collect()
}

/// Amplitudes the generator would assign, without solving anything.
pub fn draw_amplitudes(src: &DigitSource, params: &DatasetParams) -> Result<Vec<f64>> {
    params.validate(src.len())?;
    Ok(plan(src, params).into_iter().map(|(_, a, _)| a).collect())
}

/// Synthesizes `count` contrasts, simulates noisy far fields at every
/// frequency, and writes them with a manifest under `out_dir`.
///
/// The far field at frequency index `l` uses noise seed `noise_seed + l`.
pub fn generate_dataset(src: &DigitSource, params: &DatasetParams, out_dir: &Path) -> Result<DatasetManifest> {
    params.validate(src.len())?;
    let mkdir = |d: &Path| std::fs::create_dir_all(d).map_err(|e| Error::io(format!("creating {}", d.display()), e));
    mkdir(&out_dir.join("truth"))?;
    mkdir(&out_dir.join("data"))?;

    let sim_grid = params.base.grid();
    let truth_grid = Grid::new(params.base.rho, params.n_truth)?;
    let configs: Vec<ScatterConfig> =
        params.frequencies.iter().map(|&k| params.base.with_k(k)).collect::<Result<_>>()?;
    let kernels: Vec<_> = configs.iter().map(kernel_for).collect();

    let samples = plan(src, params)
        .into_par_iter()
        .enumerate()
        .map(|(i, (image_index, amplitude, noise_seed))| {
            let id = sample_id(i);
            let run = || -> Result<SampleEntry> {
                let img = &src.images[image_index];
                let truth = synthesize_contrast(img, amplitude, &truth_grid)?;
                let truth_rel = PathBuf::from("truth").join(format!("{id}.ctr"));
                write_contrast(&out_dir.join(&truth_rel), &truth)?;
                let sim = synthesize_contrast(img, amplitude, &sim_grid)?;
                let mut data = Vec::with_capacity(configs.len());
                for (l, (cfg, kernel)) in configs.iter().zip(&kernels).enumerate() {
                    let clean = forward_map(kernel, &sim, cfg)?;
                    let noisy = add_noise(&clean, params.delta, noise_seed.wrapping_add(l as u64))?;
                    let rel = PathBuf::from("data").join(format!("{id}-k{l}.ffd"));
                    write_far_field(&out_dir.join(&rel), &noisy)?;
                    data.push(rel);
                }
                Ok(SampleEntry {
                    id: id.clone(),
                    image_index,
                    label: src.labels.as_ref().map(|l| l[image_index]),
                    amplitude,
                    noise_seed,
                    truth: truth_rel,
                    data,
                })
            };
            run().map_err(|e| e.for_sample(&id))
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        rho: params.base.rho,
        n_truth: params.n_truth,
        n_sim: params.base.n,
        p: params.base.p,
        q: params.base.q,
        delta: params.delta,
        seed: params.seed,
        frequencies: params.frequencies.clone(),
        samples,
        root: out_dir.to_owned(),
    };
    manifest.write()?;
    Ok(manifest)
}
