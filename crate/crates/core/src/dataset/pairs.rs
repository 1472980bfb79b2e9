use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forward::kernel_for;
use crate::grid::{downscale, normalize, ContrastGrid};
use crate::inversion::{irgnm_with, multi_frequency_landweber, scaled_projection, CombinedParams, Projector};
use crate::io::{read_contrast, write_contrast};

use super::manifest::{DatasetManifest, SampleEntry};

/// Which training set to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrainingStage {
    /// Normalized Landweber outputs.
    S1,
    /// The first projector applied to S1 inputs.
    S2,
    /// Normalized ground truths.
    S3,
    /// Normalized IRGNM outputs started from the projected Landweber output.
    S4,
}

impl TrainingStage {
    pub fn needs_projector(self) -> bool {
        matches!(self, Self::S2 | Self::S4)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::S1 => "s1",
            Self::S2 => "s2",
            Self::S3 => "s3",
            Self::S4 => "s4",
        }
    }
}

impl fmt::Display for TrainingStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrainingStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Self::S1),
            "s2" => Ok(Self::S2),
            "s3" => Ok(Self::S3),
            "s4" => Ok(Self::S4),
            _ => Err(Error::InvalidParameter(format!("unknown training stage {s:?}"))),
        }
    }
}

/// Reconstruction settings used to build training inputs.
#[derive(Debug, Clone)]
pub struct PairSettings {
    /// Working resolution `N1` of inputs and labels.
    pub n1: usize,
    pub n_la: usize,
    /// IRGNM schedule for S4 inputs.
    pub alphas: Vec<f64>,
}

impl PairSettings {
    pub fn new(n1: usize, n_la: usize, alphas: Vec<f64>) -> Self {
        Self { n1, n_la, alphas }
    }
}

/// One emitted pair, paths relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub id: String,
    pub input: PathBuf,
    pub label: PathBuf,
}

fn combined_params(manifest: &DatasetManifest, sample: &SampleEntry, settings: &PairSettings) -> Result<CombinedParams> {
    if manifest.frequencies.len() < 2 {
        return Err(Error::InvalidParameter(
            "training inputs need at least one Landweber frequency and one IRGNM frequency".into(),
        ));
    }
    let mut data = manifest.data(sample)?;
    let last = data.pop().expect("two or more frequencies");
    let base = manifest.config()?.with_n(settings.n1)?;
    let params = CombinedParams::new(base, data, settings.n_la, settings.n1, last, settings.alphas.clone(), settings.n1);
    params.validate()?;
    Ok(params)
}

fn label(manifest: &DatasetManifest, sample: &SampleEntry, n1: usize) -> Result<ContrastGrid> {
    let truth = manifest.truth(sample)?;
    let truth = match truth.n() {
        n if n == n1 => truth,
        n if n > n1 && n % n1 == 0 => downscale(&truth, n / n1)?,
        n => {
            return Err(Error::DimensionMismatch(format!("truth on n = {n} cannot be reduced to n = {n1}"))
                .for_sample(&sample.id))
        }
    };
    Ok(normalize(&truth))
}

/// Landweber output `m̃` at `N1`, cached under `<out>/landweber/<id>.ctr`.
fn landweber_output(
    manifest: &DatasetManifest,
    sample: &SampleEntry,
    settings: &PairSettings,
    out: &Path,
) -> Result<ContrastGrid> {
    let cache = out.join("landweber").join(format!("{}.ctr", sample.id));
    if cache.exists() {
        let m = read_contrast(&cache)?;
        if m.n() == settings.n1 {
            return Ok(m);
        }
    }
    let params = combined_params(manifest, sample, settings)?;
    let (m, _) = multi_frequency_landweber(&params, None)?;
    write_contrast(&cache, &m)?;
    Ok(m)
}

fn stage_input(
    manifest: &DatasetManifest,
    sample: &SampleEntry,
    stage: TrainingStage,
    settings: &PairSettings,
    projector: Option<&dyn Projector>,
    out: &Path,
    label: &ContrastGrid,
) -> Result<ContrastGrid> {
    let projector = || {
        projector.ok_or_else(|| Error::MissingWeights(format!("stage {stage} needs projector weights")))
    };
    match stage {
        TrainingStage::S3 => Ok(label.clone()),
        TrainingStage::S1 => Ok(normalize(&landweber_output(manifest, sample, settings, out)?)),
        TrainingStage::S2 => {
            let p = projector()?;
            let m = landweber_output(manifest, sample, settings, out)?;
            p.project(&normalize(&m))
        }
        TrainingStage::S4 => {
            let p = projector()?;
            let m = landweber_output(manifest, sample, settings, out)?;
            let params = combined_params(manifest, sample, settings)?;
            let cfg = params.irgnm_config()?;
            let start = scaled_projection(p, &m)?;
            let (r, _) = irgnm_with(&kernel_for(&cfg), &params.irgnm_params(start), &params.irgnm_data, &cfg, "irgnm")?;
            Ok(normalize(&r))
        }
    }
}

/// Writes `<out>/<stage>/<id>-input.ctr` and `<id>-label.ctr` for every sample
/// plus an index `<out>/<stage>/pairs.txt`.
///
/// Labels are always the normalized ground truth at `N1`. S2 and S4 need a
/// projector and fail with [`Error::MissingWeights`] without one.
pub fn emit_training_pairs(
    manifest: &DatasetManifest,
    stage: TrainingStage,
    settings: &PairSettings,
    projector: Option<&dyn Projector>,
    out: &Path,
) -> Result<Vec<TrainingPair>> {
    if stage.needs_projector() && projector.is_none() {
        return Err(Error::MissingWeights(format!("stage {stage} needs projector weights")));
    }
    let dir = out.join(stage.name());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut pairs = Vec::with_capacity(manifest.samples.len());
    let mut index = String::new();
    for sample in &manifest.samples {
        let run = || -> Result<TrainingPair> {
            let label = label(manifest, sample, settings.n1)?;
            let input = stage_input(manifest, sample, stage, settings, projector, out, &label)?;
            let pair = TrainingPair {
                id: sample.id.clone(),
                input: PathBuf::from(stage.name()).join(format!("{}-input.ctr", sample.id)),
                label: PathBuf::from(stage.name()).join(format!("{}-label.ctr", sample.id)),
            };
            write_contrast(&out.join(&pair.input), &input)?;
            write_contrast(&out.join(&pair.label), &label)?;
            Ok(pair)
        };
        let pair = run().map_err(|e| e.for_sample(&sample.id))?;
        index.push_str(&format!("{} {} {}\n", pair.id, pair.input.display(), pair.label.display()));
        pairs.push(pair);
    }
    let index_path = dir.join("pairs.txt");
    std::fs::write(&index_path, index).map_err(|e| Error::io(format!("writing {}", index_path.display()), e))?;
    Ok(pairs)
}
