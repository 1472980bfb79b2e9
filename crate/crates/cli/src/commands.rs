use std::path::{Path, PathBuf};

use lpinv_core::dataset::{emit_training_pairs, generate_dataset, DatasetParams, DigitSource, PairSettings, TrainingStage};
use lpinv_core::forward::kernel_for;
use lpinv_core::inversion::{
    combined, irgnm_with, landweber_with, learned_combined, simplified_learned_combined, CombinedParams,
    IrgnmParams, LandweberParams, LearnedParams, Projector,
};
use lpinv_core::io::{read_contrast, read_far_field, write_contrast, write_far_field};
use lpinv_core::{add_noise, downscale, forward_map, relative_error, upscale, ContrastGrid, ResidualLog};
use lpinv_projector::{load_weights, ProjectorWeights};
use log::info;

use crate::config::{ReconstructSection, RunConfig};
use crate::failure::{Failure, EXIT_MISSING_FILE};
use crate::render::render_png;
use crate::{EvalArgs, GenDataArgs, Method, ReconstructArgs, RenderArgs, SimulateArgs};

type Result<T> = std::result::Result<T, Failure>;

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::from_io(dir, e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::from_io(path, e))
}

/// Brings `m` to side `n` by block replication or averaging.
fn resample(m: ContrastGrid, n: usize) -> Result<ContrastGrid> {
    let have = m.n();
    if have == n {
        Ok(m)
    } else if n % have == 0 {
        Ok(upscale(&m, n / have)?)
    } else if have % n == 0 {
        Ok(downscale(&m, have / n)?)
    } else {
        Err(Failure::config(format!("cannot resample a grid of side {have} to side {n}")))
    }
}

fn frequency_label(k: f64) -> String {
    format!("k{k}")
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let sim = cfg.simulate()?;
    let n = args.resolution.unwrap_or(sim.n);
    let delta = args.delta.unwrap_or(sim.delta);
    let seed = args.seed.unwrap_or(sim.seed);
    let m = read_contrast(&args.contrast)?;
    let m = resample(m, n)?;
    create_dir(&args.out)?;
    for (l, &k) in sim.frequencies.iter().enumerate() {
        let sc = cfg.scatter_config(k, n)?;
        info!("simulating k = {k} on n = {n}");
        let clean = forward_map(&kernel_for(&sc), &m, &sc)?;
        let noisy = add_noise(&clean, delta, seed.wrapping_add(l as u64))?;
        let path = args.out.join(format!("{}.ffd", frequency_label(k)));
        write_far_field(&path, &noisy)?;
        println!("{}", path.display());
    }
    Ok(())
}

struct Outputs {
    dir: PathBuf,
    snapshots: Option<PathBuf>,
}

fn initial_guess(cfg: &RunConfig, r: &ReconstructSection, n: usize) -> Result<ContrastGrid> {
    match &r.initial {
        Some(p) => resample(read_contrast(&cfg.resolve(p))?, n),
        None => Ok(ContrastGrid::zeros(cfg.scatter_config(1.0, n)?.grid())),
    }
}

fn landweber_files(cfg: &RunConfig, r: &ReconstructSection) -> Result<Vec<lpinv_core::FarField>> {
    if r.landweber_data.is_empty() {
        return Err(Failure::config("reconstruct.landweber_data is empty"));
    }
    r.landweber_data.iter().map(|p| Ok(read_far_field(&cfg.resolve(p))?)).collect()
}

fn irgnm_file(cfg: &RunConfig, r: &ReconstructSection) -> Result<lpinv_core::FarField> {
    let p = r.irgnm_data.as_ref().ok_or_else(|| Failure::config("reconstruct.irgnm_data is not set"))?;
    Ok(read_far_field(&cfg.resolve(p))?)
}

fn combined_params(cfg: &RunConfig, r: &ReconstructSection, n2: usize) -> Result<CombinedParams> {
    let landweber_data = landweber_files(cfg, r)?;
    let base = cfg.scatter_config(landweber_data[0].k(), r.n1)?;
    let mut p = CombinedParams::new(base, landweber_data, r.n_la, r.n1, irgnm_file(cfg, r)?, r.alphas(), n2);
    p.cg_tol = r.cg_tol;
    p.cg_maxiter = r.cg_maxiter;
    p.validate()?;
    Ok(p)
}

fn weights(cfg: &RunConfig, r: &ReconstructSection, flag: Option<&Path>) -> Result<ProjectorWeights> {
    let path = match (flag, &r.weights) {
        (Some(p), _) => p.to_owned(),
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => {
            return Err(Failure::new(EXIT_MISSING_FILE, "learned reconstruction needs --weights or reconstruct.weights"))
        }
    };
    Ok(load_weights(&path)?)
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let r = cfg.reconstruct()?;
    let out = Outputs {
        dir: args.out.clone().unwrap_or_else(|| cfg.resolve(&r.out)),
        snapshots: args.snapshots.clone().or_else(|| r.snapshots.as_ref().map(|p| cfg.resolve(p))),
    };
    create_dir(&out.dir)?;
    if let Some(s) = &out.snapshots {
        create_dir(s)?;
    }
    let snapshots = out.snapshots.as_deref();

    let (estimate, log): (ContrastGrid, ResidualLog) = match args.method {
        Method::Landweber => {
            let n = args.resolution.unwrap_or(r.n1);
            let data = landweber_files(&cfg, r)?;
            let mut m = initial_guess(&cfg, r, n)?;
            let mut log = ResidualLog::new();
            let single = data.len() == 1;
            for d in &data {
                let sc = cfg.scatter_config(d.k(), n)?;
                let stage = if single { "landweber".to_owned() } else { format!("landweber-{}", frequency_label(d.k())) };
                let (next, l) = landweber_with(&kernel_for(&sc), &LandweberParams::new(r.n_la, m), d, &sc, &stage)?;
                log.extend(l);
                m = next;
            }
            (m, log)
        }
        Method::Irgnm => {
            let n = args.resolution.unwrap_or(r.n2);
            let data = irgnm_file(&cfg, r)?;
            let sc = cfg.scatter_config(data.k(), n)?;
            let mut p = IrgnmParams::new(r.alphas(), initial_guess(&cfg, r, n)?);
            p.cg_tol = r.cg_tol;
            p.cg_maxiter = r.cg_maxiter;
            irgnm_with(&kernel_for(&sc), &p, &data, &sc, "irgnm")?
        }
        Method::Combined => {
            let p = combined_params(&cfg, r, args.resolution.unwrap_or(r.n2))?;
            let o = combined(&p, snapshots)?;
            (o.estimate, o.log)
        }
        Method::Learned | Method::SimplifiedLearned => {
            let params = LearnedParams {
                combined: combined_params(&cfg, r, args.resolution.unwrap_or(r.n2))?,
                projector: weights(&cfg, r, args.weights.as_deref())?,
                n_o: r.n_o,
            };
            let o = if args.method == Method::Learned {
                learned_combined(&params, snapshots)?
            } else {
                simplified_learned_combined(&params, snapshots)?
            };
            info!("{} projector applications, stopped early: {}", o.projector_applications, o.stopped_early);
            (o.estimate, o.log)
        }
    };
    let path = out.dir.join("estimate.ctr");
    write_contrast(&path, &estimate)?;
    log.write(&out.dir.join("residuals.txt"))?;
    for note in log.notes() {
        eprintln!("note: {note}");
    }
    println!("{}", path.display());
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let truth = read_contrast(&args.truth)?;
    let estimate = read_contrast(&args.estimate)?;
    let n = args.resolution.unwrap_or(truth.n().min(estimate.n()));
    let re = relative_error(&resample(truth, n)?, &resample(estimate, n)?)?;
    let line = format!("relative_error {re:.6e}\n");
    print!("{line}");
    if let Some(p) = &args.out {
        write_file(p, line)?;
    }
    Ok(())
}

pub fn render(args: &RenderArgs) -> Result<()> {
    if !(args.min < args.max) {
        return Err(Failure::config(format!("--min {} must be below --max {}", args.min, args.max)));
    }
    let m = read_contrast(&args.contrast)?;
    let bytes = render_png(&m, args.min, args.max, args.scale).map_err(Failure::config)?;
    write_file(&args.png, bytes)
}

pub fn gen_data(args: &GenDataArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let sim = cfg.simulate()?;
    let ds = cfg.dataset()?;
    let n_sim = args.resolution.unwrap_or(sim.n);
    let src = DigitSource::load(&cfg.resolve(&ds.images), ds.labels.as_ref().map(|p| cfg.resolve(p)).as_deref())?;
    let params = DatasetParams {
        base: cfg.scatter_config(sim.frequencies[0], n_sim)?,
        count: ds.count,
        amplitude: (ds.amplitude[0], ds.amplitude[1]),
        frequencies: sim.frequencies.clone(),
        delta: args.delta.unwrap_or(sim.delta),
        seed: args.seed.unwrap_or(sim.seed),
        n_truth: ds.n_truth,
    };
    let stages = ds.stages.iter().map(|s| s.parse()).collect::<lpinv_core::Result<Vec<TrainingStage>>>()?;
    if args.weights.is_none() && stages.iter().any(|s| s.needs_projector()) {
        return Err(lpinv_core::Error::MissingWeights("training sets s2 and s4 need --weights".into()).into());
    }
    let out = cfg.resolve(&ds.out);
    create_dir(&out)?;
    let manifest = generate_dataset(&src, &params, &out)?;
    println!("{}", out.join(lpinv_core::dataset::MANIFEST_FILE).display());

    if stages.is_empty() {
        return Ok(());
    }
    let r = cfg.reconstruct()?;
    let settings = PairSettings::new(r.n1, r.n_la, r.alphas());
    let loaded = match &args.weights {
        Some(p) => Some(load_weights(p)?),
        None => None,
    };
    for stage in stages {
        let projector = loaded.as_ref().map(|w| w as &dyn Projector);
        let pairs = emit_training_pairs(&manifest, stage, &settings, projector, &out)?;
        println!("{}: {} pairs", stage, pairs.len());
    }
    Ok(())
}
