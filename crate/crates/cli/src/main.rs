//! `lpinv`: simulate far-field data, reconstruct contrasts, score and render
//! them, and build training datasets.

mod commands;
mod config;
mod failure;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lpinv", version, about = "Inverse medium scattering with learned projectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Landweber,
    Irgnm,
    Combined,
    Learned,
    SimplifiedLearned,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Contrast file to simulate.
    #[arg(long)]
    pub contrast: PathBuf,
    /// Output directory for the far fields.
    #[arg(long, default_value = "data")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Simulation grid side.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Working grid of the single-stage methods, or the IRGNM grid of the combined ones.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accepted for uniformity; reconstructions are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub truth: PathBuf,
    pub estimate: PathBuf,
    /// Also write the score to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Grid on which to compare; defaults to the coarser of the two.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub contrast: PathBuf,
    pub png: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub min: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub max: f64,
    /// Pixels per grid cell.
    #[arg(long, default_value_t = 4)]
    pub scale: u32,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Simulation grid side.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Projector weights for the s2 and s4 training sets.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate noisy far fields of a contrast at the configured frequencies.
    Simulate(SimulateArgs),
    /// Reconstruct a contrast from far-field data.
    Reconstruct(ReconstructArgs),
    /// Relative refractive-index error of an estimate.
    Eval(EvalArgs),
    /// Render the real part of a contrast as a PNG heatmap.
    Render(RenderArgs),
    /// Generate a far-field dataset from digit images and emit training pairs.
    GenData(GenDataArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Render(a) => commands::render(&a),
        Command::GenData(a) => commands::gen_data(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
