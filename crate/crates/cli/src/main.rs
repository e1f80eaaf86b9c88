//! `colorstat`: build corpora, extract color co-occurrence features, train
//! detectors and evaluate them.
//!
//! Exit codes: 0 success, 2 some inputs failed and were skipped, 3 model
//! could not be loaded or trained, 64 bad usage, 74 I/O failure.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ConfigEcho;
use crate::exit::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "colorstat",
    version,
    about = "Detect network-generated images from color statistics"
)]
struct Cli {
    /// TOML settings file (extractor, classifier, split, generator, proxy).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel steps; defaults to one per core.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// On-disk format version.
    #[arg(long, global = true, value_enum, default_value_t = Format::V1)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    V1,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus of generated-like and camera-like images.
    Synth(SynthArgs),
    /// Center-crop and resize every image of a manifest.
    Preprocess(PreprocessArgs),
    /// Write the feature vectors of a manifest or of loose images.
    Extract(ExtractArgs),
    /// Report how well each color component separates the two classes.
    Analyze(AnalyzeArgs),
    /// Fit a detector to a feature file.
    Train(TrainArgs),
    /// Run a detection scenario over feature files.
    Evaluate(EvaluateArgs),
    /// Classify images with a trained model.
    Detect(DetectArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives real/, dng/ and manifest.tsv.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of camera-like proxy images.
    #[arg(long, default_value_t = 0)]
    pub real: usize,
    /// Number of generated-like images.
    #[arg(long, default_value_t = 0)]
    pub dng: usize,
    /// Seed of the generator; the proxy corpus uses seed + 1.
    #[arg(long)]
    pub seed: u64,
    /// Image side in pixels (a multiple of 8).
    #[arg(long)]
    pub side: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; receives the processed PNGs and manifest.tsv.
    #[arg(long)]
    pub out: PathBuf,
    /// Side of the centered square crop.
    #[arg(long)]
    pub crop: usize,
    /// Side after bilinear resizing.
    #[arg(long)]
    pub side: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Labeled manifest; relative paths resolve against its directory.
    #[arg(long, conflicts_with = "images")]
    pub manifest: Option<PathBuf>,
    /// Feature file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Loose images, recorded with unknown label.
    #[arg(required_unless_present = "manifest")]
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Seed of the split between mean-building and scored images.
    #[arg(long)]
    pub seed: u64,
    /// Share of each class used to build the class-mean histograms.
    #[arg(long, default_value_t = 0.5)]
    pub mean_fraction: f64,
    /// JSON report destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Random-subspace ensemble of Fisher discriminants (needs both classes).
    Ensemble,
    /// Gaussian-kernel one-class detector (uses camera images only).
    Oneclass,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    #[arg(long)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    SampleAware,
    ModelAware,
    ModelUnaware,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    /// Training feature file.
    #[arg(long)]
    pub train: PathBuf,
    /// Test feature file (model-aware, optional for model-unaware).
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Seed of the splits and of every model fit.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Detector name for the results row.
    #[arg(long, default_value = "colorstat")]
    pub detector: String,
    /// Testing-set name for the results row; defaults to the test file name.
    #[arg(long)]
    pub testing_set: Option<String>,
    /// JSON report destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let Format::V1 = cli.format;
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let config = ConfigEcho::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(a) => commands::synth(&a, &config),
        Command::Preprocess(a) => commands::preprocess(&a),
        Command::Extract(a) => commands::extract(&a, &config),
        Command::Analyze(a) => commands::analyze(&a, &config),
        Command::Train(a) => commands::train(&a, &config),
        Command::Evaluate(a) => commands::evaluate(&a, &config),
        Command::Detect(a) => commands::detect(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("colorstat: {f}");
            ExitCode::from(f.code)
        }
    }
}
