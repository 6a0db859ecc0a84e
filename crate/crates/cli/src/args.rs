use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{GeneratorKind, InitKind, PadKind};

#[derive(Debug, Parser)]
#[command(
    name = "latentshift",
    version,
    about = "Align, invert, and edit images through a latent-space generator"
)]
pub struct Cli {
    /// Global seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON pipeline config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for per-entry work.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align faces listed in a manifest (boxes + landmarks) to a canonical crop.
    Align(AlignArgs),
    /// Invert images into latent codes.
    Embed(EmbedArgs),
    /// Fit a logistic classifier on labeled latents and save its unit normal.
    ExtractDirection(ExtractArgs),
    /// Cosine-similarity matrix of directions, optionally orthogonalizing the first.
    Correlate(CorrelateArgs),
    /// Apply an α sweep along a direction and render the results.
    Edit(EditArgs),
    /// Reconstruction and identity metrics over image pairs.
    Evaluate(EvaluateArgs),
    /// Self-contained synthetic run of the whole pipeline with pass/fail checks.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct GeneratorArgs {
    /// GEN1 generator file.
    #[arg(long)]
    pub generator: Option<PathBuf>,
    /// Synthetic generator family, used when no file is given.
    #[arg(long, value_enum)]
    pub kind: Option<GeneratorKind>,
    /// Seed of the synthetic world; defaults to --seed.
    #[arg(long)]
    pub world_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, value_enum)]
    pub pad: Option<PadKind>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Image files (.ppm/.pgm or raw IMF1).
    pub images: Vec<PathBuf>,
    /// Manifest listing the images instead.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Iterations E.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Manifest of LAT1 files with 0/1 labels.
    pub manifest: PathBuf,
    #[arg(long, default_value = "attribute")]
    pub name: String,
    /// Direction file to write; defaults to <out>/<name>.dir.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also train on shuffled labels and report the accuracy.
    #[arg(long)]
    pub control: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// DIR1 files (at least two).
    pub directions: Vec<PathBuf>,
    /// Remove from the first direction its components along the others and
    /// write the result here.
    #[arg(long)]
    pub orthogonalize: Option<PathBuf>,
    /// Repeat subtraction passes until orthogonal to every direction.
    #[arg(long)]
    pub iterate: bool,
}

#[derive(Debug, Args)]
pub struct EditArgs {
    #[arg(long)]
    pub latent: PathBuf,
    #[arg(long)]
    pub direction: PathBuf,
    /// Comma-separated α values, e.g. -5,-3,0,3,5.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
    /// Comma-separated latent rows to edit; defaults to the first ceil(8L/18).
    #[arg(long, value_delimiter = ',', conflicts_with = "all_layers")]
    pub layers: Option<Vec<usize>>,
    #[arg(long)]
    pub all_layers: bool,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Rendered image format.
    #[arg(long, value_enum, default_value_t = ImageFormat::Raw)]
    pub format: ImageFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ImageFormat {
    /// IMF1 planar f32.
    Raw,
    /// 8-bit PPM/PGM.
    Pnm,
}

impl ImageFormat {
    pub fn extension(self, channels: usize) -> &'static str {
        match (self, channels) {
            (ImageFormat::Raw, _) => "imf",
            (ImageFormat::Pnm, 1) => "pgm",
            (ImageFormat::Pnm, _) => "ppm",
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Manifest whose entries carry `path` (reference) and `candidate`.
    pub manifest: PathBuf,
    /// Patch grid of the perceptual / Fréchet features.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    /// Identity embedding width; 0 disables the identity column.
    #[arg(long, default_value_t = 16)]
    pub identity_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub identity_grid: usize,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Number of labeled latents per attribute.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}
