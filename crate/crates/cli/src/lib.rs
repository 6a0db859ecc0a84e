//! Pipeline orchestration behind the `latentshift` binary.

pub mod args;
pub mod commands;
pub mod config;
pub mod demo;
pub mod error;
pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};

use latentshift::generator::{LinearGenerator, MlpGenerator, ReferenceGenerator};
use latentshift::World;

use args::{Cli, Command, GeneratorArgs};
use config::{GeneratorKind, PipelineConfig};
pub use error::{CliError, Result};

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub config: PipelineConfig,
}

impl Context {
    pub fn new(seed: u64, out: impl Into<PathBuf>, config: PipelineConfig) -> Self {
        Self {
            seed,
            out: out.into(),
            config,
        }
    }

    /// `<out>/<rel>`, creating its parent directory.
    pub fn output(&self, rel: impl AsRef<Path>) -> Result<PathBuf> {
        let p = self.out.join(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        Ok(p)
    }

    /// `p` relative to the output directory, for reports.
    pub fn relative(&self, p: &Path) -> String {
        p.strip_prefix(&self.out).unwrap_or(p).display().to_string()
    }

    pub fn generator(&self, args: &GeneratorArgs) -> Result<ReferenceGenerator<f64>> {
        if let Some(path) = args.generator.as_ref().or(self.config.generator.as_ref()) {
            return Ok(latentshift::io::load_generator(path)?);
        }
        let world = World::desk(args.world_seed.unwrap_or(self.seed))?;
        Ok(match args.kind.unwrap_or(self.config.generator_kind) {
            GeneratorKind::Linear => ReferenceGenerator::Linear(LinearGenerator::new(world)),
            GeneratorKind::Mlp => {
                ReferenceGenerator::Mlp(MlpGenerator::new(world, self.config.hidden)?)
            }
        })
    }
}

/// Per-entry tally of a batch command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub ok: usize,
    pub failed: usize,
}

impl Tally {
    pub fn record<T, E>(&mut self, r: &std::result::Result<T, E>) {
        match r {
            Ok(_) => self.ok += 1,
            Err(_) => self.failed += 1,
        }
    }

    /// Fails only when there was work and none of it succeeded.
    pub fn finish(self) -> Result<Self> {
        if self.ok == 0 && self.failed > 0 {
            return Err(CliError::AllFailed(self.failed));
        }
        Ok(self)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let ctx = Context::new(cli.seed, cli.out, config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs as usize)
        .build()?;
    pool.install(|| match &cli.command {
        Command::Align(a) => commands::align(&ctx, a).map(drop),
        Command::Embed(a) => commands::embed(&ctx, a).map(drop),
        Command::ExtractDirection(a) => commands::extract_direction(&ctx, a).map(drop),
        Command::Correlate(a) => commands::correlate(&ctx, a).map(drop),
        Command::Edit(a) => commands::edit(&ctx, a).map(drop),
        Command::Evaluate(a) => commands::evaluate(&ctx, a).map(drop),
        Command::Demo(a) => {
            let report = demo::run(&ctx, a)?;
            print!("{}", report.summary);
            match report.failures() {
                0 => Ok(()),
                n => Err(CliError::Checks(n)),
            }
        }
    })
}
