//! Pipeline settings read from `--config` (JSON). Every field is optional;
//! command-line flags take precedence over file values.

use std::fs;
use std::path::{Path, PathBuf};

use latentshift::directions::LogisticConfig;
use latentshift::editing::LayerMask;
use latentshift::embedding::{AdamParams, EmbedConfig, InitStrategy, LossWeights};
use latentshift::geometry::{AlignConfig, PadMode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    #[default]
    Linear,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    #[default]
    Random,
    Mean,
    Encoder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub iterations: usize,
    pub init: InitKind,
    pub mean_samples: usize,
    pub learning_rate: f64,
    pub lambda_perceptual: f64,
    pub lambda_mse: f64,
    pub perceptual_size: Option<usize>,
    pub mse_size: Option<usize>,
    /// Patch grid of the perceptual feature extractor.
    pub grid: usize,
}

impl Default for EmbedSection {
    fn default() -> Self {
        Self {
            iterations: 1000,
            init: InitKind::Random,
            mean_samples: 10_000,
            learning_rate: 0.01,
            lambda_perceptual: 1.0,
            lambda_mse: 1.0,
            perceptual_size: None,
            mse_size: None,
            grid: 8,
        }
    }
}

impl EmbedSection {
    pub fn to_config(&self, out_size: usize, seed: u64) -> Result<EmbedConfig<f64>> {
        let init = match self.init {
            InitKind::Random => InitStrategy::Random { seed },
            InitKind::Mean => InitStrategy::MeanLatent {
                samples: self.mean_samples,
                seed,
            },
            InitKind::Encoder => InitStrategy::Encoder,
        };
        let mut cfg = EmbedConfig::for_size(out_size, init);
        cfg.iterations = self.iterations;
        cfg.weights = LossWeights {
            perceptual: self.lambda_perceptual,
            mse: self.lambda_mse,
        };
        cfg.adam = AdamParams {
            learning_rate: self.learning_rate,
            ..AdamParams::default()
        };
        if let Some(s) = self.perceptual_size {
            cfg.perceptual_size = s;
        }
        if let Some(s) = self.mse_size {
            cfg.mse_size = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub train_fraction: f64,
}

impl Default for LogisticSection {
    fn default() -> Self {
        let d = LogisticConfig::default();
        Self {
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            l2: d.l2,
            train_fraction: d.train_fraction,
        }
    }
}

impl LogisticSection {
    pub fn to_config(&self, seed: u64) -> Result<LogisticConfig> {
        let cfg = LogisticConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            l2: self.l2,
            seed,
            train_fraction: self.train_fraction,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PadKind {
    #[default]
    Reflect,
    Replicate,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignSection {
    pub out_size: usize,
    pub pad: PadKind,
    pub pad_value: f64,
    pub eye_distance: f64,
    pub anchor: [f64; 2],
}

impl Default for AlignSection {
    fn default() -> Self {
        Self {
            out_size: 1024,
            pad: PadKind::Reflect,
            pad_value: 0.0,
            eye_distance: 0.28,
            anchor: [0.5, 0.42],
        }
    }
}

impl AlignSection {
    pub fn to_config(&self) -> Result<AlignConfig<f64>> {
        let mut cfg = AlignConfig::with_size(self.out_size);
        cfg.pad_mode = match self.pad {
            PadKind::Reflect => PadMode::Reflect,
            PadKind::Replicate => PadMode::Replicate,
            PadKind::Constant => PadMode::Constant(self.pad_value),
        };
        cfg.eye_distance = self.eye_distance;
        cfg.anchor = (self.anchor[0], self.anchor[1]);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// GEN1 file; when absent a synthetic generator is built from the seed.
    pub generator: Option<PathBuf>,
    pub generator_kind: GeneratorKind,
    pub hidden: usize,
    pub embed: EmbedSection,
    pub logistic: LogisticSection,
    pub align: AlignSection,
    /// Latent rows an edit touches; the default mask when absent.
    pub mask: Option<Vec<usize>>,
    pub alphas: Vec<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            generator: None,
            generator_kind: GeneratorKind::Linear,
            hidden: 32,
            embed: EmbedSection::default(),
            logistic: LogisticSection::default(),
            align: AlignSection::default(),
            mask: None,
            alphas: vec![-5.0, -3.0, 0.0, 3.0, 5.0],
        }
    }
}

impl PipelineConfig {
    /// Reads a config file; a relative `generator` path is taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|source| CliError::Json {
                path: path.to_path_buf(),
                source,
            })?;
        if let Some(g) = &cfg.generator {
            cfg.generator = Some(resolve(path, g));
        }
        Ok(cfg)
    }

    pub fn mask_for(&self, layers: usize) -> Result<LayerMask> {
        match &self.mask {
            Some(rows) => Ok(LayerMask::new(layers, rows.iter().copied())?),
            None => Ok(LayerMask::default_for(layers)),
        }
    }
}

/// `p` relative to the directory holding `base`, unless already absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match base.parent() {
        Some(dir) => dir.join(p),
        None => p.to_path_buf(),
    }
}
