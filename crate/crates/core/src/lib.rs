//! Invert-and-edit over differentiable generators.
//!
//! The pipeline aligns a face image, inverts it into a generator's layered
//! latent space by gradient descent, learns attribute directions from labeled
//! latents, disentangles them by projection subtraction, edits latents along a
//! direction on a subset of layers, and scores the results.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which the tests and the command-line tool use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod directions;
pub mod editing;
pub mod embedding;
pub mod error;
pub mod generator;
pub mod geometry;
pub mod image;
pub mod io;
pub mod latent;
pub mod metrics;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use image::ImageBuf;
pub use latent::LatentCode;
pub use scalar::Scalar;

pub type Latent = LatentCode<f64>;
pub type Latent32 = LatentCode<f32>;
pub type Image = ImageBuf<f64>;
pub type Image32 = ImageBuf<f32>;
pub type Direction = directions::AttributeDirection<f64>;
pub type Direction32 = directions::AttributeDirection<f32>;
pub type World = generator::SyntheticWorld<f64>;
pub type Linear = generator::LinearGenerator<f64>;
pub type Mlp = generator::MlpGenerator<f64>;
pub type AnyGenerator = generator::ReferenceGenerator<f64>;
pub type Embedding = embedding::EmbeddingResult<f64>;
pub type EmbedSettings = embedding::EmbedConfig<f64>;
pub type Report = metrics::MetricsReport<f64>;
