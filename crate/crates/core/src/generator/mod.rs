//! Differentiable generator and feature-extractor contracts, plus seeded
//! synthetic reference implementations with analytic vector-Jacobian products.

mod encoder;
mod features;
mod linear;
mod mlp;
mod world;

pub use encoder::RidgeEncoder;
pub use features::{PatchFeatures, ProjectionEmbedder};
pub use linear::LinearGenerator;
pub use mlp::MlpGenerator;
pub use world::{central_mean, central_mean_grad, SyntheticWorld};

use crate::error::{shape_err, Result};
use crate::image::ImageBuf;
use crate::latent::LatentCode;
use crate::scalar::Scalar;

/// A deterministic differentiable map from latent codes to square images.
pub trait Generator<T: Scalar>: Send + Sync {
    fn latent_shape(&self) -> (usize, usize);

    fn out_size(&self) -> usize;

    fn channels(&self) -> usize;

    fn generate(&self, w: &LatentCode<T>) -> Result<ImageBuf<T>>;

    /// Gradient of `<upstream, generate(w)>` with respect to `w`. `upstream`
    /// has the generated image's `H·W·C` layout.
    fn vjp(&self, w: &LatentCode<T>, upstream: &[T]) -> Result<LatentCode<T>>;

    fn image_len(&self) -> usize {
        self.out_size() * self.out_size() * self.channels()
    }

    fn check_latent(&self, w: &LatentCode<T>) -> Result<()> {
        let (l, d) = self.latent_shape();
        if w.shape() != (l, d) {
            return Err(shape_err(
                format!("{l}x{d}"),
                format!("{}x{}", w.layers(), w.dims()),
            ));
        }
        Ok(())
    }
}

/// Maps an image to a fixed-length feature vector.
pub trait FeatureExtractor<T: Scalar>: Send + Sync {
    fn extract(&self, img: &ImageBuf<T>) -> Result<Vec<T>>;

    /// Gradient of `<upstream, extract(img)>` with respect to the image, in
    /// `H·W·C` layout.
    fn vjp(&self, img: &ImageBuf<T>, upstream: &[T]) -> Result<Vec<T>>;
}

/// Produces an initial latent code from an image.
pub trait Encoder<T: Scalar>: Send + Sync {
    fn encode(&self, target: &ImageBuf<T>) -> Result<LatentCode<T>>;
}

/// The two reference generators behind one type, as stored in generator files.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceGenerator<T> {
    Linear(LinearGenerator<T>),
    Mlp(MlpGenerator<T>),
}

impl<T: Scalar> ReferenceGenerator<T> {
    pub fn world(&self) -> &SyntheticWorld<T> {
        match self {
            Self::Linear(g) => g.world(),
            Self::Mlp(g) => g.world(),
        }
    }
}

impl<T: Scalar> Generator<T> for ReferenceGenerator<T> {
    fn latent_shape(&self) -> (usize, usize) {
        self.world().latent_shape()
    }

    fn out_size(&self) -> usize {
        self.world().out_size
    }

    fn channels(&self) -> usize {
        self.world().channels
    }

    fn generate(&self, w: &LatentCode<T>) -> Result<ImageBuf<T>> {
        match self {
            Self::Linear(g) => g.generate(w),
            Self::Mlp(g) => g.generate(w),
        }
    }

    fn vjp(&self, w: &LatentCode<T>, upstream: &[T]) -> Result<LatentCode<T>> {
        match self {
            Self::Linear(g) => g.vjp(w, upstream),
            Self::Mlp(g) => g.vjp(w, upstream),
        }
    }
}

/// Row-major `rows × cols` matrix-vector product.
pub(crate) fn matvec<T: Scalar>(m: &[T], rows: usize, cols: usize, x: &[T], out: &mut [T]) {
    debug_assert_eq!(m.len(), rows * cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        *o = crate::scalar::dot(&m[r * cols..(r + 1) * cols], x);
    }
}

/// `out += mᵀ y` for a row-major `rows × cols` matrix.
pub(crate) fn matvec_t_acc<T: Scalar>(m: &[T], rows: usize, cols: usize, y: &[T], out: &mut [T]) {
    debug_assert_eq!(out.len(), cols);
    for r in 0..rows {
        let k = y[r];
        if k == T::zero() {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(&m[r * cols..(r + 1) * cols]) {
            *o += k * a;
        }
    }
}

/// Values drawn in `f64`, rounded through `f32` so that parameters survive a
/// generator-file round trip unchanged.
pub(crate) fn f32_rounded<T: Scalar>(v: f64) -> T {
    T::lit(v as f32 as f64)
}
