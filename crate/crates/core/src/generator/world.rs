use crate::editing::LayerMask;
use crate::error::{Error, Result};
use crate::image::ImageBuf;
use crate::latent::LatentCode;
use crate::rng::{normals, rng_for, stream};
use crate::scalar::Scalar;

use super::f32_rounded;

/// Shared description of a synthetic generator world: latent and image shapes
/// and one planted unit direction whose motion brightens the central region.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld<T> {
    pub seed: u64,
    pub layers: usize,
    pub dims: usize,
    pub out_size: usize,
    pub channels: usize,
    /// Response of each central pixel's pre-activation to unit motion along
    /// the planted direction.
    pub gain: T,
    planted_raw: LatentCode<T>,
    planted: LatentCode<T>,
}

impl<T: Scalar> SyntheticWorld<T> {
    pub const DEFAULT_GAIN: f64 = 1.5;

    /// Desk-scale defaults: 4×16 latents, 64×64 RGB images.
    pub fn desk(seed: u64) -> Result<Self> {
        Self::new(seed, 4, 16, 64, 3)
    }

    /// The planted direction is supported on the default edit layers and is
    /// rounded through `f32` before normalization.
    pub fn new(
        seed: u64,
        layers: usize,
        dims: usize,
        out_size: usize,
        channels: usize,
    ) -> Result<Self> {
        if layers == 0 || dims == 0 {
            return Err(Error::InvalidConfig("latent shape must be positive".into()));
        }
        let mask = LayerMask::default_for(layers);
        let mut rng = rng_for(seed, stream::PLANTED);
        let draws = normals(&mut rng, layers * dims);
        let mut values = vec![T::zero(); layers * dims];
        for l in mask.iter() {
            for j in 0..dims {
                values[l * dims + j] = f32_rounded(draws[l * dims + j]);
            }
        }
        let raw = LatentCode::new(layers, dims, values)?;
        Self::with_direction(seed, out_size, channels, raw)
    }

    /// A world with a caller-chosen planted direction. The direction is
    /// rounded through `f32`, then normalized, so a world is a pure function
    /// of `f32` data.
    pub fn with_direction(
        seed: u64,
        out_size: usize,
        channels: usize,
        direction: LatentCode<T>,
    ) -> Result<Self> {
        if out_size < 4 || !out_size.is_multiple_of(4) {
            return Err(Error::InvalidConfig(format!(
                "out_size must be a positive multiple of 4, got {out_size}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidConfig(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let raw = direction.map(|v| f32_rounded(v.to_f64_lossy()));
        let norm = raw.norm();
        if !(norm > T::zero()) {
            return Err(Error::ZeroVector);
        }
        let planted = raw.scaled(T::one() / norm);
        let (layers, dims) = planted.shape();
        Ok(Self {
            seed,
            layers,
            dims,
            out_size,
            channels,
            gain: T::lit(Self::DEFAULT_GAIN),
            planted_raw: raw,
            planted,
        })
    }

    /// Unnormalized `f32`-exact direction the planted unit vector derives from.
    pub fn planted_raw(&self) -> &LatentCode<T> {
        &self.planted_raw
    }

    pub fn latent_shape(&self) -> (usize, usize) {
        (self.layers, self.dims)
    }

    pub fn planted_direction(&self) -> &LatentCode<T> {
        &self.planted
    }

    pub fn image_len(&self) -> usize {
        self.out_size * self.out_size * self.channels
    }

    /// Whether the pixel at flat `H·W·C` index `p` lies in the central quarter.
    pub fn is_central(&self, p: usize) -> bool {
        let n = self.out_size;
        let pix = p / self.channels;
        let (y, x) = (pix / n, pix % n);
        let (lo, hi) = (n / 4, n - n / 4);
        (lo..hi).contains(&y) && (lo..hi).contains(&x)
    }

    pub fn statistic(&self, img: &ImageBuf<T>) -> T {
        central_mean(img)
    }
}

/// Mean intensity over the central `n/2 × n/2` region, all channels.
pub fn central_mean<T: Scalar>(img: &ImageBuf<T>) -> T {
    let (h, w, c) = img.dims();
    let (y0, y1) = (h / 4, h - h / 4);
    let (x0, x1) = (w / 4, w - w / 4);
    let mut sum = T::zero();
    for y in y0..y1 {
        for x in x0..x1 {
            for ch in 0..c {
                sum += img.get(y, x, ch);
            }
        }
    }
    sum / T::from_usize_lossy((y1 - y0) * (x1 - x0) * c)
}

/// Gradient of [`central_mean`] with respect to the image.
pub fn central_mean_grad<T: Scalar>(h: usize, w: usize, c: usize) -> Vec<T> {
    let (y0, y1) = (h / 4, h - h / 4);
    let (x0, x1) = (w / 4, w - w / 4);
    let k = T::one() / T::from_usize_lossy((y1 - y0) * (x1 - x0) * c);
    let mut g = vec![T::zero(); h * w * c];
    for y in y0..y1 {
        for x in x0..x1 {
            for ch in 0..c {
                g[(y * w + x) * c + ch] = k;
            }
        }
    }
    g
}
