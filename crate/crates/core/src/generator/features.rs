use crate::error::{shape_err, Error, Result};
use crate::image::ImageBuf;
use crate::rng::{normals, rng_for, stream};
use crate::scalar::Scalar;

use super::FeatureExtractor;

/// Per-cell, per-channel means over a `grid × grid` partition of a square
/// image. Output index is `(cell_y·grid + cell_x)·C + channel`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchFeatures {
    pub grid: usize,
}

impl PatchFeatures {
    pub fn new(grid: usize) -> Self {
        Self { grid }
    }

    pub fn len_for(&self, channels: usize) -> usize {
        self.grid * self.grid * channels
    }

    fn cell<T: Scalar>(&self, img: &ImageBuf<T>) -> Result<usize> {
        let n = img.square_size()?;
        if self.grid == 0 || n % self.grid != 0 {
            return Err(Error::BadGrid {
                grid: self.grid,
                size: n,
            });
        }
        Ok(n / self.grid)
    }
}

impl<T: Scalar> FeatureExtractor<T> for PatchFeatures {
    fn extract(&self, img: &ImageBuf<T>) -> Result<Vec<T>> {
        let cell = self.cell(img)?;
        let (n, _, c) = img.dims();
        let g = self.grid;
        let mut out = vec![T::zero(); g * g * c];
        for y in 0..n {
            for x in 0..n {
                let base = ((y / cell) * g + x / cell) * c;
                for ch in 0..c {
                    out[base + ch] += img.get(y, x, ch);
                }
            }
        }
        if cell > 1 {
            let inv = T::one() / T::from_usize_lossy(cell * cell);
            for v in out.iter_mut() {
                *v *= inv;
            }
        }
        Ok(out)
    }

    fn vjp(&self, img: &ImageBuf<T>, upstream: &[T]) -> Result<Vec<T>> {
        let cell = self.cell(img)?;
        let (n, _, c) = img.dims();
        let g = self.grid;
        if upstream.len() != g * g * c {
            return Err(shape_err(g * g * c, upstream.len()));
        }
        let inv = T::one() / T::from_usize_lossy(cell * cell);
        let mut out = Vec::with_capacity(n * n * c);
        for y in 0..n {
            for x in 0..n {
                let base = ((y / cell) * g + x / cell) * c;
                for ch in 0..c {
                    out.push(upstream[base + ch] * inv);
                }
            }
        }
        Ok(out)
    }
}

/// Seeded Gaussian projection of centered patch features; a stand-in identity
/// embedder with `dim` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionEmbedder<T> {
    patches: PatchFeatures,
    channels: usize,
    dim: usize,
    matrix: Vec<T>,
}

impl<T: Scalar> ProjectionEmbedder<T> {
    pub fn new(seed: u64, grid: usize, channels: usize, dim: usize) -> Result<Self> {
        if dim == 0 || grid == 0 {
            return Err(Error::InvalidConfig(
                "embedder grid and dim must be positive".into(),
            ));
        }
        let patches = PatchFeatures::new(grid);
        let inputs = patches.len_for(channels);
        let scale = 1.0 / (inputs as f64).sqrt();
        let mut rng = rng_for(seed, stream::PROJECTION);
        let matrix = normals(&mut rng, dim * inputs)
            .into_iter()
            .map(|v| T::lit(v * scale))
            .collect();
        Ok(Self {
            patches,
            channels,
            dim,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_channels(&self, img: &ImageBuf<T>) -> Result<()> {
        if img.channels() != self.channels {
            return Err(shape_err(
                format!("{} channels", self.channels),
                img.channels(),
            ));
        }
        Ok(())
    }
}

impl<T: Scalar> FeatureExtractor<T> for ProjectionEmbedder<T> {
    fn extract(&self, img: &ImageBuf<T>) -> Result<Vec<T>> {
        self.check_channels(img)?;
        let half = T::lit(0.5);
        let feats: Vec<T> = self
            .patches
            .extract(img)?
            .into_iter()
            .map(|v| v - half)
            .collect();
        let mut out = vec![T::zero(); self.dim];
        super::matvec(&self.matrix, self.dim, feats.len(), &feats, &mut out);
        Ok(out)
    }

    fn vjp(&self, img: &ImageBuf<T>, upstream: &[T]) -> Result<Vec<T>> {
        self.check_channels(img)?;
        if upstream.len() != self.dim {
            return Err(shape_err(self.dim, upstream.len()));
        }
        let inputs = self.patches.len_for(self.channels);
        let mut g = vec![T::zero(); inputs];
        super::matvec_t_acc(&self.matrix, self.dim, inputs, upstream, &mut g);
        self.patches.vjp(img, &g)
    }
}
