use crate::error::{shape_err, Error, Result};
use crate::image::ImageBuf;
use crate::latent::LatentCode;
use crate::rng::{normals, rng_for, stream};
use crate::scalar::{dot, sigmoid, Scalar};

use super::{f32_rounded, matvec, matvec_t_acc, Generator, SyntheticWorld};

/// Two-layer network `sigmoid(W₂·tanh(W₁·vec(w) + b₁) + b₂ + k·<d, w>)`.
///
/// `W₁` rows are orthogonal to the planted direction `d`, and the skip term
/// `k` is `gain` on central pixels and zero elsewhere, so motion along `d`
/// only brightens the center.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGenerator<T> {
    world: SyntheticWorld<T>,
    hidden: usize,
    w1: Vec<T>,
    b1: Vec<T>,
    w2: Vec<T>,
    b2: Vec<T>,
}

impl<T: Scalar> MlpGenerator<T> {
    pub const DEFAULT_HIDDEN: usize = 32;

    pub fn new(world: SyntheticWorld<T>, hidden: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidConfig("hidden width must be positive".into()));
        }
        let k = world.layers * world.dims;
        let pixels = world.image_len();
        let d: Vec<f64> = world
            .planted_direction()
            .as_slice()
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect();
        let mut rng = rng_for(world.seed, stream::MLP);
        let s1 = 1.0 / (k as f64).sqrt();
        let mut w1 = Vec::with_capacity(hidden * k);
        for _ in 0..hidden {
            let mut row: Vec<f64> = normals(&mut rng, k).into_iter().map(|v| v * s1).collect();
            let along: f64 = row.iter().zip(&d).map(|(a, b)| a * b).sum();
            for (r, dj) in row.iter_mut().zip(&d) {
                *r -= along * dj;
            }
            w1.extend(row.into_iter().map(f32_rounded::<T>));
        }
        let b1 = normals(&mut rng, hidden)
            .into_iter()
            .map(|v| f32_rounded(0.1 * v))
            .collect();
        let s2 = 1.5 / (hidden as f64).sqrt();
        let w2 = normals(&mut rng, pixels * hidden)
            .into_iter()
            .map(|v| f32_rounded(v * s2))
            .collect();
        let b2 = normals(&mut rng, pixels)
            .into_iter()
            .map(|v| f32_rounded(0.5 * v))
            .collect();
        Ok(Self {
            world,
            hidden,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn from_parts(
        world: SyntheticWorld<T>,
        hidden: usize,
        w1: Vec<T>,
        b1: Vec<T>,
        w2: Vec<T>,
        b2: Vec<T>,
    ) -> Result<Self> {
        let k = world.layers * world.dims;
        let pixels = world.image_len();
        for (got, want) in [
            (w1.len(), hidden * k),
            (b1.len(), hidden),
            (w2.len(), pixels * hidden),
            (b2.len(), pixels),
        ] {
            if got != want {
                return Err(shape_err(want, got));
            }
        }
        Ok(Self {
            world,
            hidden,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn world(&self) -> &SyntheticWorld<T> {
        &self.world
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// `(W₁, b₁, W₂, b₂)`.
    pub fn parts(&self) -> (&[T], &[T], &[T], &[T]) {
        (&self.w1, &self.b1, &self.w2, &self.b2)
    }

    fn forward(&self, w: &LatentCode<T>) -> Result<(Vec<T>, Vec<T>)> {
        self.check_latent(w)?;
        let k = self.world.layers * self.world.dims;
        let mut h = vec![T::zero(); self.hidden];
        matvec(&self.w1, self.hidden, k, w.as_slice(), &mut h);
        for (hi, bi) in h.iter_mut().zip(&self.b1) {
            *hi = (*hi + *bi).tanh();
        }
        let pixels = self.world.image_len();
        let mut z = vec![T::zero(); pixels];
        matvec(&self.w2, pixels, self.hidden, &h, &mut z);
        let along = dot(self.world.planted_direction().as_slice(), w.as_slice()) * self.world.gain;
        for (p, (zi, bi)) in z.iter_mut().zip(&self.b2).enumerate() {
            *zi += *bi;
            if self.world.is_central(p) {
                *zi += along;
            }
        }
        Ok((h, z))
    }
}

impl<T: Scalar> Generator<T> for MlpGenerator<T> {
    fn latent_shape(&self) -> (usize, usize) {
        self.world.latent_shape()
    }

    fn out_size(&self) -> usize {
        self.world.out_size
    }

    fn channels(&self) -> usize {
        self.world.channels
    }

    fn generate(&self, w: &LatentCode<T>) -> Result<ImageBuf<T>> {
        let (_, z) = self.forward(w)?;
        let n = self.world.out_size;
        ImageBuf::new(
            n,
            n,
            self.world.channels,
            z.into_iter().map(sigmoid).collect(),
        )
    }

    fn vjp(&self, w: &LatentCode<T>, upstream: &[T]) -> Result<LatentCode<T>> {
        if upstream.len() != self.image_len() {
            return Err(shape_err(self.image_len(), upstream.len()));
        }
        let (h, z) = self.forward(w)?;
        let gz: Vec<T> = z
            .iter()
            .zip(upstream)
            .map(|(&zi, &u)| {
                let s = sigmoid(zi);
                u * s * (T::one() - s)
            })
            .collect();
        let mut gh = vec![T::zero(); self.hidden];
        matvec_t_acc(&self.w2, gz.len(), self.hidden, &gz, &mut gh);
        for (g, hi) in gh.iter_mut().zip(&h) {
            *g *= T::one() - *hi * *hi;
        }
        let k = self.world.layers * self.world.dims;
        let mut out = vec![T::zero(); k];
        matvec_t_acc(&self.w1, self.hidden, k, &gh, &mut out);
        let skip: T = gz
            .iter()
            .enumerate()
            .filter(|(p, _)| self.world.is_central(*p))
            .map(|(_, &g)| g)
            .sum::<T>()
            * self.world.gain;
        for (o, &dj) in out
            .iter_mut()
            .zip(self.world.planted_direction().as_slice())
        {
            *o += skip * dj;
        }
        LatentCode::new(self.world.layers, self.world.dims, out)
    }
}
