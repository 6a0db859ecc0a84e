use crate::error::{shape_err, Result};
use crate::image::ImageBuf;
use crate::latent::LatentCode;
use crate::rng::{normals, rng_for, stream};
use crate::scalar::{dot, sigmoid, Scalar};

use super::{f32_rounded, matvec, matvec_t_acc, Generator, SyntheticWorld};

/// `G(w) = sigmoid(A·vec(w) + c)`, reshaped to `n × n × C`.
///
/// `A` is a seeded Gaussian matrix whose rows are orthogonalized against the
/// planted direction `d`, then given a component `gain·d` on central pixels,
/// so `A·d` is `gain` at the center and zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGenerator<T> {
    world: SyntheticWorld<T>,
    weights: Vec<T>,
    bias: Vec<T>,
}

impl<T: Scalar> LinearGenerator<T> {
    pub const BIAS_SCALE: f64 = 0.5;

    pub fn new(world: SyntheticWorld<T>) -> Self {
        let pixels = world.image_len();
        let k = world.layers * world.dims;
        let d: Vec<f64> = world
            .planted_direction()
            .as_slice()
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect();
        let gain = world.gain.to_f64_lossy();
        let mut rng = rng_for(world.seed, stream::LINEAR);
        let scale = 1.0 / (k as f64).sqrt();
        let mut weights = Vec::with_capacity(pixels * k);
        for p in 0..pixels {
            let mut row: Vec<f64> = normals(&mut rng, k)
                .into_iter()
                .map(|v| v * scale)
                .collect();
            let along: f64 = row.iter().zip(&d).map(|(a, b)| a * b).sum();
            let target = if world.is_central(p) { gain } else { 0.0 };
            for (r, dj) in row.iter_mut().zip(&d) {
                *r += (target - along) * dj;
            }
            weights.extend(row.into_iter().map(f32_rounded::<T>));
        }
        let bias = normals(&mut rng, pixels)
            .into_iter()
            .map(|v| f32_rounded(v * Self::BIAS_SCALE))
            .collect();
        Self {
            world,
            weights,
            bias,
        }
    }

    /// Rebuild from stored parameters (`weights` is `pixels × latent_len`).
    pub fn from_parts(world: SyntheticWorld<T>, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        let pixels = world.image_len();
        let k = world.layers * world.dims;
        if weights.len() != pixels * k {
            return Err(shape_err(pixels * k, weights.len()));
        }
        if bias.len() != pixels {
            return Err(shape_err(pixels, bias.len()));
        }
        Ok(Self {
            world,
            weights,
            bias,
        })
    }

    pub fn world(&self) -> &SyntheticWorld<T> {
        &self.world
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    fn latent_len(&self) -> usize {
        self.world.layers * self.world.dims
    }

    /// Pre-activations `A·vec(w) + c`.
    pub fn logits(&self, w: &LatentCode<T>) -> Result<Vec<T>> {
        self.check_latent(w)?;
        let pixels = self.world.image_len();
        let mut z = vec![T::zero(); pixels];
        matvec(
            &self.weights,
            pixels,
            self.latent_len(),
            w.as_slice(),
            &mut z,
        );
        for (zi, ci) in z.iter_mut().zip(&self.bias) {
            *zi += *ci;
        }
        Ok(z)
    }

    /// Row `p` of `A`.
    pub fn row(&self, p: usize) -> &[T] {
        let k = self.latent_len();
        &self.weights[p * k..(p + 1) * k]
    }

    /// `A·v` for an arbitrary latent-shaped vector.
    pub fn apply_linear(&self, v: &LatentCode<T>) -> Result<Vec<T>> {
        self.check_latent(v)?;
        Ok((0..self.world.image_len())
            .map(|p| dot(self.row(p), v.as_slice()))
            .collect())
    }
}

impl<T: Scalar> Generator<T> for LinearGenerator<T> {
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
        let z = self.logits(w)?;
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
        let z = self.logits(w)?;
        let g: Vec<T> = z
            .iter()
            .zip(upstream)
            .map(|(&zi, &u)| {
                let s = sigmoid(zi);
                u * s * (T::one() - s)
            })
            .collect();
        let k = self.latent_len();
        let mut out = vec![T::zero(); k];
        matvec_t_acc(&self.weights, g.len(), k, &g, &mut out);
        LatentCode::new(self.world.layers, self.world.dims, out)
    }
}
