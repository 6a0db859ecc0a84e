//! Deterministic sampling.
//!
//! All randomness flows through `rand_pcg::Pcg64` (PCG XSL-RR 128/64) seeded
//! with `Pcg64::seed_from_u64`. Standard normals come from
//! `rand_distr::StandardNormal` (ziggurat) and are drawn in `f64` before any
//! conversion, so a seed yields the same stream for every scalar type.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;

use crate::latent::LatentCode;
use crate::scalar::Scalar;

pub use rand_pcg::Pcg64 as Rng;

/// Domain tags xor-ed into a user seed so independent parameter blocks never
/// share a stream.
pub(crate) mod stream {
    pub const PLANTED: u64 = 0x5eed_0001_d1ec_7104;
    pub const LINEAR: u64 = 0x5eed_0002_11ea_0a00;
    pub const MLP: u64 = 0x5eed_0003_0317_0000;
    pub const PROJECTION: u64 = 0x5eed_0004_9a0e_c700;
    pub const SPLIT: u64 = 0x5eed_0005_5b11_7000;
}

pub fn rng_for(seed: u64, tag: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed ^ tag)
}

pub fn normals(rng: &mut Pcg64, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// I.i.d. standard-normal `layers × dims` code; identical seeds give
/// bit-identical codes.
pub fn sample_latent<T: Scalar>(seed: u64, layers: usize, dims: usize) -> LatentCode<T> {
    let mut rng = Pcg64::seed_from_u64(seed);
    sample_latent_with(&mut rng, layers, dims)
}

pub fn sample_latent_with<T: Scalar>(rng: &mut Pcg64, layers: usize, dims: usize) -> LatentCode<T> {
    let values = normals(rng, layers * dims)
        .into_iter()
        .map(T::lit)
        .collect();
    LatentCode::new(layers, dims, values).expect("normal samples are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_code() {
        let a: LatentCode<f64> = sample_latent(11, 4, 16);
        let b: LatentCode<f64> = sample_latent(11, 4, 16);
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ_nearly_everywhere() {
        let a: LatentCode<f64> = sample_latent(1, 4, 16);
        let b: LatentCode<f64> = sample_latent(2, 4, 16);
        let same = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .filter(|(x, y)| x == y)
            .count();
        assert!(same * 100 <= a.len());
    }

    #[test]
    fn moments_match_standard_normal() {
        let mut rng = rng_for(3, 0);
        let draws = 10_000;
        let mut sum = [0.0f64; 8];
        let mut sq = [0.0f64; 8];
        for _ in 0..draws {
            let w: LatentCode<f64> = sample_latent_with(&mut rng, 2, 4);
            for (i, v) in w.as_slice().iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        for i in 0..8 {
            let mean = sum[i] / draws as f64;
            let var = sq[i] / draws as f64 - mean * mean;
            assert!(mean.abs() <= 0.05, "coordinate {i} mean {mean}");
            assert!((var - 1.0).abs() <= 0.1, "coordinate {i} variance {var}");
        }
    }

    #[test]
    fn f32_codes_are_rounded_f64_codes() {
        let a: LatentCode<f64> = sample_latent(5, 2, 3);
        let b: LatentCode<f32> = sample_latent(5, 2, 3);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert_eq!(*x as f32, *y);
        }
    }
}
