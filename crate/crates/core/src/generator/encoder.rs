use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{shape_err, Error, Result};
use crate::image::ImageBuf;
use crate::latent::LatentCode;
use crate::scalar::Scalar;

use super::{Encoder, Generator, LinearGenerator};

/// Ridge least-squares pre-image for [`LinearGenerator`]: inverts the output
/// sigmoid, then solves `(AᵀA + λI)·w = Aᵀ(logit(I) − c)`.
///
/// Only meaningful for the linear reference generator.
#[derive(Debug, Clone)]
pub struct RidgeEncoder<T> {
    generator: LinearGenerator<T>,
    factor: Cholesky<f64, Dyn>,
}

impl<T: Scalar> RidgeEncoder<T> {
    pub const DEFAULT_LAMBDA: f64 = 1e-3;
    /// Target pixels are clamped to `[EPS, 1 − EPS]` before the logit.
    pub const EPS: f64 = 1e-4;

    pub fn new(generator: LinearGenerator<T>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidConfig("ridge lambda must be positive".into()));
        }
        let (l, d) = generator.latent_shape();
        let k = l * d;
        let rows = generator.image_len();
        let a = DMatrix::from_row_iterator(
            rows,
            k,
            generator.weights().iter().map(|v| v.to_f64_lossy()),
        );
        let mut gram = a.transpose() * &a;
        for i in 0..k {
            gram[(i, i)] += lambda;
        }
        let factor = Cholesky::new(gram)
            .ok_or_else(|| Error::InvalidConfig("ridge system is not positive definite".into()))?;
        Ok(Self { generator, factor })
    }
}

impl<T: Scalar> Encoder<T> for RidgeEncoder<T> {
    fn encode(&self, target: &ImageBuf<T>) -> Result<LatentCode<T>> {
        let g = &self.generator;
        let n = g.out_size();
        if target.dims() != (n, n, g.channels()) {
            return Err(shape_err(
                format!("({n}, {n}, {})", g.channels()),
                format!("{:?}", target.dims()),
            ));
        }
        let (l, d) = g.latent_shape();
        let k = l * d;
        let mut rhs = DVector::<f64>::zeros(k);
        for (p, (&px, &c)) in target.as_slice().iter().zip(g.bias()).enumerate() {
            let y = px.to_f64_lossy().clamp(Self::EPS, 1.0 - Self::EPS);
            let r = (y / (1.0 - y)).ln() - c.to_f64_lossy();
            for (acc, a) in rhs.iter_mut().zip(g.row(p)) {
                *acc += a.to_f64_lossy() * r;
            }
        }
        let w = self.factor.solve(&rhs);
        LatentCode::new(l, d, w.iter().map(|&v| T::lit(v)).collect())
    }
}
