//! Optimization-based inversion: weighted perceptual + pixel loss, analytic
//! gradients through the extractor and generator, bias-corrected Adam, and
//! best-loss tracking over a fixed iteration budget.

use crate::error::{shape_err, Error, Result};
use crate::generator::{Encoder, FeatureExtractor, Generator};
use crate::geometry::{apply_affine, AffineTransform, AlignConfig, PadMode};
use crate::image::{area_downsample, area_downsample_adjoint, ImageBuf};
use crate::latent::LatentCode;
use crate::rng::{rng_for, sample_latent, sample_latent_with};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights<T> {
    pub perceptual: T,
    pub mse: T,
}

impl<T: Scalar> Default for LossWeights<T> {
    fn default() -> Self {
        Self {
            perceptual: T::one(),
            mse: T::one(),
        }
    }
}

impl<T: Scalar> LossWeights<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v >= T::zero() && v.is_finite();
        if !ok(self.perceptual) || !ok(self.mse) {
            return Err(Error::InvalidConfig(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        if self.perceptual == T::zero() && self.mse == T::zero() {
            return Err(Error::InvalidConfig(
                "loss weights must not both be zero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> Default for AdamParams<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::lit(0.01),
            beta1: T::lit(0.9),
            beta2: T::lit(0.99),
            eps: T::lit(1e-8),
        }
    }
}

/// First/second moment estimates and step count for one latent code.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: LatentCode<T>,
    pub v: LatentCode<T>,
    pub t: u32,
    pub params: AdamParams<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(layers: usize, dims: usize, params: AdamParams<T>) -> Self {
        Self {
            m: LatentCode::zeros(layers, dims),
            v: LatentCode::zeros(layers, dims),
            t: 0,
            params,
        }
    }

    /// One bias-corrected Adam update of `w` in place.
    pub fn step(&mut self, w: &mut LatentCode<T>, grad: &LatentCode<T>) -> Result<()> {
        w.check_same_shape(grad)?;
        w.check_same_shape(&self.m)?;
        let AdamParams {
            learning_rate: eta,
            beta1: b1,
            beta2: b2,
            eps,
        } = self.params;
        self.t += 1;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let one = T::one();
        for (((wi, &g), mi), vi) in w
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(self.m.as_mut_slice())
            .zip(self.v.as_mut_slice())
        {
            *mi = b1 * *mi + (one - b1) * g;
            *vi = b2 * *vi + (one - b2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *wi -= eta * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step<T: Scalar>(
    state: &AdamState<T>,
    grad: &LatentCode<T>,
    w: &LatentCode<T>,
) -> Result<(LatentCode<T>, AdamState<T>)> {
    let mut next = state.clone();
    let mut w = w.clone();
    next.step(&mut w, grad)?;
    Ok((w, next))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy<T> {
    /// Pluggable encoder applied to the target image.
    Encoder,
    /// Mean of `samples` codes drawn from the seeded latent prior.
    MeanLatent {
        samples: usize,
        seed: u64,
    },
    Random {
        seed: u64,
    },
    Fixed(LatentCode<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig<T> {
    pub iterations: usize,
    pub init: InitStrategy<T>,
    pub weights: LossWeights<T>,
    /// Resolution at which the perceptual term is computed.
    pub perceptual_size: usize,
    /// Resolution at which the pixel term is computed.
    pub mse_size: usize,
    pub adam: AdamParams<T>,
}

impl<T: Scalar> EmbedConfig<T> {
    /// Defaults for a generator with `out_size` pixels per side: 1000
    /// iterations, unit weights, perceptual term at a quarter of the
    /// resolution (at least 1), pixel term at full resolution.
    pub fn for_size(out_size: usize, init: InitStrategy<T>) -> Self {
        Self {
            iterations: 1000,
            init,
            weights: LossWeights::default(),
            perceptual_size: (out_size / 4).max(1),
            mse_size: out_size,
            adam: AdamParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if let InitStrategy::MeanLatent { samples: 0, .. } = self.init {
            return Err(Error::InvalidConfig(
                "mean-latent init needs at least one sample".into(),
            ));
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult<T> {
    pub w_star: LatentCode<T>,
    pub best_loss: T,
    pub loss_trace: Vec<T>,
    pub iterations_run: usize,
}

pub fn init_latent<T: Scalar>(
    strategy: &InitStrategy<T>,
    gen: &dyn Generator<T>,
    encoder: Option<&dyn Encoder<T>>,
    target: Option<&ImageBuf<T>>,
) -> Result<LatentCode<T>> {
    let (l, d) = gen.latent_shape();
    match strategy {
        InitStrategy::Encoder => {
            let target = target.ok_or(Error::MissingTarget)?;
            let encoder = encoder.ok_or(Error::MissingEncoder)?;
            let prepared = resize(target, gen.out_size())?;
            let w = encoder.encode(&prepared)?;
            gen.check_latent(&w)?;
            Ok(w)
        }
        InitStrategy::MeanLatent { samples, seed } => {
            if *samples == 0 {
                return Err(Error::InvalidConfig(
                    "mean-latent init needs at least one sample".into(),
                ));
            }
            let mut rng = rng_for(*seed, 0);
            let mut acc = vec![T::zero(); l * d];
            for _ in 0..*samples {
                let w: LatentCode<T> = sample_latent_with(&mut rng, l, d);
                for (a, v) in acc.iter_mut().zip(w.as_slice()) {
                    *a += *v;
                }
            }
            let k = T::from_usize_lossy(*samples);
            LatentCode::new(l, d, acc.into_iter().map(|v| v / k).collect())
        }
        InitStrategy::Random { seed } => Ok(sample_latent(*seed, l, d)),
        InitStrategy::Fixed(w) => {
            gen.check_latent(w)?;
            Ok(w.clone())
        }
    }
}

/// `(1/N_F)·‖ext(a) − ext(b)‖²`.
pub fn perceptual_loss<T: Scalar>(
    ext: &dyn FeatureExtractor<T>,
    gen_img: &ImageBuf<T>,
    target: &ImageBuf<T>,
) -> Result<T> {
    gen_img.check_same_shape(target)?;
    let fa = ext.extract(gen_img)?;
    let fb = ext.extract(target)?;
    Ok(mean_sq_diff(&fa, &fb))
}

/// `(1/N)·‖a − b‖²` over all `H·W·C` values.
pub fn pixel_mse<T: Scalar>(gen_img: &ImageBuf<T>, target: &ImageBuf<T>) -> Result<T> {
    gen_img.check_same_shape(target)?;
    Ok(mean_sq_diff(gen_img.as_slice(), target.as_slice()))
}

fn mean_sq_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    let s: T = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    s / T::from_usize_lossy(a.len().max(1))
}

/// Resize a square image: identity, block averaging when `size` divides the
/// side length, bilinear otherwise.
pub fn resize<T: Scalar>(img: &ImageBuf<T>, size: usize) -> Result<ImageBuf<T>> {
    let n = img.square_size()?;
    if size == n {
        return Ok(img.clone());
    }
    if size == 0 {
        return Err(Error::BadResample { from: n, to: size });
    }
    let c = img.channels();
    if size < n && n % size == 0 {
        return ImageBuf::new(size, size, c, area_downsample(img.as_slice(), n, c, size)?);
    }
    let s = T::from_usize_lossy(size) / T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let off = half * s - half;
    let t = AffineTransform::new([[s, T::zero(), off], [T::zero(), s, off]])?;
    let cfg = AlignConfig {
        pad_mode: PadMode::Replicate,
        ..AlignConfig::default()
    };
    apply_affine(img, &t, size, size, &cfg)
}

/// The weighted objective with the target's resampled images and features
/// precomputed.
pub struct Objective<'a, T: Scalar> {
    ext: &'a dyn FeatureExtractor<T>,
    weights: LossWeights<T>,
    n: usize,
    channels: usize,
    perceptual_size: usize,
    mse_size: usize,
    target_features: Vec<T>,
    target_mse: Vec<T>,
}

impl<'a, T: Scalar> Objective<'a, T> {
    pub fn new(
        weights: LossWeights<T>,
        ext: &'a dyn FeatureExtractor<T>,
        target: &ImageBuf<T>,
        perceptual_size: usize,
        mse_size: usize,
    ) -> Result<Self> {
        weights.validate()?;
        let n = target.square_size()?;
        let c = target.channels();
        let target_small = ImageBuf::new(
            perceptual_size,
            perceptual_size,
            c,
            area_downsample(target.as_slice(), n, c, perceptual_size)?,
        )?;
        let target_features = ext.extract(&target_small)?;
        let target_mse = area_downsample(target.as_slice(), n, c, mse_size)?;
        Ok(Self {
            ext,
            weights,
            n,
            channels: c,
            perceptual_size,
            mse_size,
            target_features,
            target_mse,
        })
    }

    fn check(&self, img: &ImageBuf<T>) -> Result<()> {
        if img.dims() != (self.n, self.n, self.channels) {
            return Err(shape_err(
                format!("({}, {}, {})", self.n, self.n, self.channels),
                format!("{:?}", img.dims()),
            ));
        }
        Ok(())
    }

    pub fn value(&self, img: &ImageBuf<T>) -> Result<T> {
        self.evaluate(img, false).map(|(v, _)| v)
    }

    /// Loss and its gradient with respect to the image (`H·W·C` layout).
    pub fn value_and_grad(&self, img: &ImageBuf<T>) -> Result<(T, Vec<T>)> {
        self.evaluate(img, true)
            .map(|(v, g)| (v, g.expect("requested")))
    }

    fn evaluate(&self, img: &ImageBuf<T>, want_grad: bool) -> Result<(T, Option<Vec<T>>)> {
        self.check(img)?;
        let (n, c) = (self.n, self.channels);
        let mut total = T::zero();
        let mut grad = want_grad.then(|| vec![T::zero(); n * n * c]);
        let two = T::lit(2.0);

        if self.weights.perceptual > T::zero() {
            let small = ImageBuf::new(
                self.perceptual_size,
                self.perceptual_size,
                c,
                area_downsample(img.as_slice(), n, c, self.perceptual_size)?,
            )?;
            let feats = self.ext.extract(&small)?;
            if feats.len() != self.target_features.len() {
                return Err(shape_err(self.target_features.len(), feats.len()));
            }
            let loss = mean_sq_diff(&feats, &self.target_features);
            total += self.weights.perceptual * loss;
            if let Some(g) = grad.as_mut() {
                let k = two * self.weights.perceptual / T::from_usize_lossy(feats.len().max(1));
                let up: Vec<T> = feats
                    .iter()
                    .zip(&self.target_features)
                    .map(|(&a, &b)| k * (a - b))
                    .collect();
                let g_small = self.ext.vjp(&small, &up)?;
                let g_full = area_downsample_adjoint(&g_small, n, c, self.perceptual_size)?;
                for (gi, v) in g.iter_mut().zip(g_full) {
                    *gi += v;
                }
            }
        }

        if self.weights.mse > T::zero() {
            let small = area_downsample(img.as_slice(), n, c, self.mse_size)?;
            let loss = mean_sq_diff(&small, &self.target_mse);
            total += self.weights.mse * loss;
            if let Some(g) = grad.as_mut() {
                let k = two * self.weights.mse / T::from_usize_lossy(small.len());
                let up: Vec<T> = small
                    .iter()
                    .zip(&self.target_mse)
                    .map(|(&a, &b)| k * (a - b))
                    .collect();
                let g_full = area_downsample_adjoint(&up, n, c, self.mse_size)?;
                for (gi, v) in g.iter_mut().zip(g_full) {
                    *gi += v;
                }
            }
        }
        Ok((total, grad))
    }

    /// Loss of `gen(w)` and its gradient with respect to `w`.
    pub fn latent_value_and_grad(
        &self,
        gen: &dyn Generator<T>,
        w: &LatentCode<T>,
    ) -> Result<(T, LatentCode<T>)> {
        let img = gen.generate(w)?;
        let (loss, g_img) = self.value_and_grad(&img)?;
        Ok((loss, gen.vjp(w, &g_img)?))
    }
}

/// `λ_p·perceptual(resized) + λ_mse·pixel_mse(resized)`.
pub fn total_loss<T: Scalar>(
    weights: LossWeights<T>,
    ext: &dyn FeatureExtractor<T>,
    gen_img: &ImageBuf<T>,
    target: &ImageBuf<T>,
    perceptual_size: usize,
    mse_size: usize,
) -> Result<T> {
    gen_img.check_same_shape(target)?;
    Objective::new(weights, ext, target, perceptual_size, mse_size)?.value(gen_img)
}

/// Invert `target` into `gen`'s latent space.
///
/// Every iteration evaluates the loss at the current code, records it, keeps
/// the code if the loss is a new minimum, then takes one Adam step. The
/// returned `w_star` is therefore exactly the code whose recorded loss is
/// `best_loss`.
pub fn embed<T: Scalar>(
    target: &ImageBuf<T>,
    gen: &dyn Generator<T>,
    ext: &dyn FeatureExtractor<T>,
    encoder: Option<&dyn Encoder<T>>,
    cfg: &EmbedConfig<T>,
) -> Result<EmbeddingResult<T>> {
    cfg.validate()?;
    let target = resize(target, gen.out_size())?;
    if target.channels() != gen.channels() {
        return Err(shape_err(
            format!("{} channels", gen.channels()),
            target.channels(),
        ));
    }
    let objective = Objective::new(cfg.weights, ext, &target, cfg.perceptual_size, cfg.mse_size)?;
    let mut w = init_latent(&cfg.init, gen, encoder, Some(&target))?;
    let (l, d) = gen.latent_shape();
    let mut adam = AdamState::new(l, d, cfg.adam);
    let mut best = T::infinity();
    let mut w_star = w.clone();
    let mut trace = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let (loss, grad) = objective.latent_value_and_grad(gen, &w)?;
        if !loss.is_finite() || grad.as_slice().iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { iteration });
        }
        trace.push(loss);
        if loss < best {
            best = loss;
            w_star = w.clone();
        }
        adam.step(&mut w, &grad)?;
        if w.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { iteration });
        }
    }
    Ok(EmbeddingResult {
        w_star,
        best_loss: best,
        iterations_run: trace.len(),
        loss_trace: trace,
    })
}
