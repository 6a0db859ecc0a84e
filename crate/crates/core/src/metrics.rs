//! Image-quality and distribution metrics.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{shape_err, Error, Result};
use crate::generator::FeatureExtractor;
use crate::image::ImageBuf;
use crate::scalar::Scalar;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
/// Added to every fitted covariance diagonal.
pub const COVARIANCE_RIDGE: f64 = 1e-6;
/// Eigenvalues above this (but below zero) are treated as rounding noise.
pub const NEGATIVE_EIGEN_TOLERANCE: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport<T> {
    /// `+∞` for identical images.
    pub psnr_db: T,
    pub ssim: T,
    pub perceptual: T,
    pub frechet: Option<T>,
    pub identity: Option<T>,
}

/// `10·log10(1 / MSE)` for data range 1; `+∞` when the images are identical.
pub fn psnr<T: Scalar>(a: &ImageBuf<T>, b: &ImageBuf<T>) -> Result<T> {
    let mse = crate::embedding::pixel_mse(a, b)?;
    if mse == T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::lit(10.0) * (T::one() / mse).log10())
}

fn gaussian_window<T: Scalar>() -> Vec<T> {
    let half = (SSIM_WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - half;
            (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / s)).collect()
}

/// Separable "valid" filtering of one `h × w` plane.
fn filter_valid<T: Scalar>(plane: &[T], h: usize, w: usize, k: &[T]) -> Vec<T> {
    let n = k.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![T::zero(); h * ow];
    for y in 0..h {
        for x in 0..ow {
            let src = &plane[y * w + x..y * w + x + n];
            rows[y * ow + x] = src.iter().zip(k).map(|(&a, &b)| a * b).sum();
        }
    }
    let mut out = vec![T::zero(); oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| rows[(y + i) * ow + x] * k[i]).sum();
        }
    }
    out
}

/// Mean local SSIM (11×11 Gaussian window, σ = 1.5, K1 = 0.01, K2 = 0.03,
/// data range 1) per channel, averaged over channels.
pub fn ssim<T: Scalar>(a: &ImageBuf<T>, b: &ImageBuf<T>) -> Result<T> {
    a.check_same_shape(b)?;
    let (h, w, c) = a.dims();
    if h.min(w) < SSIM_WINDOW {
        return Err(Error::TooSmall {
            min: SSIM_WINDOW,
            got: h.min(w),
        });
    }
    let k = gaussian_window::<T>();
    let c1 = T::lit(SSIM_K1 * SSIM_K1);
    let c2 = T::lit(SSIM_K2 * SSIM_K2);
    let two = T::lit(2.0);
    let mut total = T::zero();
    for ch in 0..c {
        let plane = |img: &ImageBuf<T>| -> Vec<T> {
            img.as_slice().iter().skip(ch).step_by(c).copied().collect()
        };
        let x = plane(a);
        let y = plane(b);
        let xx: Vec<T> = x.iter().map(|&v| v * v).collect();
        let yy: Vec<T> = y.iter().map(|&v| v * v).collect();
        let xy: Vec<T> = x.iter().zip(&y).map(|(&u, &v)| u * v).collect();
        let mx = filter_valid(&x, h, w, &k);
        let my = filter_valid(&y, h, w, &k);
        let exx = filter_valid(&xx, h, w, &k);
        let eyy = filter_valid(&yy, h, w, &k);
        let exy = filter_valid(&xy, h, w, &k);
        let mut sum = T::zero();
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let sxx = exx[i] - ux * ux;
            let syy = eyy[i] - uy * uy;
            let sxy = exy[i] - ux * uy;
            let num = (two * ux * uy + c1) * (two * sxy + c2);
            let den = (ux * ux + uy * uy + c1) * (sxx + syy + c2);
            sum += num / den;
        }
        total += sum / T::from_usize_lossy(mx.len());
    }
    Ok(total / T::from_usize_lossy(c))
}

fn unit<T: Scalar>(v: &[T]) -> Result<Vec<T>> {
    let n = crate::scalar::norm2(v);
    if !(n > T::zero()) || !n.is_finite() {
        return Err(Error::ZeroEmbedding);
    }
    Ok(v.iter().map(|&x| x / n).collect())
}

/// Mean squared difference of unit-normalized feature vectors.
pub fn perceptual_distance<T: Scalar>(
    ext: &dyn FeatureExtractor<T>,
    a: &ImageBuf<T>,
    b: &ImageBuf<T>,
) -> Result<T> {
    a.check_same_shape(b)?;
    let fa = ext.extract(a)?;
    let fb = ext.extract(b)?;
    normalized_mean_sq_diff(&fa, &fb)
}

pub fn normalized_mean_sq_diff<T: Scalar>(fa: &[T], fb: &[T]) -> Result<T> {
    if fa.len() != fb.len() {
        return Err(Error::DimensionMismatch(fa.len(), fb.len()));
    }
    let (u, v) = (unit(fa)?, unit(fb)?);
    let s: T = u.iter().zip(&v).map(|(&x, &y)| (x - y) * (x - y)).sum();
    Ok(s / T::from_usize_lossy(u.len()))
}

/// `‖u − v‖²` for unit-normalized embeddings; lies in `[0, 4]`.
pub fn identity_distance<T: Scalar>(
    embedder: &dyn FeatureExtractor<T>,
    a: &ImageBuf<T>,
    b: &ImageBuf<T>,
) -> Result<T> {
    a.check_same_shape(b)?;
    let ea = embedder.extract(a)?;
    let eb = embedder.extract(b)?;
    embedding_distance(&ea, &eb)
}

pub fn embedding_distance<T: Scalar>(ea: &[T], eb: &[T]) -> Result<T> {
    if ea.len() != eb.len() {
        return Err(Error::DimensionMismatch(ea.len(), eb.len()));
    }
    let (u, v) = (unit(ea)?, unit(eb)?);
    let s: T = u.iter().zip(&v).map(|(&x, &y)| (x - y) * (x - y)).sum();
    Ok(s.max(T::zero()).min(T::lit(4.0)))
}

/// Mean and covariance (row-major `d × d`) of a feature population.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit<T> {
    mu: Vec<T>,
    sigma: Vec<T>,
}

impl<T: Scalar> GaussianFit<T> {
    pub fn new(mu: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::EmptyInput("gaussian mean"));
        }
        if sigma.len() != d * d {
            return Err(shape_err(d * d, sigma.len()));
        }
        if mu.iter().chain(&sigma).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian fit"));
        }
        let tol = T::lit(1e-10);
        for i in 0..d {
            for j in i + 1..d {
                if (sigma[i * d + j] - sigma[j * d + i]).abs() > tol {
                    return Err(Error::InvalidConfig("covariance is not symmetric".into()));
                }
            }
        }
        Ok(Self { mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mu
    }

    pub fn covariance(&self) -> &[T] {
        &self.sigma
    }

    fn sigma_f64(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_iterator(d, d, self.sigma.iter().map(|v| v.to_f64_lossy()))
    }
}

/// Sample mean and unbiased covariance plus `1e-6·I`.
pub fn fit_gaussian<T: Scalar>(feats: &[Vec<T>]) -> Result<GaussianFit<T>> {
    if feats.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: feats.len(),
        });
    }
    let d = feats[0].len();
    if let Some(bad) = feats.iter().find(|f| f.len() != d) {
        return Err(Error::DimensionMismatch(d, bad.len()));
    }
    let n = T::from_usize_lossy(feats.len());
    let mut mu = vec![T::zero(); d];
    for f in feats {
        for (m, &v) in mu.iter_mut().zip(f) {
            *m += v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= n);
    let mut sigma = vec![T::zero(); d * d];
    for f in feats {
        for i in 0..d {
            let di = f[i] - mu[i];
            for j in i..d {
                sigma[i * d + j] += di * (f[j] - mu[j]);
            }
        }
    }
    let denom = n - T::one();
    let ridge = T::lit(COVARIANCE_RIDGE);
    for i in 0..d {
        for j in i..d {
            let v = sigma[i * d + j] / denom;
            sigma[i * d + j] = v;
            sigma[j * d + i] = v;
        }
        sigma[i * d + i] += ridge;
    }
    GaussianFit::new(mu, sigma)
}

/// Eigenvalues clamped at zero, erroring below the rounding tolerance.
fn clamp_spectrum(values: impl Iterator<Item = f64>) -> Result<Vec<f64>> {
    values
        .map(|l| {
            if l < NEGATIVE_EIGEN_TOLERANCE || !l.is_finite() {
                Err(Error::NonPsdProduct(l))
            } else {
                Ok(l.max(0.0))
            }
        })
        .collect()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `‖μ₁ − μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^{1/2})`.
///
/// `Tr((Σ₁Σ₂)^{1/2})` is evaluated as `Tr((Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2})`, whose
/// argument is symmetric, via two symmetric eigendecompositions.
pub fn frechet_distance<T: Scalar>(g1: &GaussianFit<T>, g2: &GaussianFit<T>) -> Result<T> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch(g1.dim(), g2.dim()));
    }
    let mean_term: f64 = g1
        .mu
        .iter()
        .zip(&g2.mu)
        .map(|(a, b)| {
            let d = a.to_f64_lossy() - b.to_f64_lossy();
            d * d
        })
        .sum();
    let s1 = g1.sigma_f64();
    let s2 = g2.sigma_f64();

    let e1 = SymmetricEigen::new(symmetrize(&s1));
    let roots = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
        clamp_spectrum(e1.eigenvalues.iter().copied())?
            .into_iter()
            .map(f64::sqrt)
            .collect(),
    ));
    let sqrt1 = &e1.eigenvectors * roots * e1.eigenvectors.transpose();
    let inner = symmetrize(&(&sqrt1 * &s2 * &sqrt1));
    let e = SymmetricEigen::new(inner);
    let trace_sqrt: f64 = clamp_spectrum(e.eigenvalues.iter().copied())?
        .into_iter()
        .map(f64::sqrt)
        .sum();
    let d = mean_term + s1.trace() + s2.trace() - 2.0 * trace_sqrt;
    Ok(T::lit(d.max(0.0)))
}

/// Per-pair report; the set-level Fréchet field is left empty.
pub fn evaluate_pair<T: Scalar>(
    reference: &ImageBuf<T>,
    candidate: &ImageBuf<T>,
    perceptual: &dyn FeatureExtractor<T>,
    identity: Option<&dyn FeatureExtractor<T>>,
) -> Result<MetricsReport<T>> {
    Ok(MetricsReport {
        psnr_db: psnr(reference, candidate)?,
        ssim: ssim(reference, candidate)?,
        perceptual: perceptual_distance(perceptual, reference, candidate)?,
        frechet: None,
        identity: identity
            .map(|e| identity_distance(e, reference, candidate))
            .transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::PatchFeatures;

    #[test]
    fn psnr_values() {
        let a = ImageBuf::filled(4, 4, 1, 0.5f64).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = ImageBuf::filled(4, 4, 1, 0.6f64).unwrap();
        // MSE = 0.01
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_identity_and_anticorrelation() {
        let board = ImageBuf::from_fn(16, 16, 1, |y, x, _| ((x + y) % 2) as f64).unwrap();
        assert_eq!(ssim(&board, &board).unwrap(), 1.0);
        let neg = ImageBuf::from_fn(16, 16, 1, |y, x, _| 1.0 - ((x + y) % 2) as f64).unwrap();
        assert!(ssim(&board, &neg).unwrap() < 0.0);
        let small = ImageBuf::filled(8, 8, 1, 0.5f64).unwrap();
        assert_eq!(
            ssim(&small, &small),
            Err(Error::TooSmall { min: 11, got: 8 })
        );
    }

    #[test]
    fn perceptual_hand_case() {
        assert_eq!(
            normalized_mean_sq_diff(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(),
            1.0
        );
        let a = ImageBuf::filled(4, 4, 1, 0.25f64).unwrap();
        assert_eq!(
            perceptual_distance(&PatchFeatures::new(2), &a, &a).unwrap(),
            0.0
        );
        assert_eq!(
            normalized_mean_sq_diff(&[0.0f64, 0.0], &[0.0, 1.0]),
            Err(Error::ZeroEmbedding)
        );
    }

    #[test]
    fn gaussian_fit_cases() {
        let g = fit_gaussian(&[vec![0.3f64, -1.0], vec![0.3, -1.0], vec![0.3, -1.0]]).unwrap();
        assert_eq!(g.mean(), &[0.3, -1.0]);
        assert_eq!(g.covariance(), &[1e-6, 0.0, 0.0, 1e-6]);

        let g = fit_gaussian(&[vec![0.0f64, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(g.mean(), &[1.0, 0.0]);
        assert_eq!(g.covariance(), &[2.0 + 1e-6, 0.0, 0.0, 1e-6]);

        assert!(matches!(
            fit_gaussian(&[vec![1.0f64]]),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            fit_gaussian(&[vec![1.0f64], vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn frechet_closed_forms() {
        let g = |m: f64, v: f64| GaussianFit::new(vec![m], vec![v]).unwrap();
        assert!((frechet_distance(&g(0.0, 1.0), &g(1.0, 1.0)).unwrap() - 1.0).abs() <= 1e-8);
        assert!((frechet_distance(&g(0.0, 1.0), &g(0.0, 4.0)).unwrap() - 1.0).abs() <= 1e-8);
        assert!(frechet_distance(&g(0.5, 2.0), &g(0.5, 2.0)).unwrap() <= 1e-8);
        let two = GaussianFit::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            frechet_distance(&g(0.0, 1.0), &two),
            Err(Error::DimensionMismatch(1, 2))
        ));
        let bad = GaussianFit::new(vec![0.0], vec![-1.0]).unwrap();
        assert!(matches!(
            frechet_distance(&bad, &g(0.0, 1.0)),
            Err(Error::NonPsdProduct(_))
        ));
    }

    #[test]
    fn identity_distance_extremes() {
        assert_eq!(
            embedding_distance(&[1.0f64, 2.0], &[1.0, 2.0]).unwrap(),
            0.0
        );
        assert!((embedding_distance(&[1.0f64, 2.0], &[-1.0, -2.0]).unwrap() - 4.0).abs() < 1e-12);
        assert!((embedding_distance(&[3.0f64, 0.0], &[0.0, 0.5]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(
            embedding_distance(&[0.0f64], &[1.0]),
            Err(Error::ZeroEmbedding)
        );
    }
}
