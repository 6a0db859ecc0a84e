use latentshift::generator::{FeatureExtractor, PatchFeatures, ProjectionEmbedder};
use latentshift::metrics::*;
use latentshift::rng::rng_for;
use latentshift::{Error, Image};
use proptest::prelude::*;
use rand::RngExt;

fn random_image(seed: u64, n: usize, c: usize) -> Image {
    let mut rng = rng_for(seed, 0);
    let data: Vec<f64> = (0..n * n * c).map(|_| rng.random::<f64>()).collect();
    Image::new(n, n, c, data).unwrap()
}

/// Embeds an image as the mean of its channel 0, shifted to be signed.
struct SignedMean;

impl FeatureExtractor<f64> for SignedMean {
    fn extract(&self, img: &Image) -> latentshift::Result<Vec<f64>> {
        let m = img.as_slice().iter().sum::<f64>() / img.len() as f64;
        Ok(vec![m - 0.5])
    }

    fn vjp(&self, img: &Image, _: &[f64]) -> latentshift::Result<Vec<f64>> {
        Ok(vec![0.0; img.len()])
    }
}

#[test]
fn psnr_oracles() {
    let a = Image::filled(16, 16, 3, 0.5).unwrap();
    let b = Image::filled(16, 16, 3, 0.6).unwrap();
    assert!((psnr(&a, &b).unwrap() - 20.0).abs() <= 1e-9);
    assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    let small = Image::filled(8, 8, 3, 0.5).unwrap();
    assert!(matches!(psnr(&a, &small), Err(Error::ShapeMismatch { .. })));
}

#[test]
fn ssim_oracles() {
    let a = random_image(1, 24, 3);
    assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    let checker = Image::from_fn(
        24,
        24,
        1,
        |y, x, _| if (x + y) % 2 == 0 { 0.8 } else { 0.2 },
    )
    .unwrap();
    let negative = Image::from_fn(24, 24, 1, |y, x, c| 1.0 - checker.get(y, x, c)).unwrap();
    assert!(ssim(&checker, &negative).unwrap() < 0.0);
    let tiny = random_image(2, 8, 1);
    assert!(matches!(ssim(&tiny, &tiny), Err(Error::TooSmall { .. })));
}

#[test]
fn ssim_on_random_pairs() {
    for k in 0..100u64 {
        let a = random_image(k, 16, 1);
        let b = random_image(k + 1000, 16, 1);
        let s = ssim(&a, &b).unwrap();
        assert!((-1.0..1.0).contains(&s), "{s}");
        assert!((s - ssim(&b, &a).unwrap()).abs() <= 1e-12);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }
}

#[test]
fn gaussian_fit_examples() {
    let g = fit_gaussian(&[vec![3.0f64, -1.0], vec![3.0, -1.0]]).unwrap();
    assert_eq!(g.mean(), &[3.0, -1.0]);
    assert_eq!(g.covariance(), &[1e-6, 0.0, 0.0, 1e-6]);
    let g = fit_gaussian(&[vec![0.0f64, 0.0], vec![2.0, 0.0]]).unwrap();
    assert_eq!(g.mean(), &[1.0, 0.0]);
    assert!((g.covariance()[0] - (2.0 + 1e-6)).abs() <= 1e-15);
    assert_eq!(g.covariance()[3], 1e-6);
    assert!(matches!(
        fit_gaussian(&[vec![1.0]]),
        Err(Error::TooFewSamples { .. })
    ));
}

#[test]
fn frechet_closed_forms() {
    let g = |mu: f64, var: f64| GaussianFit::new(vec![mu], vec![var]).unwrap();
    assert!((frechet_distance(&g(0.0, 1.0), &g(1.0, 1.0)).unwrap() - 1.0).abs() <= 1e-8);
    assert!((frechet_distance(&g(0.0, 1.0), &g(0.0, 4.0)).unwrap() - 1.0).abs() <= 1e-8);
    assert!(frechet_distance(&g(2.0, 3.0), &g(2.0, 3.0)).unwrap() <= 1e-8);
    let two = GaussianFit::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(
        frechet_distance(&g(0.0, 1.0), &two).err(),
        Some(Error::DimensionMismatch(1, 2))
    );
}

#[test]
fn identity_distance_extremes() {
    let bright = Image::filled(8, 8, 1, 0.9).unwrap();
    let dark = Image::filled(8, 8, 1, 0.1).unwrap();
    assert!((identity_distance(&SignedMean, &bright, &dark).unwrap() - 4.0).abs() <= 1e-12);
    assert_eq!(
        identity_distance(&SignedMean, &bright, &bright).unwrap(),
        0.0
    );
    let mid = Image::filled(8, 8, 1, 0.5).unwrap();
    assert_eq!(
        identity_distance(&SignedMean, &bright, &mid).err(),
        Some(Error::ZeroEmbedding)
    );
    assert!((embedding_distance(&[1.0f64, 0.0], &[0.0, 3.0]).unwrap() - 2.0).abs() <= 1e-12);
}

#[test]
fn perceptual_examples() {
    assert_eq!(
        normalized_mean_sq_diff(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
        1.0
    );
    let fa = [0.3, -1.2, 2.0];
    let fb = [1.0, 0.5, -0.1];
    let base = normalized_mean_sq_diff(&fa, &fb).unwrap();
    let scaled: Vec<f64> = fa.iter().map(|v| v * 7.5).collect();
    assert!((normalized_mean_sq_diff(&scaled, &fb).unwrap() - base).abs() <= 1e-15);
}

#[test]
fn evaluate_pair_on_identical_images() {
    let a = random_image(3, 16, 3);
    let emb = ProjectionEmbedder::new(1, 4, 3, 8).unwrap();
    let r = evaluate_pair(
        &a,
        &a,
        &PatchFeatures::new(4),
        Some(&emb as &dyn FeatureExtractor<f64>),
    )
    .unwrap();
    assert_eq!(r.psnr_db, f64::INFINITY);
    assert_eq!(r.ssim, 1.0);
    assert_eq!(r.perceptual, 0.0);
    assert_eq!(r.identity, Some(0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psnr_decreases_with_error(base in 0.2f64..0.5, d1 in 1e-3f64..0.2, extra in 1e-3f64..0.2) {
        let a = Image::filled(4, 4, 1, base).unwrap();
        let b = Image::filled(4, 4, 1, base + d1).unwrap();
        let c = Image::filled(4, 4, 1, base + d1 + extra).unwrap();
        prop_assert!(psnr(&a, &c).unwrap() < psnr(&a, &b).unwrap());
    }

    #[test]
    fn ssim_in_range(s1 in 0u64..10_000, s2 in 10_000u64..20_000) {
        let s = ssim(&random_image(s1, 12, 3), &random_image(s2, 12, 3)).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert!(s < 1.0);
    }

    #[test]
    fn frechet_symmetric_and_self_zero(
        xs in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 4..12),
        ys in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 4..12),
    ) {
        let g1 = fit_gaussian(&xs).unwrap();
        let g2 = fit_gaussian(&ys).unwrap();
        let ab = frechet_distance(&g1, &g2).unwrap();
        let ba = frechet_distance(&g2, &g1).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-8 * (1.0 + ab));
        prop_assert!(frechet_distance(&g1, &g1).unwrap() <= 1e-8);
    }

    #[test]
    fn identity_is_two_minus_two_cos(
        u in prop::collection::vec(-1.0f64..1.0, 6),
        v in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(nu > 1e-3 && nv > 1e-3);
        let cos = u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv);
        let d = embedding_distance(&u, &v).unwrap();
        prop_assert!((0.0..=4.0).contains(&d));
        prop_assert!((d - (2.0 - 2.0 * cos)).abs() <= 1e-12);
    }

    #[test]
    fn perceptual_symmetric(s1 in 0u64..10_000, s2 in 10_000u64..20_000) {
        let ext = PatchFeatures::new(4);
        let a = random_image(s1, 16, 3);
        let b = random_image(s2, 16, 3);
        prop_assert_eq!(perceptual_distance(&ext, &a, &a).unwrap(), 0.0);
        let ab = perceptual_distance(&ext, &a, &b).unwrap();
        prop_assert!((ab - perceptual_distance(&ext, &b, &a).unwrap()).abs() <= 1e-15);
    }
}
