mod common;

use common::{central_diff, rel_err};
use latentshift::embedding::*;
use latentshift::generator::*;
use latentshift::rng::sample_latent;
use latentshift::{Error, Image, Latent, World};

fn desk() -> (World, LinearGenerator<f64>) {
    let world = World::desk(21).unwrap();
    (world.clone(), LinearGenerator::new(world))
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let world = World::desk(5).unwrap();
    let gens: Vec<Box<dyn Generator<f64>>> = vec![
        Box::new(LinearGenerator::new(world.clone())),
        Box::new(MlpGenerator::new(world, 32).unwrap()),
    ];
    let ext = PatchFeatures::new(8);
    for g in &gens {
        for k in 0..10u64 {
            let target = g.generate(&sample_latent(900 + k, 4, 16)).unwrap();
            let objective = Objective::new(LossWeights::default(), &ext, &target, 16, 64).unwrap();
            let w: Latent = sample_latent(k, 4, 16);
            let (_, grad) = objective.latent_value_and_grad(g.as_ref(), &w).unwrap();
            let f = |x: &[f64]| {
                let code = Latent::new(4, 16, x.to_vec()).unwrap();
                objective.value(&g.generate(&code).unwrap()).unwrap()
            };
            let fd = central_diff(f, w.as_slice(), 1e-4);
            let err = rel_err(grad.as_slice(), &fd);
            assert!(err <= 1e-4, "point {k}: {err:e}");
        }
    }
}

#[test]
fn mean_latent_init_concentrates_at_zero() {
    let (_, g) = desk();
    let w = init_latent(
        &InitStrategy::MeanLatent {
            samples: 10_000,
            seed: 4,
        },
        &g,
        None,
        None,
    )
    .unwrap();
    let peak = w.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak <= 0.05, "{peak}");
}

#[test]
fn random_init_is_sample_latent() {
    let (_, g) = desk();
    let w = init_latent(&InitStrategy::Random { seed: 13 }, &g, None, None).unwrap();
    assert_eq!(w, sample_latent(13, 4, 16));
}

#[test]
fn encoder_init_requires_target_and_encoder() {
    let (_, g) = desk();
    let enc = RidgeEncoder::new(g.clone(), 1e-3).unwrap();
    assert_eq!(
        init_latent(&InitStrategy::Encoder, &g, Some(&enc), None),
        Err(Error::MissingTarget)
    );
    let img = Image::filled(64, 64, 3, 0.5).unwrap();
    assert_eq!(
        init_latent(&InitStrategy::Encoder, &g, None, Some(&img)),
        Err(Error::MissingEncoder)
    );
}

#[test]
fn encoder_init_beats_random_init() {
    let (_, g) = desk();
    let enc = RidgeEncoder::new(g.clone(), RidgeEncoder::<f64>::DEFAULT_LAMBDA).unwrap();
    let ext = PatchFeatures::new(8);
    let (mut enc_total, mut rnd_total) = (0.0, 0.0);
    for k in 0..20u64 {
        let target = g.generate(&sample_latent(2000 + k, 4, 16)).unwrap();
        let loss_at = |w: &Latent| {
            total_loss(
                LossWeights::default(),
                &ext,
                &g.generate(w).unwrap(),
                &target,
                16,
                64,
            )
            .unwrap()
        };
        let we = init_latent(&InitStrategy::Encoder, &g, Some(&enc), Some(&target)).unwrap();
        let wr = init_latent(&InitStrategy::Random { seed: 3000 + k }, &g, None, None).unwrap();
        enc_total += loss_at(&we);
        rnd_total += loss_at(&wr);
    }
    assert!(
        enc_total / 20.0 < rnd_total / 20.0,
        "{enc_total} vs {rnd_total}"
    );
}

#[test]
fn starting_at_the_answer_stays_there() {
    let (_, g) = desk();
    let ext = PatchFeatures::new(8);
    let w0: Latent = sample_latent(8, 4, 16);
    let target = g.generate(&w0).unwrap();
    let mut cfg = EmbedConfig::for_size(64, InitStrategy::Fixed(w0.clone()));
    cfg.iterations = 5;
    let r = embed(&target, &g, &ext, None, &cfg).unwrap();
    assert_eq!(r.loss_trace[0], 0.0);
    assert_eq!(r.w_star, w0);
    assert_eq!(r.best_loss, 0.0);
}

#[test]
fn convex_recovery_and_contract() {
    let (_, g) = desk();
    let ext = PatchFeatures::new(8);
    let target = g.generate(&sample_latent(31, 4, 16)).unwrap();
    let cfg = EmbedConfig::for_size(64, InitStrategy::Random { seed: 32 });
    let r = embed(&target, &g, &ext, None, &cfg).unwrap();
    assert_eq!(r.iterations_run, 1000);
    assert_eq!(r.loss_trace.len(), 1000);
    let min = r.loss_trace.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(r.best_loss, min);
    let recon = g.generate(&r.w_star).unwrap();
    let again = total_loss(cfg.weights, &ext, &recon, &target, 16, 64).unwrap();
    assert!((again - r.best_loss).abs() <= 1e-12);
    assert!(pixel_mse(&recon, &target).unwrap() <= 1e-4);

    let envelope: Vec<f64> = r
        .loss_trace
        .iter()
        .scan(f64::INFINITY, |m, &v| {
            *m = m.min(v);
            Some(*m)
        })
        .collect();
    assert!(envelope.windows(2).all(|p| p[1] <= p[0]));

    let r2 = embed(&target, &g, &ext, None, &cfg).unwrap();
    assert_eq!(r, r2);
}

#[test]
fn nonconvex_run_keeps_best_iterate() {
    let world = World::desk(2).unwrap();
    let g = MlpGenerator::new(world, 32).unwrap();
    let ext = PatchFeatures::new(8);
    let target = g.generate(&sample_latent(41, 4, 16)).unwrap();
    let mut cfg = EmbedConfig::for_size(
        64,
        InitStrategy::MeanLatent {
            samples: 16,
            seed: 1,
        },
    );
    cfg.iterations = 200;
    cfg.adam.learning_rate = 0.2;
    let r = embed(&target, &g, &ext, None, &cfg).unwrap();
    let min = r.loss_trace.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(r.best_loss, min);
    let again = total_loss(
        cfg.weights,
        &ext,
        &g.generate(&r.w_star).unwrap(),
        &target,
        16,
        64,
    )
    .unwrap();
    assert!((again - r.best_loss).abs() <= 1e-12);
}

#[test]
fn single_iteration_trace() {
    let (_, g) = desk();
    let ext = PatchFeatures::new(8);
    let target = Image::filled(64, 64, 3, 0.3).unwrap();
    let mut cfg = EmbedConfig::for_size(64, InitStrategy::Random { seed: 1 });
    cfg.iterations = 1;
    let r = embed(&target, &g, &ext, None, &cfg).unwrap();
    assert_eq!(r.loss_trace.len(), 1);
    assert_eq!(r.best_loss, r.loss_trace[0]);
    cfg.iterations = 0;
    assert!(embed(&target, &g, &ext, None, &cfg).is_err());
}

#[test]
fn larger_targets_are_resampled() {
    let (_, g) = desk();
    let ext = PatchFeatures::new(8);
    let target = Image::filled(128, 128, 3, 0.4).unwrap();
    let mut cfg = EmbedConfig::for_size(64, InitStrategy::Random { seed: 1 });
    cfg.iterations = 3;
    assert_eq!(
        embed(&target, &g, &ext, None, &cfg)
            .unwrap()
            .loss_trace
            .len(),
        3
    );
}

struct Exploding;

impl FeatureExtractor<f64> for Exploding {
    fn extract(&self, _: &Image) -> latentshift::Result<Vec<f64>> {
        Ok(vec![f64::INFINITY])
    }

    fn vjp(&self, img: &Image, _: &[f64]) -> latentshift::Result<Vec<f64>> {
        Ok(vec![0.0; img.len()])
    }
}

#[test]
fn non_finite_loss_aborts() {
    let (_, g) = desk();
    let target = Image::filled(64, 64, 3, 0.3).unwrap();
    let cfg = EmbedConfig::for_size(64, InitStrategy::Random { seed: 1 });
    assert_eq!(
        embed(&target, &g, &Exploding, None, &cfg),
        Err(Error::NonFiniteLoss { iteration: 0 })
    );
}
