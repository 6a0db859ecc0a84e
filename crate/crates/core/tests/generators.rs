mod common;

use common::{central_diff, dot, random_vec, rel_err};
use latentshift::generator::*;
use latentshift::rng::sample_latent;
use latentshift::{Image, Latent, World};

fn small_world(seed: u64) -> World {
    World::new(seed, 3, 5, 16, 3).unwrap()
}

fn gens(seed: u64) -> Vec<(&'static str, Box<dyn Generator<f64>>)> {
    let w = small_world(seed);
    vec![
        ("linear", Box::new(LinearGenerator::new(w.clone()))),
        ("mlp", Box::new(MlpGenerator::new(w, 12).unwrap())),
    ]
}

#[test]
fn generator_vjp_matches_finite_differences() {
    for trial in 0..20u64 {
        for (name, g) in gens(trial) {
            let (l, d) = g.latent_shape();
            let w: Latent = sample_latent(1000 + trial, l, d);
            let u = random_vec(trial, g.image_len(), 1.0);
            let analytic = g.vjp(&w, &u).unwrap();
            let f = |x: &[f64]| {
                let code = Latent::new(l, d, x.to_vec()).unwrap();
                dot(&u, g.generate(&code).unwrap().as_slice())
            };
            let fd = central_diff(f, w.as_slice(), 1e-4);
            let err = rel_err(analytic.as_slice(), &fd);
            assert!(err <= 1e-4, "{name} trial {trial}: rel err {err:e}");
        }
    }
}

#[test]
fn vjp_is_linear_in_upstream() {
    for (name, g) in gens(4) {
        let (l, d) = g.latent_shape();
        let w: Latent = sample_latent(9, l, d);
        let u1 = random_vec(1, g.image_len(), 1.0);
        let u2 = random_vec(2, g.image_len(), 1.0);
        let sum: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let g1 = g.vjp(&w, &u1).unwrap();
        let g2 = g.vjp(&w, &u2).unwrap();
        let g12 = g.vjp(&w, &sum).unwrap();
        for i in 0..g12.len() {
            let lhs = g12.as_slice()[i];
            let rhs = g1.as_slice()[i] + g2.as_slice()[i];
            assert!((lhs - rhs).abs() <= 1e-10, "{name}");
        }
        let zero = g.vjp(&w, &vec![0.0; g.image_len()]).unwrap();
        assert!(zero.as_slice().iter().all(|v| *v == 0.0), "{name}");
    }
}

#[test]
fn linear_vjp_is_transpose_times_sigmoid_slope() {
    let world = small_world(3);
    let g = LinearGenerator::new(world);
    let w: Latent = sample_latent(5, 3, 5);
    let u = random_vec(7, g.image_len(), 1.0);
    let img = g.generate(&w).unwrap();
    // Aᵀ·(u ⊙ σ(1−σ)) assembled from explicit rows.
    let mut expect = vec![0.0; 15];
    for (p, (&s, &up)) in img.as_slice().iter().zip(&u).enumerate() {
        for (e, a) in expect.iter_mut().zip(g.row(p)) {
            *e += a * up * s * (1.0 - s);
        }
    }
    let got = g.vjp(&w, &u).unwrap();
    let err = rel_err(got.as_slice(), &expect);
    assert!(err <= 1e-12, "{err:e}");
    let f = |x: &[f64]| {
        dot(
            &u,
            g.generate(&Latent::new(3, 5, x.to_vec()).unwrap())
                .unwrap()
                .as_slice(),
        )
    };
    assert!(rel_err(got.as_slice(), &central_diff(f, w.as_slice(), 1e-4)) <= 1e-6);
}

#[test]
fn extractor_vjps_match_finite_differences() {
    let extractors: Vec<(&str, Box<dyn FeatureExtractor<f64>>)> = vec![
        ("patch", Box::new(PatchFeatures::new(4))),
        (
            "projection",
            Box::new(ProjectionEmbedder::new(3, 4, 3, 10).unwrap()),
        ),
    ];
    for trial in 0..20u64 {
        let pixels = random_vec(50 + trial, 16 * 16 * 3, 0.1);
        let img = Image::new(16, 16, 3, pixels.iter().map(|v| 0.5 + v).collect()).unwrap();
        for (name, ext) in &extractors {
            let n_f = ext.extract(&img).unwrap().len();
            let up = random_vec(trial, n_f, 1.0);
            let analytic = ext.vjp(&img, &up).unwrap();
            let f = |x: &[f64]| {
                let im = Image::new(16, 16, 3, x.to_vec()).unwrap();
                dot(&up, &ext.extract(&im).unwrap())
            };
            let fd = central_diff(f, img.as_slice(), 1e-4);
            let err = rel_err(&analytic, &fd);
            assert!(err <= 1e-4, "{name} trial {trial}: {err:e}");
        }
    }
}

#[test]
fn zero_code_gives_sigmoid_of_bias() {
    let g = LinearGenerator::new(small_world(8));
    let img = g.generate(&Latent::zeros(3, 5)).unwrap();
    for (px, c) in img.as_slice().iter().zip(g.bias()) {
        assert!((*px - 1.0 / (1.0 + (-c).exp())).abs() <= 1e-15);
    }
}

#[test]
fn generation_is_deterministic_and_in_range() {
    for (name, g) in gens(11) {
        let (l, d) = g.latent_shape();
        let w: Latent = sample_latent(3, l, d);
        let a = g.generate(&w).unwrap();
        let b = g.generate(&w).unwrap();
        assert_eq!(a, b, "{name}");
        // |w| ≤ 5: outputs strictly inside (0, 1), so clamping never engaged.
        let peak = w.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let big = w.scaled(5.0 / peak);
        let img = g.generate(&big).unwrap();
        assert!(
            img.as_slice().iter().all(|v| *v > 0.0 && *v < 1.0),
            "{name}"
        );
    }
    // Rebuilding from the same seed reproduces the parameters.
    let a = LinearGenerator::new(small_world(2));
    let b = LinearGenerator::new(small_world(2));
    assert_eq!(a, b);
}

#[test]
fn planted_direction_is_unit_and_statistic_monotone() {
    for seed in [1u64, 2, 3] {
        let world = World::desk(seed).unwrap();
        assert!((world.planted_direction().norm() - 1.0).abs() <= 1e-12);
        let d = world.planted_direction().clone();
        let gens: Vec<Box<dyn Generator<f64>>> = vec![
            Box::new(LinearGenerator::new(world.clone())),
            Box::new(MlpGenerator::new(world.clone(), 32).unwrap()),
        ];
        for g in &gens {
            for k in 0..10u64 {
                let w: Latent = sample_latent(500 + k, 4, 16);
                let stats: Vec<f64> = (0..21)
                    .map(|i| {
                        let t = -10.0 + i as f64;
                        world.statistic(&g.generate(&w.axpy(t, &d).unwrap()).unwrap())
                    })
                    .collect();
                assert!(
                    stats.windows(2).all(|p| p[1] > p[0]),
                    "seed {seed} w {k}: {stats:?}"
                );
            }
        }
        // w vs w + 3d for the linear generator
        let g = LinearGenerator::new(world.clone());
        let w: Latent = sample_latent(77, 4, 16);
        let before = world.statistic(&g.generate(&w).unwrap());
        let after = world.statistic(&g.generate(&w.axpy(3.0, &d).unwrap()).unwrap());
        assert!(after > before);
    }
}

#[test]
fn shape_errors() {
    let g = LinearGenerator::new(small_world(1));
    assert!(g.generate(&Latent::zeros(2, 5)).is_err());
    assert!(g.vjp(&Latent::zeros(3, 5), &[0.0; 3]).is_err());
    let img = Image::filled(16, 16, 3, 0.5).unwrap();
    assert!(PatchFeatures::new(5).extract(&img).is_err());
}

#[test]
fn central_mean_gradient_matches_definition() {
    let g: Vec<f64> = central_mean_grad(8, 8, 1);
    let img = Image::from_fn(8, 8, 1, |y, x, _| ((y * 8 + x) % 13) as f64 / 13.0).unwrap();
    assert!((dot(&g, img.as_slice()) - central_mean(&img)).abs() < 1e-15);
}
