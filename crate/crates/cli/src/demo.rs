//! Synthetic end-to-end run: plant a direction, recover it from labeled
//! latents, disentangle it from a second attribute, invert a held-out image,
//! sweep α along the result and score everything against fixed thresholds.

use std::fmt::Write as _;
use std::time::Instant;

use latentshift::directions::{
    correlation_matrix, cosine_similarity, fit_direction, planted_dataset, project_subtract,
    train_logistic,
};
use latentshift::editing::{edit_latent, sweep, EditSpec, LayerMask};
use latentshift::embedding::{
    embed, init_latent, pixel_mse, total_loss, EmbedConfig, InitStrategy, Objective,
};
use latentshift::generator::{
    FeatureExtractor, Generator, LinearGenerator, MlpGenerator, PatchFeatures, ProjectionEmbedder,
    ReferenceGenerator, RidgeEncoder,
};
use latentshift::io;
use latentshift::metrics::{
    embedding_distance, evaluate_pair, fit_gaussian, frechet_distance, psnr, ssim, GaussianFit,
};
use latentshift::rng::sample_latent;
use latentshift::{Direction, Error, Image, Latent, World};

use crate::args::DemoArgs;
use crate::commands::write_csv;
use crate::{Context, Result};

pub const GRADIENT_TOLERANCE: f64 = 1e-4;
pub const RECOVERY_MSE: f64 = 1e-4;
pub const RECOVERY_PSNR: f64 = 40.0;
pub const REEVALUATION_TOLERANCE: f64 = 1e-12;
pub const MIN_COSINE: f64 = 0.95;
pub const CONTROL_BAND: f64 = 0.1;
pub const ORTHOGONALITY: f64 = 1e-10;
pub const ALGEBRA_TOLERANCE: f64 = 1e-12;
pub const ORACLE_TOLERANCE: f64 = 1e-8;
pub const SWEEP_ALPHAS: [f64; 5] = [-5.0, -3.0, 0.0, 3.0, 5.0];
const LABEL_NOISE: f64 = 0.1;
const SECOND_OVERLAP: f64 = 0.3;
const HELD_OUT: u64 = 10;
const INIT_TRIALS: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub checks: Vec<Check>,
    /// Everything printed to stdout; free of timings so reruns match byte for byte.
    pub summary: String,
}

impl DemoReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

struct Log {
    checks: Vec<Check>,
    lines: String,
}

impl Log {
    fn check(&mut self, criterion: u8, name: &'static str, passed: bool, detail: String) {
        let tag = if passed { "PASS" } else { "FAIL" };
        let _ = writeln!(self.lines, "[{tag}] {criterion:>2} {name}: {detail}");
        self.checks.push(Check {
            criterion,
            name,
            passed,
            detail,
        });
    }

    fn info(&mut self, line: String) {
        let _ = writeln!(self.lines, "       {line}");
    }
}

fn timed<R>(label: &str, f: impl FnOnce() -> R) -> R {
    let t = Instant::now();
    let r = f();
    eprintln!("{label}: {:.2?}", t.elapsed());
    r
}

pub fn run(ctx: &Context, args: &DemoArgs) -> Result<DemoReport> {
    let s = ctx.seed;
    let mut log = Log {
        checks: Vec::new(),
        lines: format!("latentshift demo (seed {s})\n"),
    };
    let world = World::desk(s)?;
    let linear = LinearGenerator::new(world.clone());
    let mlp = MlpGenerator::new(world.clone(), MlpGenerator::<f64>::DEFAULT_HIDDEN)?;
    let ext = PatchFeatures::new(8);
    let n = linear.out_size();
    let (l, d) = linear.latent_shape();

    timed("gradient parity", || {
        gradient_parity(&mut log, s, &linear, &mlp, &ext)
    })?;

    // Inversion of a held-out image.
    let w_true: Latent = sample_latent(s.wrapping_add(6), l, d);
    let target = linear.generate(&w_true)?;
    let cfg = EmbedConfig::for_size(
        n,
        InitStrategy::Random {
            seed: s.wrapping_add(7),
        },
    );
    let result = timed("embedding", || embed(&target, &linear, &ext, None, &cfg))?;
    let recon = linear.generate(&result.w_star)?;
    let mse = pixel_mse(&recon, &target)?;
    let p = psnr(&recon, &target)?;
    log.check(
        2,
        "convex inversion recovery",
        mse <= RECOVERY_MSE && p >= RECOVERY_PSNR,
        format!("pixel mse {mse:.3e} (<= {RECOVERY_MSE:e}), psnr {p:.2} dB (>= {RECOVERY_PSNR})"),
    );

    let mut short = EmbedConfig::for_size(
        n,
        InitStrategy::MeanLatent {
            samples: 64,
            seed: s,
        },
    );
    short.iterations = 200;
    let mlp_target = mlp.generate(&sample_latent(s.wrapping_add(8), l, d))?;
    let mlp_result = timed("mlp embedding", || {
        embed(&mlp_target, &mlp, &ext, None, &short)
    })?;
    let mut worst_gap = 0.0f64;
    let mut min_ok = true;
    for (r, g, t, c) in [
        (&result, &linear as &dyn Generator<f64>, &target, &cfg),
        (
            &mlp_result,
            &mlp as &dyn Generator<f64>,
            &mlp_target,
            &short,
        ),
    ] {
        let min = r.loss_trace.iter().copied().fold(f64::INFINITY, f64::min);
        min_ok &= r.best_loss == min;
        let again = total_loss(
            c.weights,
            &ext,
            &g.generate(&r.w_star)?,
            t,
            c.perceptual_size,
            c.mse_size,
        )?;
        worst_gap = worst_gap.max((again - r.best_loss).abs());
    }
    log.check(
        3,
        "inversion contract",
        min_ok && worst_gap <= REEVALUATION_TOLERANCE,
        format!("best_loss = min(trace): {min_ok}, re-evaluation gap {worst_gap:.2e} (<= {REEVALUATION_TOLERANCE:e})"),
    );

    init_ordering(&mut log, s, &linear, &ext, &cfg)?;

    // Attribute directions.
    let planted = Direction::from_raw(world.planted_direction().clone(), 0.0, "planted")?;
    let ds = planted_dataset(
        planted.vector(),
        args.samples,
        LABEL_NOISE,
        s.wrapping_add(1),
    )?;
    let logistic = ctx.config.logistic.to_config(s)?;
    let (a, fit) = timed("direction fit", || {
        fit_direction(&ds, &logistic, "extracted")
    })?;
    let cos = cosine_similarity(&a, &planted)?.abs();
    let control =
        train_logistic(&ds.with_shuffled_labels(s.wrapping_add(2))?, &logistic)?.test_accuracy;
    log.check(
        5,
        "planted-direction recovery",
        cos >= MIN_COSINE && (control - 0.5).abs() <= CONTROL_BAND,
        format!(
            "|cos| {cos:.4} (>= {MIN_COSINE}), test accuracy {:.4}, shuffled control {control:.4} (0.5 +/- {CONTROL_BAND})",
            fit.test_accuracy
        ),
    );

    let second_truth = correlated_unit(planted.vector(), SECOND_OVERLAP, s.wrapping_add(3))?;
    let ds2 = planted_dataset(&second_truth, args.samples, LABEL_NOISE, s.wrapping_add(4))?;
    let (x, _) = fit_direction(&ds2, &logistic, "second")?;
    let third = Direction::from_raw(
        correlated_unit(planted.vector(), 0.2, s.wrapping_add(5))?,
        0.0,
        "third",
    )?;
    let corr = correlation_matrix(&[a.clone(), x.clone(), third.clone()])?;
    log.info(format!(
        "correlation extracted/second {:.4}, extracted/third {:.4}",
        corr[0][1], corr[0][2]
    ));
    let disentangled = project_subtract(&a, &[x.clone(), third.clone()], true)?;
    let residual = [&x, &third]
        .iter()
        .map(|v| disentangled.vector().dot(v.vector()).map(f64::abs))
        .collect::<latentshift::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let parallel = project_subtract(&a, std::slice::from_ref(&a), true);
    log.check(
        6,
        "projection subtraction",
        residual <= ORTHOGONALITY && matches!(parallel, Err(Error::DegenerateResult)),
        format!(
            "max |<a', x>| {residual:.2e} (<= {ORTHOGONALITY:e}), parallel input -> {}",
            match &parallel {
                Err(e) => e.to_string(),
                Ok(_) => "no error".into(),
            }
        ),
    );
    log.info(format!(
        "|cos(disentangled, planted)| {:.4}",
        cosine_similarity(&disentangled, &planted)?.abs()
    ));

    // Editing.
    let mask = LayerMask::default_for(l);
    let w_star = &result.w_star;
    editing_algebra(&mut log, w_star, &disentangled, &mask)?;

    let mut monotone = true;
    let mut latents = vec![w_star.clone()];
    latents.extend((0..HELD_OUT).map(|k| sample_latent(s.wrapping_add(100 + k), l, d)));
    let mut sweeps = Vec::with_capacity(latents.len());
    for w in &latents {
        let imgs = sweep(w, &disentangled, &SWEEP_ALPHAS, &mask)?
            .iter()
            .map(|c| linear.generate(c))
            .collect::<latentshift::Result<Vec<Image>>>()?;
        let stats: Vec<f64> = imgs.iter().map(|i| world.statistic(i)).collect();
        monotone &= stats.windows(2).all(|p| p[1] > p[0]);
        sweeps.push((imgs, stats));
    }
    log.check(
        8,
        "semantic monotonicity",
        monotone,
        format!(
            "planted statistic strictly increasing over alpha {:?} for w* and {HELD_OUT} held-out latents: {monotone}",
            SWEEP_ALPHAS
        ),
    );

    metric_oracles(&mut log)?;

    // Evaluation of the reconstruction and of the strongest edit.
    let emb = ProjectionEmbedder::<f64>::new(s, 4, linear.channels(), 16)?;
    let report = evaluate_pair(
        &target,
        &recon,
        &ext,
        Some(&emb as &dyn FeatureExtractor<f64>),
    )?;
    log.info(format!(
        "reconstruction: psnr {:.2} dB, ssim {:.6}, perceptual {:.3e}, identity {:.3e}",
        report.psnr_db,
        report.ssim,
        report.perceptual,
        report.identity.unwrap_or(f64::NAN)
    ));
    let originals: Vec<Vec<f64>> = sweeps[1..]
        .iter()
        .map(|(imgs, _)| ext.extract(&imgs[2]))
        .collect::<latentshift::Result<_>>()?;
    let pushed: Vec<Vec<f64>> = sweeps[1..]
        .iter()
        .map(|(imgs, _)| ext.extract(&imgs[4]))
        .collect::<latentshift::Result<_>>()?;
    let shift = frechet_distance(&fit_gaussian(&originals)?, &fit_gaussian(&pushed)?)?;
    log.info(format!("frechet(held-out, alpha=+5 edits) {shift:.4}"));

    // Artifacts and determinism.
    let gen_file = ReferenceGenerator::Linear(linear.clone());
    io::save_generator(&ctx.output("generator.gen")?, &gen_file)?;
    io::save_direction(&ctx.output("planted.dir")?, &planted)?;
    io::save_direction(&ctx.output("extracted.dir")?, &a)?;
    io::save_direction(&ctx.output("second.dir")?, &x)?;
    io::save_direction(&ctx.output("disentangled.dir")?, &disentangled)?;
    io::save_latent(&ctx.output("w_star.lat")?, w_star)?;
    write_csv(
        &ctx.output("loss.csv")?,
        &["iteration", "loss"],
        result
            .loss_trace
            .iter()
            .enumerate()
            .map(|(k, v)| [k.to_string(), v.to_string()]),
    )?;
    let (imgs, stats) = &sweeps[0];
    let mut rows = Vec::new();
    for (i, (img, st)) in imgs.iter().zip(stats).enumerate() {
        let path = ctx.output(format!("sweep/{i:02}.imf"))?;
        io::save_image(&path, img)?;
        rows.push([
            i.to_string(),
            SWEEP_ALPHAS[i].to_string(),
            ctx.relative(&path),
            st.to_string(),
        ]);
    }
    write_csv(
        &ctx.output("sweep.csv")?,
        &["index", "alpha", "image", "statistic"],
        rows,
    )?;
    determinism(
        &mut log,
        s,
        &linear,
        &ext,
        &target,
        &cfg,
        w_star,
        &gen_file,
        &disentangled,
    )?;

    let failures = log.checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(
        log.lines,
        "result: {} of {} checks passed",
        log.checks.len() - failures,
        log.checks.len()
    );
    std::fs::write(ctx.output("summary.txt")?, &log.lines)
        .map_err(|e| crate::CliError::io(ctx.out.join("summary.txt"), e))?;
    Ok(DemoReport {
        checks: log.checks,
        summary: log.lines,
    })
}

/// Unit code with `<u, d> = overlap` for unit `d`, otherwise random.
fn correlated_unit(d: &Latent, overlap: f64, seed: u64) -> latentshift::Result<Latent> {
    let d = d.scaled(1.0 / d.norm());
    let r: Latent = sample_latent(seed, d.layers(), d.dims());
    let along = r.dot(&d)?;
    let perp = r.axpy(-along, &d)?;
    let perp = perp.scaled(1.0 / perp.norm());
    d.scaled(overlap)
        .axpy((1.0 - overlap * overlap).sqrt(), &perp)
}

fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn gradient_parity(
    log: &mut Log,
    s: u64,
    linear: &LinearGenerator<f64>,
    mlp: &MlpGenerator<f64>,
    ext: &PatchFeatures,
) -> latentshift::Result<()> {
    let n = linear.out_size();
    let (l, d) = linear.latent_shape();
    let mut worst = 0.0f64;
    for (g, offset) in [
        (linear as &dyn Generator<f64>, 0u64),
        (mlp as &dyn Generator<f64>, 50),
    ] {
        for k in 0..10u64 {
            let target = g.generate(&sample_latent(s.wrapping_add(1000 + offset + k), l, d))?;
            let objective = Objective::new(Default::default(), ext, &target, (n / 4).max(1), n)?;
            let w: Latent = sample_latent(s.wrapping_add(2000 + offset + k), l, d);
            let (_, grad) = objective.latent_value_and_grad(g, &w)?;
            let f = |x: &[f64]| {
                Latent::new(l, d, x.to_vec())
                    .and_then(|c| g.generate(&c))
                    .and_then(|img| objective.value(&img))
                    .unwrap_or(f64::NAN)
            };
            let fd = central_diff(f, w.as_slice(), 1e-4);
            let scale = fd
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(f64::MIN_POSITIVE);
            let err = grad
                .as_slice()
                .iter()
                .zip(&fd)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / scale;
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
    }
    log.check(
        1,
        "gradient parity",
        worst <= GRADIENT_TOLERANCE,
        format!("max relative error {worst:.2e} over 10 points x 2 generators (<= {GRADIENT_TOLERANCE:e})"),
    );
    Ok(())
}

fn init_ordering(
    log: &mut Log,
    s: u64,
    linear: &LinearGenerator<f64>,
    ext: &PatchFeatures,
    cfg: &EmbedConfig<f64>,
) -> latentshift::Result<()> {
    let (l, d) = linear.latent_shape();
    let encoder = RidgeEncoder::new(linear.clone(), RidgeEncoder::<f64>::DEFAULT_LAMBDA)?;
    let (mut enc, mut rnd) = (0.0, 0.0);
    for k in 0..INIT_TRIALS {
        let target = linear.generate(&sample_latent(s.wrapping_add(3000 + k), l, d))?;
        let loss = |w: &Latent| -> latentshift::Result<f64> {
            total_loss(
                cfg.weights,
                ext,
                &linear.generate(w)?,
                &target,
                cfg.perceptual_size,
                cfg.mse_size,
            )
        };
        enc += loss(&init_latent(
            &InitStrategy::Encoder,
            linear,
            Some(&encoder),
            Some(&target),
        )?)?;
        let random = InitStrategy::Random {
            seed: s.wrapping_add(4000 + k),
        };
        rnd += loss(&init_latent(&random, linear, None, None)?)?;
    }
    let (enc, rnd) = (enc / INIT_TRIALS as f64, rnd / INIT_TRIALS as f64);
    log.check(
        4,
        "initialization ordering",
        enc < rnd,
        format!(
            "mean initial loss: encoder {enc:.4e} < random {rnd:.4e} over {INIT_TRIALS} trials"
        ),
    );
    Ok(())
}

fn editing_algebra(
    log: &mut Log,
    w: &Latent,
    dir: &Direction,
    mask: &LayerMask,
) -> latentshift::Result<()> {
    let l = w.layers();
    let at = |alpha: f64, m: &LayerMask| -> latentshift::Result<Latent> {
        edit_latent(w, &EditSpec::new(dir.clone(), alpha, m.clone())?)
    };
    let identity = at(0.0, mask)? == *w;
    let (a1, a2) = (2.0, -3.5);
    let stacked = edit_latent(
        &at(a1, mask)?,
        &EditSpec::new(dir.clone(), a2, mask.clone())?,
    )?;
    let direct = at(a1 + a2, mask)?;
    let composition = stacked
        .as_slice()
        .iter()
        .zip(direct.as_slice())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let edited = at(4.0, mask)?;
    let isolated = (0..l).filter(|r| !mask.contains(*r)).all(|r| {
        edited
            .row(r)
            .iter()
            .zip(w.row(r))
            .all(|(x, y)| x.to_bits() == y.to_bits())
    });
    let alpha = 3.0;
    let shift = dir.logit(&at(alpha, &LayerMask::all(l))?)? - dir.logit(w)?;
    let shift_err = (shift - alpha).abs();
    log.check(
        7,
        "editing algebra",
        identity && composition <= ALGEBRA_TOLERANCE && isolated && shift_err <= ALGEBRA_TOLERANCE,
        format!(
            "alpha=0 exact: {identity}, composition error {composition:.2e}, masked rows untouched: {isolated}, logit shift error {shift_err:.2e}"
        ),
    );
    Ok(())
}

fn metric_oracles(log: &mut Log) -> latentshift::Result<()> {
    let a = Image::filled(16, 16, 3, 0.5)?;
    let b = Image::filled(16, 16, 3, 0.6)?;
    let p = psnr(&a, &b)?;
    let textured = Image::from_fn(16, 16, 3, |y, x, c| {
        ((3 * y + 5 * x + 7 * c) % 11) as f64 / 10.0
    })?;
    let self_ssim = ssim(&textured, &textured)?;
    let g = |mu: f64, var: f64| GaussianFit::new(vec![mu], vec![var]);
    let f1 = frechet_distance(&g(0.0, 1.0)?, &g(1.0, 1.0)?)?;
    let f2 = frechet_distance(&g(0.0, 1.0)?, &g(0.0, 4.0)?)?;
    let antipodal = embedding_distance(&[0.6f64, -0.8], &[-0.6, 0.8])?;
    let ok = (p - 20.0).abs() <= ORACLE_TOLERANCE
        && self_ssim == 1.0
        && (f1 - 1.0).abs() <= ORACLE_TOLERANCE
        && (f2 - 1.0).abs() <= ORACLE_TOLERANCE
        && (antipodal - 4.0).abs() <= ORACLE_TOLERANCE;
    log.check(
        9,
        "metric oracles",
        ok,
        format!("psnr@mse0.01 {p:.9}, ssim(a,a) {self_ssim}, frechet {f1:.9} / {f2:.9}, antipodal identity {antipodal}"),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn determinism(
    log: &mut Log,
    s: u64,
    linear: &LinearGenerator<f64>,
    ext: &PatchFeatures,
    target: &Image,
    cfg: &EmbedConfig<f64>,
    w_star: &Latent,
    gen_file: &ReferenceGenerator<f64>,
    dir: &Direction,
) -> latentshift::Result<()> {
    let bytes =
        |f: &dyn Fn(&mut Vec<u8>) -> latentshift::Result<()>| -> latentshift::Result<Vec<u8>> {
            let mut v = Vec::new();
            f(&mut v)?;
            Ok(v)
        };
    let rerun = embed(target, linear, ext, None, cfg)?;
    let lat1 = bytes(&|o| io::write_latent(o, w_star))?;
    let lat2 = bytes(&|o| io::write_latent(o, &rerun.w_star))?;
    let rebuilt = ReferenceGenerator::Linear(LinearGenerator::new(World::desk(s)?));
    let gen1 = bytes(&|o| io::write_generator(o, gen_file))?;
    let gen2 = bytes(&|o| io::write_generator(o, &rebuilt))?;
    let gen_back: ReferenceGenerator<f64> = io::read_generator(&mut gen1.as_slice())?;
    let dir1 = bytes(&|o| io::write_direction(o, dir))?;
    let dir_back: Direction = io::read_direction(&mut dir1.as_slice())?;
    let dir2 = bytes(&|o| io::write_direction(o, &dir_back))?;
    let lat_back: Latent = io::read_latent(&mut lat1.as_slice())?;
    let lat3 = bytes(&|o| io::write_latent(o, &lat_back))?;
    let ok = lat1 == lat2 && gen1 == gen2 && gen_back == *gen_file && dir1 == dir2 && lat1 == lat3;
    log.check(
        10,
        "determinism and round-trip",
        ok,
        format!(
            "rerun LAT1 identical: {}, GEN1 rebuild identical: {}, GEN1 load exact: {}, DIR1/LAT1 re-save identical: {}",
            lat1 == lat2,
            gen1 == gen2,
            gen_back == *gen_file,
            dir1 == dir2 && lat1 == lat3
        ),
    );
    Ok(())
}
