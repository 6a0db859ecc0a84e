use std::path::PathBuf;

use latentshift::embedding::{self, pixel_mse, resize};
use latentshift::generator::{Encoder, Generator, PatchFeatures, ReferenceGenerator, RidgeEncoder};
use latentshift::io::{load_image, save_image, save_latent};
use latentshift::metrics::{psnr, ssim};
use latentshift::{Image, Latent};
use rayon::prelude::*;

use super::{fmt_opt, write_csv};
use crate::args::EmbedArgs;
use crate::config::InitKind;
use crate::manifest::{Entry, Manifest};
use crate::{CliError, Context, Result, Tally};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedRow {
    pub image: PathBuf,
    pub best_loss: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub mse: Option<f64>,
    pub latent: Option<PathBuf>,
    pub outcome: std::result::Result<(), String>,
}

/// Per image `i`: `latents/<i>_<stem>.lat`, `traces/<i>_<stem>_loss.csv`
/// (`iteration,loss`) and `recon/<i>_<stem>.imf`. Also writes
/// `embed_summary.csv` (`image,best_loss,psnr,ssim,status`), comparing
/// `G(w*)` with the input resampled to the generator size.
pub fn embed(ctx: &Context, args: &EmbedArgs) -> Result<(Vec<EmbedRow>, Tally)> {
    let entries: Vec<Entry> = match &args.manifest {
        Some(m) => Manifest::load(m)?.entries,
        None => args.images.iter().map(Entry::new).collect(),
    };
    if entries.is_empty() {
        return Err(CliError::Usage("no images to embed".into()));
    }
    let gen = ctx.generator(&args.generator)?;
    let mut section = ctx.config.embed.clone();
    if let Some(e) = args.iterations {
        section.iterations = e;
    }
    if let Some(i) = args.init {
        section.init = i;
    }
    if let Some(lr) = args.learning_rate {
        section.learning_rate = lr;
    }
    section.to_config(gen.out_size(), ctx.seed)?;
    let encoder = match (section.init, &gen) {
        (InitKind::Encoder, ReferenceGenerator::Linear(l)) => Some(RidgeEncoder::new(
            l.clone(),
            RidgeEncoder::<f64>::DEFAULT_LAMBDA,
        )?),
        (InitKind::Encoder, ReferenceGenerator::Mlp(_)) => {
            return Err(CliError::Usage(
                "encoder initialization needs a linear generator".into(),
            ));
        }
        _ => None,
    };
    let ext = PatchFeatures::new(section.grid);

    let rows: Vec<EmbedRow> = entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut row = EmbedRow {
                image: e.path.clone(),
                best_loss: None,
                psnr: None,
                ssim: None,
                mse: None,
                latent: None,
                outcome: Ok(()),
            };
            let cfg = section.to_config(gen.out_size(), ctx.seed.wrapping_add(i as u64));
            let enc = encoder.as_ref().map(|e| e as &dyn Encoder<f64>);
            let r = cfg
                .map_err(|err| err.to_string())
                .and_then(|cfg| embed_entry(ctx, &gen, &ext, enc, &cfg, i, e, &mut row));
            row.outcome = r;
            row
        })
        .collect();

    let mut tally = Tally::default();
    for r in &rows {
        tally.record(&r.outcome);
        if let Err(reason) = &r.outcome {
            eprintln!("failed {}: {reason}", r.image.display());
        }
    }
    write_csv(
        &ctx.output("embed_summary.csv")?,
        &["image", "best_loss", "psnr", "ssim", "status"],
        rows.iter().map(|r| {
            [
                r.image.display().to_string(),
                fmt_opt(r.best_loss),
                fmt_opt(r.psnr),
                fmt_opt(r.ssim),
                super::status(&r.outcome),
            ]
        }),
    )?;
    println!("embedded {} of {}", tally.ok, rows.len());
    Ok((rows, tally.finish()?))
}

#[allow(clippy::too_many_arguments)]
fn embed_entry(
    ctx: &Context,
    gen: &ReferenceGenerator<f64>,
    ext: &PatchFeatures,
    encoder: Option<&dyn Encoder<f64>>,
    cfg: &embedding::EmbedConfig<f64>,
    index: usize,
    e: &Entry,
    row: &mut EmbedRow,
) -> std::result::Result<(), String> {
    let s = |err: latentshift::Error| err.to_string();
    let img: Image = load_image(&e.path).map_err(|err| format!("{}: {err}", e.path.display()))?;
    let result = embedding::embed(&img, gen, ext, encoder, cfg).map_err(s)?;
    let stem = format!("{index:04}_{}", e.stem());

    let lat = ctx
        .output(format!("latents/{stem}.lat"))
        .map_err(|err| err.to_string())?;
    save_latent::<f64>(&lat, &result.w_star).map_err(s)?;
    let trace = ctx
        .output(format!("traces/{stem}_loss.csv"))
        .map_err(|err| err.to_string())?;
    write_csv(
        &trace,
        &["iteration", "loss"],
        result
            .loss_trace
            .iter()
            .enumerate()
            .map(|(k, l)| [k.to_string(), l.to_string()]),
    )
    .map_err(|err| err.to_string())?;

    let w: &Latent = &result.w_star;
    let recon = gen.generate(w).map_err(s)?;
    let target = resize(&img, gen.out_size()).map_err(s)?;
    let recon_path = ctx
        .output(format!("recon/{stem}.imf"))
        .map_err(|err| err.to_string())?;
    save_image(&recon_path, &recon).map_err(s)?;
    row.best_loss = Some(result.best_loss);
    row.mse = pixel_mse(&recon, &target).ok();
    row.psnr = Some(psnr(&recon, &target).map_err(s)?);
    row.ssim = ssim(&recon, &target).ok();
    row.latent = Some(lat);
    Ok(())
}
