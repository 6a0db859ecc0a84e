use std::path::PathBuf;

use latentshift::editing::{alpha_is_advisory, sweep, LayerMask, ADVISORY_ALPHA_RANGE};
use latentshift::generator::Generator;
use latentshift::io::{load_direction, load_latent, save_image, save_latent};
use latentshift::{Direction, Latent};
use rayon::prelude::*;

use super::write_csv;
use crate::args::EditArgs;
use crate::{CliError, Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub latent: PathBuf,
    pub image: PathBuf,
    /// Planted-attribute statistic of the rendered image.
    pub statistic: f64,
}

/// Per α index `i`: `edits/<i>.lat` and a rendered image `edits/<i>.<ext>`.
/// `sweep.csv` lists `index,alpha,latent,image,statistic`.
pub fn edit(ctx: &Context, args: &EditArgs) -> Result<Vec<SweepRow>> {
    let w: Latent = load_latent(&args.latent)?;
    let dir: Direction = load_direction(&args.direction)?;
    let gen = ctx.generator(&args.generator)?;
    let (l, _) = gen.latent_shape();
    w.check_same_shape(dir.vector())?;
    gen.check_latent(&w)?;
    let alphas = args
        .alphas
        .clone()
        .unwrap_or_else(|| ctx.config.alphas.clone());
    if alphas.is_empty() {
        return Err(CliError::Usage("no alpha values".into()));
    }
    let mask = if args.all_layers {
        LayerMask::all(l)
    } else if let Some(rows) = &args.layers {
        LayerMask::new(l, rows.iter().copied()).map_err(|e| CliError::Usage(e.to_string()))?
    } else {
        ctx.config.mask_for(l)?
    };
    for &a in &alphas {
        if !alpha_is_advisory(a) {
            eprintln!(
                "warning: alpha {a} is outside [{}, {}]; large edits tend to produce artifacts",
                ADVISORY_ALPHA_RANGE.0, ADVISORY_ALPHA_RANGE.1
            );
        }
    }
    let codes = sweep(&w, &dir, &alphas, &mask)?;
    let rows = codes
        .par_iter()
        .zip(alphas.par_iter())
        .enumerate()
        .map(|(i, (code, &alpha))| -> Result<SweepRow> {
            let latent = ctx.output(format!("edits/{i:02}.lat"))?;
            save_latent(&latent, code)?;
            let img = gen.generate(code)?;
            let image = ctx.output(format!(
                "edits/{i:02}.{}",
                args.format.extension(img.channels())
            ))?;
            save_image(&image, &img)?;
            Ok(SweepRow {
                alpha,
                latent,
                image,
                statistic: gen.world().statistic(&img),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(
        &ctx.output("sweep.csv")?,
        &["index", "alpha", "latent", "image", "statistic"],
        rows.iter().enumerate().map(|(i, r)| {
            [
                i.to_string(),
                r.alpha.to_string(),
                ctx.relative(&r.latent),
                ctx.relative(&r.image),
                r.statistic.to_string(),
            ]
        }),
    )?;
    println!("wrote {} edits", rows.len());
    Ok(rows)
}
