use latentshift::generator::{FeatureExtractor, PatchFeatures, ProjectionEmbedder};
use latentshift::io::load_image;
use latentshift::metrics::{evaluate_pair, fit_gaussian, frechet_distance, identity_distance};
use latentshift::{Error, Image};
use rayon::prelude::*;

use super::{fmt_opt, write_csv};
use crate::args::EvaluateArgs;
use crate::manifest::{Entry, Manifest};
use crate::{Context, Result, Tally};

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub pair_id: String,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub perceptual: Option<f64>,
    /// Absent when disabled or when an embedding has zero norm.
    pub identity: Option<f64>,
    pub outcome: std::result::Result<(), String>,
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub pairs: Vec<PairRow>,
    pub frechet: Option<f64>,
    pub tally: Tally,
}

type FeaturePair = (Vec<f64>, Vec<f64>);

/// Writes `metrics.csv` (`pair_id,psnr,ssim,perceptual,identity,status`;
/// identical images give `psnr` = `inf`) and `frechet.csv` (`set,frechet`),
/// the Fréchet distance between the patch features of all references and
/// all candidates.
pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<EvaluateOutcome> {
    let manifest = Manifest::load(&args.manifest)?;
    let ext = PatchFeatures::new(args.grid);
    let results: Vec<(PairRow, Option<FeaturePair>)> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut row = PairRow {
                pair_id: e.id.clone().unwrap_or_else(|| i.to_string()),
                psnr: None,
                ssim: None,
                perceptual: None,
                identity: None,
                outcome: Ok(()),
            };
            let feats = match evaluate_entry(ctx, args, &ext, e, &mut row) {
                Ok(f) => Some(f),
                Err(reason) => {
                    row.outcome = Err(reason);
                    None
                }
            };
            (row, feats)
        })
        .collect();

    let mut tally = Tally::default();
    let (mut refs, mut cands) = (Vec::new(), Vec::new());
    let mut pairs = Vec::with_capacity(results.len());
    for (row, feats) in results {
        tally.record(&row.outcome);
        if let Err(reason) = &row.outcome {
            eprintln!("pair {} failed: {reason}", row.pair_id);
        }
        if let Some((a, b)) = feats {
            refs.push(a);
            cands.push(b);
        }
        pairs.push(row);
    }
    write_csv(
        &ctx.output("metrics.csv")?,
        &[
            "pair_id",
            "psnr",
            "ssim",
            "perceptual",
            "identity",
            "status",
        ],
        pairs.iter().map(|r| {
            [
                r.pair_id.clone(),
                fmt_opt(r.psnr),
                fmt_opt(r.ssim),
                fmt_opt(r.perceptual),
                fmt_opt(r.identity),
                super::status(&r.outcome),
            ]
        }),
    )?;

    let frechet = match set_frechet(&refs, &cands) {
        Ok(f) => Some(f),
        Err(e) => {
            eprintln!("frechet distance unavailable: {e}");
            None
        }
    };
    write_csv(
        &ctx.output("frechet.csv")?,
        &["set", "frechet"],
        [["all".to_string(), fmt_opt(frechet)]],
    )?;
    println!("evaluated {} of {} pairs", tally.ok, pairs.len());
    Ok(EvaluateOutcome {
        pairs,
        frechet,
        tally: tally.finish()?,
    })
}

fn set_frechet(refs: &[Vec<f64>], cands: &[Vec<f64>]) -> latentshift::Result<f64> {
    frechet_distance(&fit_gaussian(refs)?, &fit_gaussian(cands)?)
}

fn evaluate_entry(
    ctx: &Context,
    args: &EvaluateArgs,
    ext: &PatchFeatures,
    e: &Entry,
    row: &mut PairRow,
) -> std::result::Result<(Vec<f64>, Vec<f64>), String> {
    let s = |err: Error| err.to_string();
    let cand_path = e
        .candidate
        .as_ref()
        .ok_or_else(|| "missing candidate".to_string())?;
    let load =
        |p: &std::path::Path| load_image::<f64>(p).map_err(|err| format!("{}: {err}", p.display()));
    let a: Image = load(&e.path)?;
    let b: Image = load(cand_path)?;
    let report = evaluate_pair(&a, &b, ext, None).map_err(s)?;
    row.psnr = Some(report.psnr_db);
    row.ssim = Some(report.ssim);
    row.perceptual = Some(report.perceptual);
    if args.identity_dim > 0 {
        let emb = ProjectionEmbedder::<f64>::new(
            ctx.seed,
            args.identity_grid,
            a.channels(),
            args.identity_dim,
        )
        .map_err(s)?;
        row.identity = match identity_distance(&emb, &a, &b) {
            Ok(v) => Some(v),
            Err(Error::ZeroEmbedding) => None,
            Err(err) => return Err(err.to_string()),
        };
    }
    Ok((ext.extract(&a).map_err(s)?, ext.extract(&b).map_err(s)?))
}
