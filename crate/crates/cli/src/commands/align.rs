use std::path::PathBuf;

use latentshift::geometry::{
    align_face, alignment_transform, eye_centers, rotation_angle, select_primary_face,
};
use latentshift::io::{load_image, save_image};
use latentshift::Image;
use rayon::prelude::*;

use super::{fmt_opt, image_extension, write_csv};
use crate::args::AlignArgs;
use crate::manifest::{Entry, Manifest};
use crate::{Context, Result, Tally};

#[derive(Debug, Clone, PartialEq)]
pub struct AlignRow {
    pub path: PathBuf,
    /// Eye-line angle of the input, degrees.
    pub input_angle: Option<f64>,
    /// Eye-line angle after alignment, degrees.
    pub output_angle: Option<f64>,
    pub output: Option<PathBuf>,
    pub outcome: std::result::Result<(), String>,
}

/// Writes `aligned/<index>_<stem>.<ext>` per entry and `align_report.csv`
/// (`index,path,status,input_angle,output_angle,output`).
pub fn align(ctx: &Context, args: &AlignArgs) -> Result<(Vec<AlignRow>, Tally)> {
    let manifest = Manifest::load(&args.manifest)?;
    let mut section = ctx.config.align.clone();
    if let Some(s) = args.size {
        section.out_size = s;
    }
    if let Some(p) = args.pad {
        section.pad = p;
    }
    let cfg = section.to_config()?;
    let rows: Vec<AlignRow> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut row = AlignRow {
                path: e.path.clone(),
                input_angle: None,
                output_angle: None,
                output: None,
                outcome: Ok(()),
            };
            if let Err(reason) = align_entry(ctx, &cfg, i, e, &mut row) {
                row.outcome = Err(reason);
            }
            row
        })
        .collect();

    let mut tally = Tally::default();
    for (i, r) in rows.iter().enumerate() {
        tally.record(&r.outcome);
        if let Err(reason) = &r.outcome {
            eprintln!("skipped entry {i} ({}): {reason}", r.path.display());
        }
    }
    write_csv(
        &ctx.output("align_report.csv")?,
        &[
            "index",
            "path",
            "status",
            "input_angle",
            "output_angle",
            "output",
        ],
        rows.iter().enumerate().map(|(i, r)| {
            [
                i.to_string(),
                r.path.display().to_string(),
                super::status(&r.outcome),
                fmt_opt(r.input_angle),
                fmt_opt(r.output_angle),
                r.output
                    .as_ref()
                    .map(|p| ctx.relative(p))
                    .unwrap_or_default(),
            ]
        }),
    )?;
    println!(
        "aligned {} of {}, skipped {}",
        tally.ok,
        rows.len(),
        tally.failed
    );
    Ok((rows, tally.finish()?))
}

fn align_entry(
    ctx: &Context,
    cfg: &latentshift::geometry::AlignConfig<f64>,
    index: usize,
    e: &Entry,
    row: &mut AlignRow,
) -> std::result::Result<(), String> {
    let boxes = e.bounding_boxes().map_err(|err| err.to_string())?;
    if boxes.is_empty() {
        return Err("no faces detected".into());
    }
    let primary = select_primary_face(&boxes).map_err(|err| err.to_string())?;
    let lm = e
        .landmark_set()
        .map_err(|err| err.to_string())?
        .ok_or_else(|| "no landmarks".to_string())?;
    let img: Image = load_image(&e.path).map_err(|err| format!("{}: {err}", e.path.display()))?;
    let aligned = align_face(&img, &primary, &lm, cfg).map_err(|err| err.to_string())?;

    let (l, r) = eye_centers(&lm).map_err(|err| err.to_string())?;
    row.input_angle = rotation_angle(l, r).ok();
    let t = alignment_transform(&lm, cfg).map_err(|err| err.to_string())?;
    let (l, r) = eye_centers(&lm.map(&t)).map_err(|err| err.to_string())?;
    row.output_angle = rotation_angle(l, r).ok();

    let rel = format!(
        "aligned/{index:04}_{}.{}",
        e.stem(),
        image_extension(&e.path)
    );
    let out = ctx.output(&rel).map_err(|err| err.to_string())?;
    save_image(&out, &aligned).map_err(|err| err.to_string())?;
    row.output = Some(out);
    Ok(())
}
