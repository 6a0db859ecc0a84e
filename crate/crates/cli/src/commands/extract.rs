use std::path::PathBuf;

use latentshift::directions::{fit_direction, train_logistic, LabeledLatentDataset};
use latentshift::io::{load_latent, save_direction};
use latentshift::{Direction, Latent};

use super::{fmt_opt, write_csv};
use crate::args::ExtractArgs;
use crate::manifest::Manifest;
use crate::{CliError, Context, Result};

#[derive(Debug, Clone)]
pub struct ExtractOutcome {
    pub direction: Direction,
    pub path: PathBuf,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub control_accuracy: Option<f64>,
    pub skipped: usize,
}

/// Writes the DIR1 file and `<name>_accuracy.csv`
/// (`name,train_accuracy,test_accuracy,control_accuracy`).
pub fn extract_direction(ctx: &Context, args: &ExtractArgs) -> Result<ExtractOutcome> {
    let manifest = Manifest::load(&args.manifest)?;
    let mut records = Vec::with_capacity(manifest.entries.len());
    let mut skipped = 0;
    for e in &manifest.entries {
        let loaded = match e.label {
            None => Err("missing label".to_string()),
            Some(label) => load_latent::<f64>(&e.path)
                .map(|w: Latent| (w, label == 1))
                .map_err(|err| format!("{}: {err}", e.path.display())),
        };
        match loaded {
            Ok(r) => records.push(r),
            Err(reason) => {
                skipped += 1;
                eprintln!("skipped {}: {reason}", e.path.display());
            }
        }
    }
    if records.is_empty() {
        return Err(CliError::AllFailed(skipped));
    }
    let ds = LabeledLatentDataset::new(records, ("0".into(), "1".into()))?;
    let mut section = ctx.config.logistic.clone();
    if let Some(e) = args.epochs {
        section.epochs = e;
    }
    let cfg = section.to_config(ctx.seed)?;
    let (direction, fit) = fit_direction(&ds, &cfg, &args.name)?;
    let control_accuracy = if args.control {
        Some(train_logistic(&ds.with_shuffled_labels(ctx.seed)?, &cfg)?.test_accuracy)
    } else {
        None
    };

    let path = match &args.output {
        Some(p) => p.clone(),
        None => ctx.output(format!("{}.dir", args.name))?,
    };
    save_direction(&path, &direction)?;
    write_csv(
        &ctx.output(format!("{}_accuracy.csv", args.name))?,
        &[
            "name",
            "train_accuracy",
            "test_accuracy",
            "control_accuracy",
        ],
        [[
            args.name.clone(),
            fit.train_accuracy.to_string(),
            fit.test_accuracy.to_string(),
            fmt_opt(control_accuracy),
        ]],
    )?;
    println!("train_accuracy {}", fit.train_accuracy);
    println!("test_accuracy {}", fit.test_accuracy);
    if let Some(c) = control_accuracy {
        println!("control_accuracy {c}");
    }
    Ok(ExtractOutcome {
        direction,
        path,
        train_accuracy: fit.train_accuracy,
        test_accuracy: fit.test_accuracy,
        control_accuracy,
        skipped,
    })
}
