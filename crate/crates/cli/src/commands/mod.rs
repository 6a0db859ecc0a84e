//! One function per CLI verb. Batch verbs record per-entry failures in their
//! report and only fail as a whole when no entry succeeds.

mod align;
mod correlate;
mod edit;
mod embed;
mod evaluate;
mod extract;

pub use align::{align, AlignRow};
pub use correlate::{correlate, CorrelateOutcome};
pub use edit::{edit, SweepRow};
pub use embed::{embed, EmbedRow};
pub use evaluate::{evaluate, EvaluateOutcome, PairRow};
pub use extract::{extract_direction, ExtractOutcome};

use std::path::Path;

use crate::error::Result;

pub(crate) fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| crate::CliError::io(path, e))?;
    Ok(())
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// The file's extension if it is an 8-bit format, otherwise `imf`.
pub(crate) fn image_extension(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => "ppm",
        Some("pgm") => "pgm",
        _ => "imf",
    }
}

pub(crate) fn status(r: &std::result::Result<(), String>) -> String {
    match r {
        Ok(()) => "ok".into(),
        Err(e) => e.clone(),
    }
}
