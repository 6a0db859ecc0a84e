use latentshift::directions::{correlation_matrix, project_subtract};
use latentshift::io::{load_direction, save_direction};
use latentshift::Direction;

use super::write_csv;
use crate::args::CorrelateArgs;
use crate::{CliError, Context, Result};

#[derive(Debug, Clone)]
pub struct CorrelateOutcome {
    pub matrix: Vec<Vec<f64>>,
    pub orthogonalized: Option<Direction>,
    /// Largest `|<a', x>|` over the other directions.
    pub max_residual: Option<f64>,
}

/// Writes `correlation.csv`: a header `direction,<name>...` then one row per
/// direction.
pub fn correlate(ctx: &Context, args: &CorrelateArgs) -> Result<CorrelateOutcome> {
    if args.directions.len() < 2 {
        return Err(CliError::Usage(
            "correlate needs at least two direction files".into(),
        ));
    }
    let dirs = args
        .directions
        .iter()
        .map(|p| load_direction::<f64>(p))
        .collect::<latentshift::Result<Vec<Direction>>>()?;
    let matrix = correlation_matrix(&dirs)?;
    let mut header = vec!["direction"];
    header.extend(dirs.iter().map(|d| d.name.as_str()));
    write_csv(
        &ctx.output("correlation.csv")?,
        &header,
        dirs.iter().zip(&matrix).map(|(d, row)| {
            std::iter::once(d.name.clone())
                .chain(row.iter().map(|v| v.to_string()))
                .collect::<Vec<_>>()
        }),
    )?;

    let (mut orthogonalized, mut max_residual) = (None, None);
    if let Some(path) = &args.orthogonalize {
        let a = project_subtract(&dirs[0], &dirs[1..], args.iterate)?;
        let mut worst = 0.0f64;
        for x in &dirs[1..] {
            worst = worst.max(a.vector().dot(x.vector())?.abs());
        }
        save_direction(path, &a)?;
        println!("max |<a', x>| = {worst:e}");
        orthogonalized = Some(a);
        max_residual = Some(worst);
    }
    Ok(CorrelateOutcome {
        matrix,
        orthogonalized,
        max_residual,
    })
}
