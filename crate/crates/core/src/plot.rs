//! CSV emission of curves for external plotting.
//!
//! Rows run over the merged knots of all curves. Where any curve jumps the
//! state is written twice, left limits first, so that plotting the rows in
//! order draws the vertical segment.

use std::io::Write;

use crate::dist::{sort_dedup, Cdf};
use crate::error::{Error, Result};

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Resource(format!("writing CSV failed: {e}"))
}

/// Writes `x` plus one column per named curve. `extra` adds states (such as
/// a plotting grid) to the merged knots.
pub fn write_curves<W: Write>(out: W, curves: &[(&str, &Cdf)], extra: &[f64]) -> Result<()> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invariant("nothing to plot"))?
        .1;
    let domain = first.domain();
    if curves.iter().any(|c| !c.1.domain().same_as(&domain)) {
        return Err(Error::invariant("plotted curves must share a domain"));
    }
    let cdfs: Vec<&Cdf> = curves.iter().map(|c| c.1).collect();
    let mut xs = Cdf::merged_states(&cdfs);
    xs.extend(extra.iter().map(|&x| domain.clamp(x)));
    sort_dedup(&mut xs);

    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string()];
    header.extend(curves.iter().map(|c| c.0.to_string()));
    w.write_record(&header).map_err(csv_error)?;
    for x in xs {
        let jumps = cdfs.iter().any(|c| c.at(x) - c.before(x) > 0.0);
        if jumps {
            let mut row = vec![x.to_string()];
            row.extend(cdfs.iter().map(|c| c.before(x).to_string()));
            w.write_record(&row).map_err(csv_error)?;
        }
        let mut row = vec![x.to_string()];
        row.extend(cdfs.iter().map(|c| c.at(x).to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

/// Writes `(x, y)` rows under the given headers.
pub fn write_pairs<W: Write>(out: W, headers: [&str; 2], rows: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers).map_err(csv_error)?;
    for (x, y) in rows {
        w.write_record([x.to_string(), y.to_string()])
            .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}
