//! Plain-text CSV export with '#'-prefixed metadata headers.
//!
//! Every file starts with a header block echoing the physics configuration
//! and the code version. Execution details that may differ between equally
//! valid runs (worker count, paths) are excluded, so re-running the same
//! configuration and master seed produces byte-identical files regardless of
//! scheduling.

use std::io::Write;
use std::path::Path;

use crate::ensemble::{EnsembleStatistics, RetentionPoint};
use crate::error::Result;
use crate::polariton::PolaritonSurfaces;
use crate::units;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_header(w: &mut impl Write, title: &str, echo: &[String]) -> Result<()> {
    writeln!(w, "# tcmol {CODE_VERSION}")?;
    writeln!(w, "# {title}")?;
    for line in echo {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// Per-cell population time series with polaritonic projections, energy and
/// retention.
pub fn write_population_series(
    path: &Path,
    echo: &[String],
    stats: &EnsembleStatistics,
    retention: &[RetentionPoint],
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut f, "population time series", echo)?;
    let mut cols = vec!["time_fs".to_string()];
    for c in &stats.columns {
        cols.push(c.clone());
        cols.push(format!("err_{c}"));
    }
    cols.push("retention".into());
    cols.push("err_retention".into());
    writeln!(f, "{}", cols.join(","))?;
    for (i, t) in stats.sample_times.iter().enumerate() {
        let mut row = vec![fmt(units::au_to_fs(*t))];
        for c in 0..stats.columns.len() {
            row.push(fmt(stats.mean[i][c]));
            row.push(fmt(stats.stderr[i][c]));
        }
        row.push(fmt(retention[i].retention));
        row.push(fmt(retention[i].stderr));
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

/// Master retention table: one row per gamma, one column pair per N.
/// Failed cells appear as "nan".
pub fn write_retention_table(
    path: &Path,
    echo: &[String],
    gamma_values: &[f64],
    n_values: &[usize],
    cells: &dyn Fn(usize, f64) -> Option<(f64, f64)>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut f, "energy retention at t_final vs dephasing rate", echo)?;
    let mut cols = vec!["gamma_per_fs".to_string()];
    for n in n_values {
        cols.push(format!("ret_N{n}"));
        cols.push(format!("err_N{n}"));
    }
    writeln!(f, "{}", cols.join(","))?;
    for &g in gamma_values {
        let mut row = vec![fmt(g)];
        for &n in n_values {
            match cells(n, g) {
                Some((r, e)) => {
                    row.push(fmt(r));
                    row.push(fmt(e));
                }
                None => {
                    row.push("nan".into());
                    row.push("nan".into());
                }
            }
        }
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

/// Tracked polaritonic surfaces vs internuclear distance, in eV, with the
/// degenerate dark manifold as one row plus its multiplicity.
pub fn write_surfaces(path: &Path, echo: &[String], s: &PolaritonSurfaces) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut f, "tracked polaritonic potential surfaces", echo)?;
    let mut cols = vec!["q_angstrom".to_string(), "v_ground_ev".to_string()];
    for label in &s.labels {
        cols.push(format!("v_{}_ev", label.column_name()));
    }
    cols.push("v_dark_ev".into());
    cols.push("dark_multiplicity".into());
    writeln!(f, "{}", cols.join(","))?;
    for (j, q) in s.grid.points_angstrom().enumerate() {
        let mut row = vec![fmt(q), fmt(units::hartree_to_ev(s.ground_energy[j]))];
        for slot in 0..s.n_bright {
            row.push(fmt(units::hartree_to_ev(s.energies[j][slot])));
        }
        row.push(fmt(units::hartree_to_ev(s.dark_energy[j])));
        row.push(format!("{}", s.dark_multiplicity));
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}
