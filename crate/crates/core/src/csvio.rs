//! CSV input and output.
//!
//! Every file starts with the full run configuration as `# key = value`
//! lines, then a header row, then data. Numbers are written with 17
//! significant digits so that reading a file back reproduces the exact
//! binary values; runs with identical inputs produce byte-identical files.
//! Separator is a comma, decimal point is `.`, line ending is LF.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::Density;
use crate::observations::ObservationSeries;
use crate::scenario::ComparisonReport;

/// 17 significant digits: enough to round-trip any f64.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_preamble(w: &mut impl Write, cfg: &RunConfig, header: &str) -> Result<()> {
    for line in cfg.metadata_lines() {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "{header}")?;
    Ok(())
}

/// Splits a file into metadata lines and parsed data rows, checking the
/// header and the column count. The configuration is `None` when the file
/// carries no `# key = value` lines at all (externally produced data).
fn read_rows(path: &Path, header: &str) -> Result<(Option<RunConfig>, Vec<Vec<f64>>)> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let n_cols = header.split(',').count();
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let context = || format!("{} line {}", path.display(), lineno + 1);
        if line.starts_with('#') {
            meta.push(line);
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line.trim() != header {
                return Err(Error::Config(format!(
                    "{}: expected header '{header}', got '{line}'",
                    context()
                )));
            }
            saw_header = true;
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("{}: '{s}' is not a number", context())))
            })
            .collect::<Result<_>>()?;
        if row.len() != n_cols {
            return Err(Error::Config(format!(
                "{}: expected {n_cols} columns, got {}",
                context(),
                row.len()
            )));
        }
        rows.push(row);
    }
    if !saw_header {
        return Err(Error::Config(format!(
            "{}: missing header '{header}'",
            path.display()
        )));
    }
    let has_pairs = meta.iter().any(|l| l.contains('='));
    let cfg = if has_pairs {
        Some(RunConfig::from_metadata(meta.iter().map(String::as_str))?)
    } else {
        None
    };
    Ok((cfg, rows))
}

/// Observation times are the interval endpoints `(i+1) * eps`.
pub fn write_observations(path: &Path, cfg: &RunConfig, obs: &ObservationSeries) -> Result<()> {
    let mut w = open_writer(path)?;
    write_preamble(&mut w, cfg, "t,x")?;
    for (i, &x) in obs.values().iter().enumerate() {
        writeln!(w, "{},{}", fmt((i + 1) as f64 * obs.eps()), fmt(x))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads observations back, inferring `eps` from the first time stamp and
/// insisting on uniform spacing. A file with a header but no rows is a
/// legitimate zero-evidence series; its `eps` comes from the metadata.
pub fn read_observations(path: &Path) -> Result<(ObservationSeries, Option<RunConfig>)> {
    let (cfg, rows) = read_rows(path, "t,x")?;
    if rows.is_empty() {
        let eps = cfg
            .as_ref()
            .map(|c| c.eps)
            .ok_or_else(|| {
                Error::Config(format!(
                    "{}: empty observation file without metadata to infer eps from",
                    path.display()
                ))
            })?;
        return Ok((ObservationSeries::new(eps, Vec::new())?, cfg));
    }
    let eps = rows[0][0];
    if !(eps > 0.0) {
        return Err(Error::Config(format!(
            "{}: first observation time {eps} must be positive",
            path.display()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        let expected = (i + 1) as f64 * eps;
        if (row[0] - expected).abs() > 1e-9 * expected.max(eps) {
            return Err(Error::Config(format!(
                "{}: observation times are not uniform at row {} ({} vs {})",
                path.display(),
                i + 1,
                row[0],
                expected
            )));
        }
    }
    let values: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    Ok((ObservationSeries::new(eps, values)?, cfg))
}

/// Latent states at `t = 0, eps, ..., N eps`.
pub fn write_latent(path: &Path, cfg: &RunConfig, states: &[f64], eps: f64) -> Result<()> {
    let mut w = open_writer(path)?;
    write_preamble(&mut w, cfg, "t,q")?;
    for (i, &q) in states.iter().enumerate() {
        writeln!(w, "{},{}", fmt(i as f64 * eps), fmt(q))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_posterior(path: &Path, cfg: &RunConfig, density: &Density) -> Result<()> {
    let mut w = open_writer(path)?;
    write_preamble(&mut w, cfg, "q,p")?;
    for (q, p) in density.grid().points().zip(density.values()) {
        writeln!(w, "{},{}", fmt(q), fmt(*p))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a posterior back onto the grid recorded in its metadata.
pub fn read_posterior(path: &Path) -> Result<(Density, RunConfig)> {
    let (cfg, rows) = read_rows(path, "q,p")?;
    let cfg = cfg.ok_or_else(|| {
        Error::Config(format!(
            "{}: posterior files need their configuration metadata",
            path.display()
        ))
    })?;
    let grid = cfg.grid()?;
    if rows.len() != grid.n_points() {
        return Err(Error::Config(format!(
            "{}: {} rows but the configured grid has {} points",
            path.display(),
            rows.len(),
            grid.n_points()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if (row[0] - grid.point(i)).abs() > 1e-9 * (1.0 + grid.point(i).abs()) {
            return Err(Error::Config(format!(
                "{}: grid point {} disagrees with the metadata grid",
                path.display(),
                i
            )));
        }
    }
    let values: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    Ok((Density::new(grid, values)?, cfg))
}

/// Intermediate posteriors, one block of grid rows per snapshot time.
pub fn write_snapshots(path: &Path, cfg: &RunConfig, snaps: &[(f64, Density)]) -> Result<()> {
    let mut w = open_writer(path)?;
    write_preamble(&mut w, cfg, "t,q,p")?;
    for (t, density) in snaps {
        for (q, p) in density.grid().points().zip(density.values()) {
            writeln!(w, "{},{},{}", fmt(*t), fmt(q), fmt(*p))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per successful backend pair with both backends' summary stats.
pub fn write_comparison(path: &Path, cfg: &RunConfig, report: &ComparisonReport) -> Result<()> {
    let mut w = open_writer(path)?;
    write_preamble(
        &mut w,
        cfg,
        "backend_a,backend_b,l1,mean_a,var_a,mean_b,var_b,seconds_a,seconds_b",
    )?;
    for &(a, b, l1) in &report.pairs {
        let ra = report.get(a).expect("pair backed by a successful run");
        let rb = report.get(b).expect("pair backed by a successful run");
        writeln!(
            w,
            "{a},{b},{},{},{},{},{},{},{}",
            fmt(l1),
            fmt(ra.mean),
            fmt(ra.variance),
            fmt(rb.mean),
            fmt(rb.variance),
            fmt(ra.seconds),
            fmt(rb.seconds)
        )?;
    }
    w.flush()?;
    Ok(())
}
