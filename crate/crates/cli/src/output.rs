//! CSV writers. Floats carry 17 significant digits so files round-trip.

use std::path::Path;

use maxagg::boxmodel::{BoxState, SeriesRow};

use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series(path: &Path, rows: &[SeriesRow]) -> Result<(), CliError> {
    write_table(
        path,
        &["step", "t", "N", "mass", "birth"],
        rows.iter()
            .map(|r| vec![r.step.to_string(), num(r.t), num(r.n), num(r.mass), num(r.birth)]),
    )
}

/// Cells of one state with their rescaled coordinates `(x/t, t² G)`.
pub fn write_snapshot(path: &Path, state: &BoxState) -> Result<(), CliError> {
    let (eps, t) = (state.eps(), state.time());
    write_table(
        path,
        &["i", "x", "G", "rescaled_y", "rescaled_G"],
        state.cells().iter().enumerate().map(|(i, g)| {
            let x = eps * (i as f64 + 0.5);
            vec![(i + 1).to_string(), num(x), num(*g), num(x / t), num(t * t * g)]
        }),
    )
}

pub fn write_profile(path: &Path, ys: &[f64], g: &[f64]) -> Result<(), CliError> {
    write_table(path, &["y", "G"], ys.iter().zip(g).map(|(y, g)| vec![num(*y), num(*g)]))
}

/// Reads a `y,G` profile as written by [`write_profile`].
pub fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read profile {}: {e}", path.display())))?;
    let mut ys = Vec::new();
    let mut gs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64, CliError> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("bad row in {}: {rec:?}", path.display())))
        };
        ys.push(field(0)?);
        gs.push(field(1)?);
    }
    Ok((ys, gs))
}
