//! CSV emission for sinograms, Wigner grids and density matrices, and the
//! wavefunction file loader.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Result, TomoError};
use crate::grid::Grid1D;
use crate::states::{SystemState, WignerGrid};
use crate::tomography::{DensityMatrixGrid, Sinogram};

/// Largest norm deviation silently absorbed by renormalization.
pub const RENORMALIZATION_SLACK: f64 = 1e-3;

/// Relative tolerance on sample spacing for a grid to count as uniform.
const UNIFORM_TOLERANCE: f64 = 1e-6;

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV with the given header, one row per inner vector.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sinogram<W: Write>(out: W, sino: &Sinogram) -> Result<()> {
    let ug = *sino.ugrid();
    let rows = sino
        .angles()
        .iter()
        .enumerate()
        .flat_map(move |(j, a)| ug.points().enumerate().map(move |(i, u)| (j, a.radians(), i, u)).collect::<Vec<_>>())
        .map(|(j, theta, i, u)| vec![theta, u, sino.values()[[j, i]]]);
    write_table(out, &["theta", "u", "value"], rows)
}

pub fn write_wigner<W: Write>(out: W, w: &WignerGrid) -> Result<()> {
    let rows = w
        .qgrid
        .points()
        .enumerate()
        .flat_map(|(i, q)| w.pgrid.points().enumerate().map(move |(j, p)| vec![q, p, w.values[[i, j]]]).collect::<Vec<_>>());
    write_table(out, &["q", "p", "value"], rows)
}

pub fn write_density_matrix<W: Write>(out: W, rho: &DensityMatrixGrid) -> Result<()> {
    let g = rho.qgrid;
    let rows = g.points().enumerate().flat_map(|(i, q)| {
        g.points()
            .enumerate()
            .map(|(j, qp)| {
                let v = rho.values[[i, j]];
                vec![q, qp, v.re, v.im]
            })
            .collect::<Vec<_>>()
    });
    write_table(out, &["q", "qprime", "re", "im"], rows)
}

/// Opens `path` for writing behind a buffer.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| TomoError::Io(format!("{}: {e}", path.display())))
}

/// Reads a `q,re,im` CSV (header optional) sampled on a uniform grid.
///
/// The state is renormalized when its norm is within
/// [`RENORMALIZATION_SLACK`] of one and rejected otherwise.
pub fn load_wavefunction_file(path: &Path) -> Result<SystemState> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| TomoError::Io(format!("{}: {e}", path.display())))?;
    parse_wavefunction(&text)
}

pub fn parse_wavefunction(text: &str) -> Result<SystemState> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let mut qs = Vec::new();
    let mut amps = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 3 {
            return Err(TomoError::MalformedFile(format!("record {} has {} fields, expected q,re,im", line + 1, record.len())));
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                qs.push(v[0]);
                amps.push(Complex64::new(v[1], v[2]));
            }
            Ok(_) => return Err(TomoError::MalformedFile(format!("record {} has a non-finite value", line + 1))),
            // A non-numeric first record is a header.
            Err(_) if line == 0 => {}
            Err(e) => return Err(TomoError::MalformedFile(format!("record {}: {e}", line + 1))),
        }
    }
    if qs.len() < 2 {
        return Err(TomoError::MalformedFile(format!("{} samples; at least 2 are needed", qs.len())));
    }
    let n = qs.len();
    let h = (qs[n - 1] - qs[0]) / (n - 1) as f64;
    if !(h > 0.0) {
        return Err(TomoError::NonUniformGrid("q must increase".into()));
    }
    if let Some(i) = (0..n).find(|&i| (qs[i] - (qs[0] + i as f64 * h)).abs() > UNIFORM_TOLERANCE * h) {
        return Err(TomoError::NonUniformGrid(format!("sample {i} at q = {} is off the grid of step {h}", qs[i])));
    }
    let grid = Grid1D::new(qs[0], qs[n - 1], n)?;
    let norm: f64 = amps.iter().enumerate().map(|(i, a)| a.norm_sqr() * grid.weight(i)).sum();
    if !((norm - 1.0).abs() < RENORMALIZATION_SLACK) {
        return Err(TomoError::NormOutOfRange { norm });
    }
    SystemState::normalized(grid, amps)
}
