//! Field snapshots: a one-line JSON header followed by little-endian `f64`
//! values in row-major order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub dims: usize,
    pub n: usize,
    pub length: f64,
    pub name: String,
    pub time: f64,
}

pub fn write_snapshot<T: Real, W: Write>(mut w: W, f: &ScalarField<T>, name: &str, time: f64) -> Result<()> {
    let g = f.grid();
    let header = SnapshotHeader {
        dims: g.dim(),
        n: g.n(),
        length: g.length().to_f64_lossy(),
        name: name.to_string(),
        time,
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(8 * f.values().len());
    for v in f.values() {
        buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Reads a snapshot, building a fresh grid from the header.
pub fn read_snapshot<T: Real, R: Read>(r: R) -> Result<(SnapshotHeader, ScalarField<T>)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(Error::Format("missing header line".into()));
    }
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(e.to_string()))?;
    let grid = Grid::new(header.dims, header.n, T::lit(header.length))?;
    let field = read_values(&mut reader, &grid)?;
    Ok((header, field))
}

fn read_values<T: Real, R: Read>(reader: &mut R, grid: &Arc<Grid<T>>) -> Result<ScalarField<T>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} data bytes, found {}",
            8 * grid.len(),
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
        .collect();
    ScalarField::from_vec(grid, data)
}

pub fn save<T: Real>(path: &Path, f: &ScalarField<T>, name: &str, time: f64) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), f, name, time)
}

pub fn load<T: Real>(path: &Path) -> Result<(SnapshotHeader, ScalarField<T>)> {
    read_snapshot(std::fs::File::open(path)?)
}
