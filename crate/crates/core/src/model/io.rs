//! Configuration files: CSV (`x,y,theta`) and the `ODO1` binary snapshot
//! (magic, little-endian u32 side length, then L² little-endian f64 angles
//! in row-major order).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{LatticeTorus, SpinConfiguration};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ODO1";

pub fn snapshot_to_bytes(config: &SpinConfiguration) -> Vec<u8> {
    let l = config.torus().side();
    let mut out = Vec::with_capacity(8 + 8 * l * l);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(l as u32).to_le_bytes());
    for a in config.to_row_major() {
        out.extend_from_slice(&a.to_le_bytes());
    }
    out
}

pub fn snapshot_from_bytes(bytes: &[u8], origin: &Path) -> Result<SpinConfiguration> {
    let bad = |reason: String| Error::Format {
        path: origin.to_path_buf(),
        reason,
    };
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(bad("missing ODO1 header".into()));
    }
    let l = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let torus = LatticeTorus::new(l).map_err(|e| bad(e.to_string()))?;
    let body = &bytes[8..];
    if body.len() != 8 * l * l {
        return Err(bad(format!("expected {} angle bytes for L = {l}, found {}", 8 * l * l, body.len())));
    }
    let angles: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
        return Err(bad(format!("non-finite angle {a}")));
    }
    SpinConfiguration::from_row_major(torus, &angles)
}

pub fn write_snapshot(config: &SpinConfiguration, path: &Path) -> Result<()> {
    fs::write(path, snapshot_to_bytes(config)).map_err(|e| Error::io("writing snapshot", path, e))
}

pub fn read_snapshot(path: &Path) -> Result<SpinConfiguration> {
    let bytes = fs::read(path).map_err(|e| Error::io("reading snapshot", path, e))?;
    snapshot_from_bytes(&bytes, path)
}

pub fn write_csv(config: &SpinConfiguration, path: &Path) -> Result<()> {
    let mut out = String::from("x,y,theta\n");
    for (x, y) in config.torus().row_major() {
        out.push_str(&format!("{x},{y},{:e}\n", config.angle(x, y)));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io("creating configuration CSV", path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io("writing configuration CSV", path, e))
}

pub fn read_csv(path: &Path) -> Result<SpinConfiguration> {
    let text = fs::read_to_string(path).map_err(|e| Error::io("reading configuration CSV", path, e))?;
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,y,theta") {
        return Err(bad("expected header x,y,theta".into()));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [x, y, t] => x.parse::<usize>().ok().zip(y.parse::<usize>().ok()).zip(t.parse::<f64>().ok()),
            _ => None,
        };
        let ((x, y), t) = parsed.ok_or_else(|| bad(format!("line {}: expected x,y,theta", n + 2)))?;
        rows.push((x, y, t));
    }
    let l = (rows.len() as f64).sqrt().round() as usize;
    if l * l != rows.len() {
        return Err(bad(format!("{} rows is not a square lattice", rows.len())));
    }
    let torus = LatticeTorus::new(l).map_err(|e| bad(e.to_string()))?;
    let mut angles = vec![f64::NAN; l * l];
    for (x, y, t) in rows {
        if x >= l || y >= l || !angles[y * l + x].is_nan() {
            return Err(bad(format!("site ({x}, {y}) out of range or repeated")));
        }
        angles[y * l + x] = t;
    }
    SpinConfiguration::from_row_major(torus, &angles)
}
