//! CSV, JSON and binary-grid writers. The binary layout is described in `docs/grid-format.md`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bands::BandSample;
use crate::dirac::Grid;
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 8] = b"HCDGRID1";
pub const GRID_HEADER_LEN: usize = 64;

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Band samples as `alpha_x, alpha_y, omega1, omega2`.
pub fn write_bands_csv(path: &Path, samples: &[BandSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["alpha_x (1/length)", "alpha_y (1/length)", "omega1 (1/time)", "omega2 (1/time)"])
        .map_err(csv_error)?;
    for s in samples {
        w.write_record(&[
            format!("{:.17e}", s.alpha[0]),
            format!("{:.17e}", s.alpha[1]),
            format!("{:.17e}", s.omega1),
            format!("{:.17e}", s.omega2),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Complex components on a grid as `x, y, re_<name>, im_<name>, ...`.
pub fn write_grid_csv(path: &Path, grid: &Grid, names: &[&str], comps: &[&[C64]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = vec!["x (length)".to_string(), "y (length)".to_string()];
    for n in names {
        header.push(format!("re_{n} (arb)"));
        header.push(format!("im_{n} (arb)"));
    }
    w.write_record(&header).map_err(csv_error)?;
    for idx in 0..grid.len() {
        let p = grid.point(idx);
        let mut rec = vec![format!("{:.17e}", p[0]), format!("{:.17e}", p[1])];
        for c in comps {
            rec.push(format!("{:.17e}", c[idx].re));
            rec.push(format!("{:.17e}", c[idx].im));
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Binary grid: 64-byte header then, per component, `nx·ny` little-endian `(re, im)` pairs
/// in x-major order.
pub fn write_grid_binary(path: &Path, grid: &Grid, time: f64, comps: &[&[C64]]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let h = grid.spacing();
    let origin = grid.point(0);
    let n = grid.n as u32;
    w.write_all(GRID_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    for v in [h, h, time, origin[0], origin[1]] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(comps.len() as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for c in comps {
        for v in c.iter() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub nx: u32,
    pub ny: u32,
    pub dx: f64,
    pub dy: f64,
    pub time: f64,
    pub origin: [f64; 2],
    pub components: Vec<Vec<C64>>,
}

pub fn read_grid_binary(path: &Path) -> Result<GridFile> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::Io(format!("{}: {m}", path.display()));
    if bytes.len() < GRID_HEADER_LEN || &bytes[..8] != GRID_MAGIC {
        return Err(bad("not a grid file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nx, ny, ncomp) = (u32_at(8), u32_at(12), u32_at(56));
    let count = nx as usize * ny as usize;
    if bytes.len() != GRID_HEADER_LEN + 16 * count * ncomp as usize {
        return Err(bad("payload length does not match the header"));
    }
    let components = (0..ncomp as usize)
        .map(|k| {
            (0..count)
                .map(|i| {
                    let o = GRID_HEADER_LEN + 16 * (k * count + i);
                    C64::new(f64_at(o), f64_at(o + 8))
                })
                .collect()
        })
        .collect();
    Ok(GridFile {
        nx,
        ny,
        dx: f64_at(16),
        dy: f64_at(24),
        time: f64_at(32),
        origin: [f64_at(40), f64_at(48)],
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_grid_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.hcd");
        let grid = Grid::new(4, 2.0).unwrap();
        let a: Vec<C64> = (0..16).map(|i| C64::new(i as f64, -0.5 * i as f64)).collect();
        let b: Vec<C64> = a.iter().map(|v| v.conj()).collect();
        write_grid_binary(&path, &grid, 1.5, &[&a, &b]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 64 + 2 * 16 * 16);
        let g = read_grid_binary(&path).unwrap();
        assert_eq!((g.nx, g.ny, g.dx, g.time), (4, 4, 0.5, 1.5));
        assert_eq!(g.origin, [-1.0, -1.0]);
        assert_eq!(g.components, vec![a, b]);
        std::fs::write(&path, &bytes[..70]).unwrap();
        assert!(read_grid_binary(&path).is_err());
    }

    #[test]
    fn csv_has_header_with_units() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        let s = BandSample { alpha: [0.1, 0.2], omega1: 1.0, omega2: 2.0, delta: 1e-3 };
        write_bands_csv(&path, &[s]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("alpha_x (1/length),alpha_y (1/length),omega1"));
        assert_eq!(text.lines().count(), 2);
    }
}
