//! Snapshot files: binary PGM for n = 2, a packed bitfield for n = 3.
//!
//! The n = 3 header is 32 bytes: the magic `CAPFLOW3`, u32 n, three u32 cell
//! counts and the f64 cell size, all little-endian. Cells follow in index
//! order, one bit each, least significant bit first.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use bitvec::prelude::*;

use crate::error::{Error, Result};

use super::{BinarySet, GridDomain};

const MAGIC: &[u8; 8] = b"CAPFLOW3";

pub fn write_snapshot(e: &BinarySet, path: &Path) -> Result<()> {
    let grid = e.grid();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    if grid.dim() == 2 {
        let (nx, ny) = (grid.counts()[0], grid.counts()[1]);
        write!(out, "P5\n{nx} {ny}\n255\n")?;
        let mut row = vec![0u8; nx];
        // Top row first, as image viewers expect.
        for j in (0..ny).rev() {
            for (i, px) in row.iter_mut().enumerate() {
                *px = if e.get(j * nx + i) { 255 } else { 0 };
            }
            out.write_all(&row)?;
        }
    } else {
        out.write_all(MAGIC)?;
        out.write_all(&3u32.to_le_bytes())?;
        for c in grid.counts() {
            out.write_all(&(*c as u32).to_le_bytes())?;
        }
        out.write_all(&grid.h().to_le_bytes())?;
        let mut bytes: BitVec<u8, Lsb0> = BitVec::with_capacity(grid.len());
        bytes.extend(e.bits().iter().by_vals());
        bytes.set_uninitialized(false);
        out.write_all(bytes.as_raw_slice())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a snapshot written for `grid`; the stored shape must match.
pub fn read_snapshot(path: &Path, grid: &Arc<GridDomain>) -> Result<BinarySet> {
    let data = std::fs::read(path)?;
    let bad = |msg: &str| Error::Format { path: path.to_path_buf(), msg: msg.to_string() };
    if grid.dim() == 2 {
        let (header, body) = parse_pgm_header(&data).ok_or_else(|| bad("not a binary PGM (P5) file"))?;
        let (nx, ny) = (grid.counts()[0], grid.counts()[1]);
        if header != (nx, ny) {
            return Err(Error::GridMismatch(format!(
                "snapshot is {}×{}, grid is {nx}×{ny}",
                header.0, header.1
            )));
        }
        if body.len() < nx * ny {
            return Err(bad("truncated pixel data"));
        }
        let mut e = BinarySet::empty(grid);
        for j in 0..ny {
            let src = &body[(ny - 1 - j) * nx..(ny - j) * nx];
            for (i, px) in src.iter().enumerate() {
                if *px >= 128 {
                    e.set(j * nx + i, true);
                }
            }
        }
        Ok(e)
    } else {
        if data.len() < 32 || &data[..8] != MAGIC {
            return Err(bad("missing CAPFLOW3 header"));
        }
        let u = |o: usize| u32::from_le_bytes(data[o..o + 4].try_into().unwrap()) as usize;
        if u(8) != 3 {
            return Err(bad("header dimension is not 3"));
        }
        let counts = [u(12), u(16), u(20)];
        if counts != grid.counts() {
            return Err(Error::GridMismatch(format!("snapshot counts {counts:?} differ from the grid")));
        }
        let h = f64::from_le_bytes(data[24..32].try_into().unwrap());
        if (h - grid.h()).abs() > 1e-12 * grid.h() {
            return Err(Error::GridMismatch(format!("snapshot cell size {h} differs from {}", grid.h())));
        }
        let body = &data[32..];
        if body.len() * 8 < grid.len() {
            return Err(bad("truncated bitfield"));
        }
        let bits = BitSlice::<u8, Lsb0>::from_slice(body);
        let mut cells: BitVec<u64, Lsb0> = BitVec::with_capacity(grid.len());
        cells.extend(bits[..grid.len()].iter().by_vals());
        BinarySet::from_bits(grid, cells)
    }
}

fn parse_pgm_header(data: &[u8]) -> Option<((usize, usize), &[u8])> {
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < data.len() && data[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < data.len() && data[i] == b'#' {
            while i < data.len() && data[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return None;
        }
        fields.push(std::str::from_utf8(&data[start..i]).ok()?);
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    // Exactly one whitespace byte separates the header from the raster.
    Some(((fields[1].parse().ok()?, fields[2].parse().ok()?), data.get(i + 1..)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d_and_3d() {
        let dir = tempfile::tempdir().unwrap();
        let g2 = Arc::new(GridDomain::from_counts(&[0.0], &[13, 7], 0.5).unwrap());
        let e2 = BinarySet::from_indices(&g2, [0, 5, 14, 90]);
        let p2 = dir.path().join("E_tau0.001_k3.pgm");
        write_snapshot(&e2, &p2).unwrap();
        assert_eq!(read_snapshot(&p2, &g2).unwrap(), e2);
        let g3 = Arc::new(GridDomain::from_counts(&[0.0, 0.0], &[5, 3, 4], 0.25).unwrap());
        let e3 = BinarySet::from_indices(&g3, [1, 7, 33, 59]);
        let p3 = dir.path().join("E.bin");
        write_snapshot(&e3, &p3).unwrap();
        assert_eq!(std::fs::metadata(&p3).unwrap().len(), 32 + 8);
        assert_eq!(read_snapshot(&p3, &g3).unwrap(), e3);
        let other = Arc::new(GridDomain::from_counts(&[0.0], &[13, 8], 0.5).unwrap());
        assert!(matches!(read_snapshot(&p2, &other), Err(Error::GridMismatch(_))));
    }
}
