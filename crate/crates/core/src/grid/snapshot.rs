//! `KSFIELD v1` snapshots: one ASCII header line followed by the cell values
//! as little-endian `f64`, x fastest.

use std::fs;
use std::path::Path;

use super::{Field, Grid};
use crate::{Error, Result};

const MAGIC: &str = "KSFIELD";
const VERSION: &str = "v1";

pub fn encode_snapshot(field: &Field, grid: &Grid, t: f64) -> Result<Vec<u8>> {
    grid.check(field)?;
    let geometry = grid.geometry();
    let (nx, ny) = geometry.shape();
    let header = format!("{MAGIC} {VERSION} {} {nx} {ny} {t}\n", geometry.tag());
    let mut bytes = Vec::with_capacity(header.len() + 8 * field.len());
    bytes.extend_from_slice(header.as_bytes());
    for x in field.values() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    Ok(bytes)
}

/// Parses a snapshot and attaches it to `grid`, returning the field and its time.
pub fn decode_snapshot(bytes: &[u8], grid: &Grid) -> Result<(Field, f64)> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Snapshot("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::Snapshot("header is not ASCII".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    let [magic, version, tag, nx, ny, t] = parts[..] else {
        return Err(Error::Snapshot(format!("malformed header {header:?}")));
    };
    if magic != MAGIC || version != VERSION {
        return Err(Error::Snapshot(format!("unsupported format {magic} {version}")));
    }
    let geometry = grid.geometry();
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Snapshot(format!("bad cell count {s:?}")))
    };
    let shape = (parse_count(nx)?, parse_count(ny)?);
    if tag != geometry.tag() || shape != geometry.shape() {
        return Err(Error::Snapshot(format!(
            "snapshot is {tag} {}x{}, grid is {} {}x{}",
            shape.0,
            shape.1,
            geometry.tag(),
            geometry.shape().0,
            geometry.shape().1
        )));
    }
    let t: f64 = t
        .parse()
        .map_err(|_| Error::Snapshot(format!("bad time {t:?}")))?;
    let body = &bytes[newline + 1..];
    if body.len() != 8 * grid.len() {
        return Err(Error::Snapshot(format!(
            "expected {} payload bytes, found {}",
            8 * grid.len(),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((Field::new(grid, values)?, t))
}

pub fn write_snapshot(path: &Path, field: &Field, grid: &Grid, t: f64) -> Result<()> {
    let bytes = encode_snapshot(field, grid, t)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path, grid: &Grid) -> Result<(Field, f64)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    #[test]
    fn header_layout() {
        let g = Grid::new(Geometry::Rectangle { lx: 1.0, ly: 2.0, nx: 4, ny: 5 }).unwrap();
        let f = Field::constant(&g, 1.0);
        let bytes = encode_snapshot(&f, &g, 0.25).unwrap();
        let header_end = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(&bytes[..=header_end], b"KSFIELD v1 rectangle 4 5 0.25\n");
        assert_eq!(bytes.len(), header_end + 1 + 8 * 20);
    }

    #[test]
    fn rejects_other_grid() {
        let g = Grid::unit_square(4).unwrap();
        let h = Grid::new(Geometry::RadialDisk { radius: 1.0, nr: 4 }).unwrap();
        let bytes = encode_snapshot(&Field::constant(&g, 1.0), &g, 0.0).unwrap();
        assert!(decode_snapshot(&bytes, &h).is_err());
        assert!(decode_snapshot(&bytes[..bytes.len() - 1], &g).is_err());
        assert!(decode_snapshot(b"KSFIELD v2 rectangle 4 4 0\n", &g).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_is_bit_exact(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 20), t in 0.0f64..1e6) {
                let g = Grid::new(Geometry::Rectangle { lx: 1.0, ly: 1.0, nx: 5, ny: 4 }).unwrap();
                let f = Field::new(&g, values).unwrap();
                let (back, t2) = decode_snapshot(&encode_snapshot(&f, &g, t).unwrap(), &g).unwrap();
                prop_assert_eq!(t2.to_bits(), t.to_bits());
                for (a, b) in back.values().iter().zip(f.values()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }
}
