//! Binary field snapshots and CSV time series.
//!
//! Snapshot layout (little endian):
//!
//! ```text
//! b"CSNT1\0" | u32 dim | u32 n | f64 time | f64 samples...
//! ```
//!
//! Samples are row-major with the last axis fastest; vector and tensor
//! components are interleaved per point. The component count (1, d or d²)
//! follows from the payload length.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Grid, ScalarField, TensorField, VectorField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"CSNT1\0";
const HEADER_LEN: usize = 6 + 4 + 4 + 8;

#[derive(Clone, Debug, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
    Tensor(TensorField),
}

impl AnyField {
    pub fn grid(&self) -> &Grid {
        match self {
            AnyField::Scalar(f) => f.grid(),
            AnyField::Vector(f) => f.grid(),
            AnyField::Tensor(f) => f.grid(),
        }
    }

    fn components(&self) -> &[ScalarField] {
        match self {
            AnyField::Scalar(f) => std::slice::from_ref(f),
            AnyField::Vector(f) => f.components(),
            AnyField::Tensor(f) => f.components(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: AnyField,
}

pub fn encode(time: f64, field: &AnyField) -> Vec<u8> {
    let grid = field.grid();
    let comps = field.components();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * grid.len() * comps.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for p in 0..grid.len() {
        for c in comps {
            out.extend_from_slice(&c.values()[p].to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let bad = |reason: String| Error::MalformedSnapshot { path: None, reason };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..6] != MAGIC {
        return Err(bad("bad magic bytes".into()));
    }
    let dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let time = f64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let grid = Grid::new(dim, n).map_err(|e| bad(e.to_string()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() % 8 != 0 || payload.len() % (8 * grid.len()) != 0 {
        return Err(bad(format!("payload of {} bytes does not fit the grid", payload.len())));
    }
    let ncomp = payload.len() / (8 * grid.len());
    if ![1, dim, dim * dim].contains(&ncomp) {
        return Err(bad(format!("{ncomp} components per point on a {dim}-d grid")));
    }
    let samples: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let comps: Vec<ScalarField> = (0..ncomp)
        .map(|c| {
            let values = samples.iter().skip(c).step_by(ncomp).copied().collect();
            ScalarField::new(&grid, values)
        })
        .collect::<Result<_>>()
        .map_err(|e| bad(e.to_string()))?;
    let field = if ncomp == 1 {
        AnyField::Scalar(comps.into_iter().next().unwrap())
    } else if ncomp == dim {
        AnyField::Vector(VectorField::from_components(comps)?)
    } else {
        AnyField::Tensor(TensorField::from_components(comps)?)
    };
    Ok(Snapshot { time, field })
}

pub fn write_snapshot(path: &Path, time: f64, field: &AnyField) -> Result<()> {
    fs::write(path, encode(time, field))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path)?;
    decode(&bytes).map_err(|e| match e {
        Error::MalformedSnapshot { reason, .. } => Error::MalformedSnapshot {
            path: Some(path.to_path_buf()),
            reason,
        },
        other => other,
    })
}

/// Writes `t,value` rows with 17 significant digits.
pub fn write_series_csv(mut w: impl Write, series: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "t,value")?;
    for (t, v) in series {
        writeln!(w, "{},{}", fmt17(*t), fmt17(*v))?;
    }
    Ok(())
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_magic() {
        let g = Grid::new(2, 8).unwrap();
        let mut bytes = encode(0.5, &AnyField::Scalar(ScalarField::constant(&g, 1.0)));
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::MalformedSnapshot { .. })));
        assert!(decode(&bytes[..10]).is_err());
    }

    #[test]
    fn header_layout() {
        let g = Grid::new(2, 8).unwrap();
        let u = VectorField::from_fn(&g, |x| [x[0], -x[1], 0.0]);
        let bytes = encode(1.25, &AnyField::Vector(u.clone()));
        assert_eq!(&bytes[..6], b"CSNT1\0");
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[14..22].try_into().unwrap()), 1.25);
        // interleaved: point 1 is (x = 0, y = h)
        let v = |i: usize| f64::from_le_bytes(bytes[22 + 8 * i..30 + 8 * i].try_into().unwrap());
        assert_eq!(v(2), u.component(0).values()[1]);
        assert_eq!(v(3), u.component(1).values()[1]);
        assert_eq!(bytes.len(), 22 + 8 * 2 * 64);
    }

    #[test]
    fn csv_has_17_digits() {
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &[(0.1, 1.0 / 3.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        let (t, v) = row.split_once(',').unwrap();
        assert_eq!(t.parse::<f64>().unwrap(), 0.1);
        assert_eq!(v.parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    proptest! {
        #[test]
        fn snapshot_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 64 * 4), t in -10.0f64..10.0) {
            let g = Grid::new(2, 8).unwrap();
            let comps: Vec<ScalarField> = values
                .chunks(64)
                .map(|c| ScalarField::new(&g, c.to_vec()).unwrap())
                .collect();
            let field = AnyField::Tensor(TensorField::from_components(comps).unwrap());
            let snap = decode(&encode(t, &field)).unwrap();
            prop_assert_eq!(snap.time, t);
            prop_assert_eq!(snap.field, field);
        }
    }
}
