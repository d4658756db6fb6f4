//! "MWC1" symbol and "MWO1" operator dumps (little-endian) and JSON sidecars.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::quantize::{OperatorMatrix, Scheme};
use crate::symbols::SymbolField;
use crate::{SIGMA, VERSION};

const SYMBOL_MAGIC: &[u8; 4] = b"MWC1";
const OPERATOR_MAGIC: &[u8; 4] = b"MWO1";

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], grid: &PhaseGrid) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.points_per_axis() as u32).to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<PhaseGrid> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    PhaseGrid::new(dim, n, f64::from_le_bytes(b8))
}

fn write_complex<W: Write>(w: &mut W, values: impl Iterator<Item = Complex64>) -> Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_complex<R: Read>(r: &mut R, count: usize) -> Result<Vec<Complex64>> {
    let mut buf = vec![0u8; 16 * count];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

pub fn write_symbol<W: Write>(w: &mut W, f: &SymbolField) -> Result<()> {
    write_header(w, SYMBOL_MAGIC, f.grid())?;
    write_complex(w, f.values().iter().copied())
}

pub fn read_symbol<R: Read>(r: &mut R) -> Result<SymbolField> {
    let grid = read_header(r, SYMBOL_MAGIC)?;
    let values = read_complex(r, grid.len() * grid.len())?;
    SymbolField::from_values(grid, values)
}

pub fn symbol_bytes(f: &SymbolField) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 16 * f.values().len());
    write_symbol(&mut out, f).expect("in-memory write");
    out
}

/// Entries are written row-major (row = output node).
pub fn write_operator<W: Write>(w: &mut W, m: &OperatorMatrix) -> Result<()> {
    write_header(w, OPERATOR_MAGIC, m.grid())?;
    w.write_all(&[m.scheme().code()])?;
    let e = m.entries();
    write_complex(w, (0..e.nrows()).flat_map(|i| (0..e.ncols()).map(move |j| e[(i, j)])))
}

/// The potential tag is not part of the binary format; pass it back in.
pub fn read_operator<R: Read>(r: &mut R, potential: &str) -> Result<OperatorMatrix> {
    let grid = read_header(r, OPERATOR_MAGIC)?;
    let mut code = [0u8; 1];
    r.read_exact(&mut code)?;
    let scheme = Scheme::from_code(code[0]).ok_or_else(|| Error::Format(format!("unknown scheme code {}", code[0])))?;
    let n = grid.len();
    let values = read_complex(r, n * n)?;
    let entries = DMatrix::from_row_slice(n, n, &values);
    OperatorMatrix::new(grid, entries, scheme, potential)
}

pub fn operator_bytes(m: &OperatorMatrix) -> Vec<u8> {
    let n = m.grid().len();
    let mut out = Vec::with_capacity(21 + 16 * n * n);
    write_operator(&mut out, m).expect("in-memory write");
    out
}

/// Adds `sigma` and `version` to a JSON object.
pub fn sidecar(mut body: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("sigma".into(), json!(SIGMA));
        map.insert("version".into(), json!(VERSION));
        body
    } else {
        json!({ "sigma": SIGMA, "version": VERSION, "data": body })
    }
}

/// JSON header alternative to the binary dump.
pub fn symbol_json(f: &SymbolField) -> Value {
    let g = f.grid();
    sidecar(json!({
        "format": "MWC1",
        "n": g.dim(),
        "N": g.points_per_axis(),
        "L": g.half_width(),
        "values": f.values().iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::VectorPotential;
    use crate::quantize::op_magnetic;
    use crate::symbols::{gaussian, sample};

    #[test]
    fn symbol_round_trip() {
        let g = PhaseGrid::new(2, 8, 4.0).unwrap();
        let f = sample(&gaussian(&[0.0, 0.0], 1.0, &[0.5, 0.0], 1.0), &g).unwrap();
        let bytes = symbol_bytes(&f);
        assert_eq!(&bytes[..4], b"MWC1");
        assert_eq!(bytes.len(), 4 + 4 + 4 + 8 + 16 * 64 * 64);
        let back = read_symbol(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn operator_round_trip() {
        let g = PhaseGrid::new(1, 8, 4.0).unwrap();
        let f = sample(&gaussian(&[0.0], 1.0, &[0.5], 1.0), &g).unwrap();
        let m = op_magnetic(&f, &VectorPotential::constant(&[0.3])).unwrap();
        let bytes = operator_bytes(&m);
        assert_eq!(bytes[20], Scheme::Magnetic.code());
        let back = read_operator(&mut bytes.as_slice(), m.potential()).unwrap();
        assert_eq!(back, m);
        assert!(read_symbol(&mut bytes.as_slice()).is_err());
    }

    #[test]
    fn sidecar_carries_sign() {
        let v = sidecar(json!({"a": 1}));
        assert_eq!(v["sigma"], json!(1.0));
        assert_eq!(v["version"], json!(VERSION));
    }
}
