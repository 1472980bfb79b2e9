//! Binary contrast (`CTR1`) and far-field (`FFD1`) files.
//!
//! ```text
//! CTR1: "CTR1" | rho: f64 | n: u32 | flag: u8 (0 real, 1 complex) | n·n values, row-major
//!       real: f64 per value; complex: (re: f64, im: f64) per value
//! FFD1: "FFD1" | k: f64 | p: u32 | q: u32 | p·q (re: f64, im: f64), observation index major
//! ```
//! All numbers are little-endian.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::farfield::FarField;
use crate::grid::{ContrastGrid, Grid};

const CTR_MAGIC: &[u8; 4] = b"CTR1";
const FFD_MAGIC: &[u8; 4] = b"FFD1";

pub fn encode_contrast(m: &ContrastGrid) -> Vec<u8> {
    let real = m.is_real();
    let n = m.n();
    let mut out = Vec::with_capacity(17 + n * n * if real { 8 } else { 16 });
    out.extend_from_slice(CTR_MAGIC);
    out.extend_from_slice(&m.grid().rho().to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.push(if real { 0 } else { 1 });
    for v in m.values().iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        if !real {
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

pub fn decode_contrast(bytes: &[u8], path: &Path) -> Result<ContrastGrid> {
    let mut r = Reader::new(bytes, path);
    r.magic(CTR_MAGIC, "CTR1")?;
    let rho = r.f64()?;
    let n = r.u32()? as usize;
    let complex = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(r.error(format!("unknown value flag {other}"))),
    };
    let grid = Grid::new(rho, n).map_err(|e| r.error(e.to_string()))?;
    let mut values = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re = r.f64()?;
        let im = if complex { r.f64()? } else { 0.0 };
        values.push(Complex64::new(re, im));
    }
    r.finish()?;
    let values = Array2::from_shape_vec((n, n), values).expect("length checked");
    ContrastGrid::new(grid, values)
}

pub fn encode_far_field(ff: &FarField) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + ff.p() * ff.q() * 16);
    out.extend_from_slice(FFD_MAGIC);
    out.extend_from_slice(&ff.k().to_le_bytes());
    out.extend_from_slice(&(ff.p() as u32).to_le_bytes());
    out.extend_from_slice(&(ff.q() as u32).to_le_bytes());
    for v in ff.values().iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_far_field(bytes: &[u8], path: &Path) -> Result<FarField> {
    let mut r = Reader::new(bytes, path);
    r.magic(FFD_MAGIC, "FFD1")?;
    let k = r.f64()?;
    let p = r.u32()? as usize;
    let q = r.u32()? as usize;
    let mut values = Vec::with_capacity(p * q);
    for _ in 0..p * q {
        let re = r.f64()?;
        let im = r.f64()?;
        values.push(Complex64::new(re, im));
    }
    r.finish()?;
    let values = Array2::from_shape_vec((p, q), values).expect("length checked");
    FarField::new(k, values).map_err(|e| r.error(e.to_string()))
}

pub fn write_contrast(path: &Path, m: &ContrastGrid) -> Result<()> {
    write_file(path, &encode_contrast(m))
}

pub fn read_contrast(path: &Path) -> Result<ContrastGrid> {
    decode_contrast(&read_file(path)?, path)
}

pub fn write_far_field(path: &Path, ff: &FarField) -> Result<()> {
    write_file(path, &encode_far_field(ff))
}

pub fn read_far_field(path: &Path) -> Result<FarField> {
    decode_far_field(&read_file(path)?, path)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Self { bytes, pos: 0, path }
    }

    fn error(&self, reason: String) -> Error {
        Error::Format {
            path: self.path.to_owned(),
            reason,
        }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.error(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice of length N"))
    }

    fn magic(&mut self, magic: &[u8; 4], name: &'static str) -> Result<()> {
        if self.bytes.get(..4) != Some(&magic[..]) {
            return Err(Error::BadMagic {
                path: self.path.to_owned(),
                expected: name,
            });
        }
        self.pos = 4;
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.error(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}
