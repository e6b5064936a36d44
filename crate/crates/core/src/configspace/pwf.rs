//! `PWF1` field dumps.
//!
//! Layout (little-endian): magic `PWF1`; `u32` version; `u32` particle
//! count; `u32` dimension; `u32` point count per axis; `f64` extent per
//! axis; `f64` time; `u32` component count; then every component as
//! row-major interleaved `(re, im)` `f64` pairs.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::{Field, SpinorField};
use super::grid::{Boundary, GridSpec};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PWF1";
pub const VERSION: u32 = 1;

/// Decoded dump: grid, time and one or more component arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub grid: GridSpec,
    pub time: f64,
    pub components: Vec<Vec<Complex64>>,
}

impl Dump {
    pub fn from_field(f: &Field) -> Self {
        Dump { grid: f.grid().clone(), time: f.time(), components: vec![f.values().to_vec()] }
    }

    pub fn from_spinor(s: &SpinorField) -> Self {
        Dump { grid: s.grid().clone(), time: s.time(), components: s.components().to_vec() }
    }

    pub fn into_field(self) -> Result<Field> {
        if self.components.len() != 1 {
            return Err(Error::Format(format!("{} components, expected 1", self.components.len())));
        }
        let mut c = self.components;
        Field::from_raw(self.grid, c.pop().expect("one"), self.time)
    }

    pub fn into_spinor(self) -> Result<SpinorField> {
        SpinorField::from_raw(self.grid, self.components, self.time)
    }
}

pub fn write_dump<W: Write>(mut w: W, d: &Dump) -> Result<()> {
    let g = &d.grid;
    let mut buf = Vec::with_capacity(64 + 16 * g.len() * d.components.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.n_particles as u32).to_le_bytes());
    buf.extend_from_slice(&(g.dim as u32).to_le_bytes());
    for &p in &g.points {
        buf.extend_from_slice(&(p as u32).to_le_bytes());
    }
    for &l in &g.extent {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    buf.extend_from_slice(&d.time.to_le_bytes());
    buf.extend_from_slice(&(d.components.len() as u32).to_le_bytes());
    for c in &d.components {
        for z in c {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let s = self.data.get(self.pos..end).ok_or_else(|| Error::Format("truncated".into()))?;
        self.pos = end;
        Ok(s.try_into().expect("length checked"))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn read_dump<R: Read>(mut r: R) -> Result<Dump> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut c = Cursor { data: &data, pos: 0 };
    if &c.take::<4>()? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let axes = n
        .checked_mul(dim)
        .filter(|&a| a <= 12)
        .ok_or_else(|| Error::Format("implausible axis count".into()))?;
    let points = (0..axes).map(|_| c.u32().map(|p| p as usize)).collect::<Result<Vec<_>>>()?;
    let extent = (0..axes).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let grid = GridSpec::new(n, dim, points, extent, Boundary::Periodic)
        .map_err(|e| Error::Format(e.to_string()))?;
    let time = c.f64()?;
    let ncomp = c.u32()? as usize;
    let need = ncomp
        .checked_mul(grid.len())
        .and_then(|v| v.checked_mul(16))
        .ok_or_else(|| Error::Format("size overflow".into()))?;
    if data.len() - c.pos != need {
        return Err(Error::Format(format!("payload is {} bytes, expected {need}", data.len() - c.pos)));
    }
    let mut components = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        let comp = (0..grid.len())
            .map(|_| Ok(Complex64::new(c.f64()?, c.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        components.push(comp);
    }
    Ok(Dump { grid, time, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let g = GridSpec::uniform(1, 1, 8, 2.0).unwrap();
        let f = Field::new(g, vec![Complex64::new(1.0, -1.0); 8]).unwrap().with_time(0.5);
        let mut buf = Vec::new();
        write_dump(&mut buf, &Dump::from_field(&f)).unwrap();
        assert_eq!(&buf[..4], b"PWF1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[16..20].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(buf[20..28].try_into().unwrap()), 2.0);
        assert_eq!(f64::from_le_bytes(buf[28..36].try_into().unwrap()), 0.5);
        assert_eq!(u32::from_le_bytes(buf[36..40].try_into().unwrap()), 1);
        assert_eq!(buf.len(), 40 + 8 * 16);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_dump(&b"PWF2\x01\x00\x00\x00"[..]).is_err());
        assert!(read_dump(&b"PWF1\x01\x00\x00\x00\x01\x00"[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..3, pts in 8usize..12, l in 0.5f64..5.0, t in -3.0f64..3.0, seed in 0u64..1000) {
            let g = GridSpec::uniform(n, 1, pts, l).unwrap();
            let comps: Vec<Vec<Complex64>> = (0..1usize << n)
                .map(|s| (0..g.len()).map(|k| Complex64::new(((k as u64 * 31 + seed + s as u64) as f64).sin(), (k as f64).cos())).collect())
                .collect();
            let d = Dump { grid: g, time: t, components: comps };
            let mut buf = Vec::new();
            write_dump(&mut buf, &d).unwrap();
            prop_assert_eq!(read_dump(&buf[..]).unwrap(), d);
        }
    }
}
