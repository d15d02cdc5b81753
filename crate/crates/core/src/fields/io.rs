//! Grid file format and CSV slices.
//!
//! Layout (little endian): magic `VMFG`, `u32` version, `u32` kernel family
//! (0 double, 1 single), `f64` time, `f64` center (3), `f64` half width,
//! `f64` spacing, `u64` cells per axis, `u64` columns, then one row per
//! node in `(ix, iy, iz)` order: `phi, A, E, B` (10 floats).

use super::{FieldGrid, FieldSample, GridSpec};
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::vec3::Vec3;
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"VMFG";
pub const VERSION: u32 = 1;
pub const COLUMNS: usize = 10;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("truncated grid file".into()))?;
        self.pos = end;
        Ok(s.try_into().unwrap())
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn vec3(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
}

impl FieldGrid {
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.spec.n();
        let mut out = Vec::with_capacity(80 + self.samples.len() * COLUMNS * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let fam: u32 = match self.family {
            KernelFamily::Double => 0,
            KernelFamily::Single => 1,
        };
        out.extend_from_slice(&fam.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        for c in 0..3 {
            out.extend_from_slice(&self.spec.center[c].to_le_bytes());
        }
        out.extend_from_slice(&self.spec.half_width.to_le_bytes());
        out.extend_from_slice(&self.spec.h.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(COLUMNS as u64).to_le_bytes());
        for s in &self.samples {
            out.extend_from_slice(&s.phi.to_le_bytes());
            for v in [s.a, s.e, s.b] {
                for c in 0..3 {
                    out.extend_from_slice(&v[c].to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if &r.take::<4>()? != MAGIC {
            return Err(Error::Format("not a grid file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported grid version {version}")));
        }
        let family = match r.u32()? {
            0 => KernelFamily::Double,
            1 => KernelFamily::Single,
            f => return Err(Error::Format(format!("unknown kernel family tag {f}"))),
        };
        let time = r.f64()?;
        let center = r.vec3()?;
        let half_width = r.f64()?;
        let h = r.f64()?;
        let n = r.u64()? as usize;
        if r.u64()? as usize != COLUMNS {
            return Err(Error::Format("unexpected column count".into()));
        }
        let spec = GridSpec::new(center, half_width, h)?;
        if spec.n() != n {
            return Err(Error::Format("grid extent does not match spacing".into()));
        }
        let mut samples = Vec::with_capacity(n * n * n);
        for _ in 0..n * n * n {
            let phi = r.f64()?;
            let a = r.vec3()?;
            let e = r.vec3()?;
            let b = r.vec3()?;
            samples.push(FieldSample { e, b, phi, a });
        }
        Ok(FieldGrid {
            spec,
            time,
            family,
            samples,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Writes the plane `axis = index` as CSV with node coordinates.
    pub fn write_csv_slice(&self, path: &Path, axis: usize, index: usize) -> Result<()> {
        let n = self.spec.n();
        if axis > 2 || index >= n {
            return Err(Error::InvalidParameter(format!(
                "slice {index} on axis {axis} outside a {n}^3 grid"
            )));
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "x,y,z,phi,ax,ay,az,ex,ey,ez,bx,by,bz")?;
        for a in 0..n {
            for b in 0..n {
                let (ix, iy, iz) = match axis {
                    0 => (index, a, b),
                    1 => (a, index, b),
                    _ => (a, b, index),
                };
                let x = self.spec.node(ix, iy, iz);
                let s = self.at(ix, iy, iz);
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    x[0], x[1], x[2], s.phi, s.a[0], s.a[1], s.a[2], s.e[0], s.e[1], s.e[2], s.b[0],
                    s.b[1], s.b[2]
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
