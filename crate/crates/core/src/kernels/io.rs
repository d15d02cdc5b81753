//! Versioned binary kernel files with a JSON sidecar.
//!
//! Layout (little endian): magic `VMKR`, `u32` version, `u32` kernel family,
//! `u32` mollifier family, `f64` eps, `f64` dt, `f64` dr, `u64` nt, `u64` nr,
//! `f64` support, then the row-major tables `Y[nt][nr][4]`, `M[nt][nr][4]`
//! and the per-row suprema `[nt][4]`.

use super::mollifier::ChiFamily;
use super::tables::{KernelFamily, RadialKernel, RowSup, Supnorms};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"VMKR";
const VERSION: u32 = 1;

/// Metadata written next to the binary tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelSidecar {
    pub format_version: u32,
    pub epsilon: f64,
    pub family: KernelFamily,
    pub chi_family: ChiFamily,
    pub dt: f64,
    pub dr: f64,
    pub t_max: f64,
    pub r_max: f64,
    pub supnorms: Supnorms,
    pub lipschitz_estimate: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn put_f64s(out: &mut Vec<u8>, vals: impl IntoIterator<Item = f64>) {
    for v in vals {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("kernel file truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn quads(&mut self, n: usize) -> Result<Vec<[f64; 4]>> {
        (0..n)
            .map(|_| Ok([self.f64()?, self.f64()?, self.f64()?, self.f64()?]))
            .collect()
    }
}

impl RadialKernel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * (8 * self.y.len() + 4 * self.nt));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.family as u32).to_le_bytes());
        out.extend_from_slice(&(self.chi as u32).to_le_bytes());
        put_f64s(&mut out, [self.epsilon, self.dt, self.dr]);
        out.extend_from_slice(&(self.nt as u64).to_le_bytes());
        out.extend_from_slice(&(self.nr as u64).to_le_bytes());
        put_f64s(&mut out, [self.support]);
        put_f64s(&mut out, self.y.iter().flatten().copied());
        put_f64s(&mut out, self.m.iter().flatten().copied());
        put_f64s(
            &mut out,
            self.rows
                .iter()
                .flat_map(|r| [r.grad, r.hess, r.m_grad, r.m_abs]),
        );
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut c = Cursor { buf, pos: 0 };
        if c.take(4)? != MAGIC {
            return Err(Error::Format("bad magic, expected VMKR".into()));
        }
        let version = c.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported kernel version {version}")));
        }
        let family = match c.u32()? {
            0 => KernelFamily::Double,
            1 => KernelFamily::Single,
            v => return Err(Error::Format(format!("unknown kernel family tag {v}"))),
        };
        let chi = match c.u32()? {
            0 => ChiFamily::Bump,
            1 => ChiFamily::Polynomial,
            v => return Err(Error::Format(format!("unknown mollifier tag {v}"))),
        };
        let epsilon = c.f64()?;
        let dt = c.f64()?;
        let dr = c.f64()?;
        let nt = c.u64()? as usize;
        let nr = c.u64()? as usize;
        let support = c.f64()?;
        if nt < 2 || nr < 2 {
            return Err(Error::Format("degenerate kernel grid".into()));
        }
        let y = c.quads(nt * nr)?;
        let m = c.quads(nt * nr)?;
        let rows = c
            .quads(nt)?
            .into_iter()
            .map(|q| RowSup {
                grad: q[0],
                hess: q[1],
                m_grad: q[2],
                m_abs: q[3],
            })
            .collect::<Vec<_>>();
        if c.pos != buf.len() {
            return Err(Error::Format("trailing bytes in kernel file".into()));
        }
        let zero = y.iter().chain(&m).all(|v| v.iter().all(|&x| x == 0.0));
        let pot = super::tables::potential_table(&y, &m, nt, nr, dt);
        Ok(RadialKernel {
            epsilon,
            family,
            chi,
            dt,
            dr,
            nt,
            nr,
            support,
            y,
            m,
            pot,
            rows,
            zero,
        })
    }

    pub fn sidecar(&self) -> KernelSidecar {
        KernelSidecar {
            format_version: VERSION,
            epsilon: self.epsilon,
            family: self.family,
            chi_family: self.chi,
            dt: self.dt,
            dr: self.dr,
            t_max: self.t_max(),
            r_max: self.r_max(),
            supnorms: self.supnorms(),
            lipschitz_estimate: self.lipschitz_estimate(self.t_max()).unwrap_or(f64::NAN),
        }
    }

    /// Writes the binary tables to `path` and the sidecar to `path.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        let side = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(sidecar_path(path), side)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}
