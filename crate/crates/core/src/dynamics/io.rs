//! History and ensemble files.
//!
//! Binary history layout (little endian): magic `VMHS`, `u32` version,
//! `u64` particles, `u64` steps, `u64` columns (= 14), `f64` dt, the weights,
//! then one row of `f64` per (step, particle):
//! `step, id, x[3], xi[3], xdot[3], xidot[3]`.

use super::history::{NodeState, TrajectoryHistory};
use super::{PhaseEnsemble, PhasePoint};
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"VMHS";
const VERSION: u32 = 1;
const COLUMNS: usize = 14;

/// Column names of the binary rows and the CSV dump.
pub const HISTORY_COLUMNS: [&str; COLUMNS] = [
    "step", "id", "x1", "x2", "x3", "xi1", "xi2", "xi3", "xdot1", "xdot2", "xdot3", "xidot1",
    "xidot2", "xidot3",
];

impl TrajectoryHistory {
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.n_particles();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(self.steps() as u64).to_le_bytes());
        out.extend_from_slice(&(COLUMNS as u64).to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        for w in self.weights() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for (idx, s) in self.nodes().iter().enumerate() {
            let row = [idx / n.max(1), idx % n.max(1)];
            for v in row.iter().map(|&u| u as f64).chain(
                [s.x, s.xi, s.xdot, s.xidot]
                    .iter()
                    .flat_map(|v| v.0),
            ) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(m.to_string());
        if buf.len() < 40 || &buf[..4] != MAGIC {
            return Err(bad("bad magic, expected VMHS"));
        }
        let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported history version {version}")));
        }
        let n = u64_at(8) as usize;
        let steps = u64_at(16) as usize;
        if u64_at(24) as usize != COLUMNS {
            return Err(bad("unexpected column count"));
        }
        let dt = f64::from_le_bytes(buf[32..40].try_into().unwrap());
        let need = 40 + 8 * n + 8 * COLUMNS * n * (steps + 1);
        if buf.len() != need {
            return Err(Error::Format(format!(
                "history size {} does not match header ({need})",
                buf.len()
            )));
        }
        let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let weights: Vec<f64> = (0..n).map(|i| f(40 + 8 * i)).collect();
        let base = 40 + 8 * n;
        let row = |r: usize| -> NodeState {
            let o = base + 8 * COLUMNS * r;
            let v = |c: usize| Vec3::new(f(o + 8 * c), f(o + 8 * c + 8), f(o + 8 * c + 16));
            NodeState::new(v(2), v(5), v(8), v(11))
        };
        let mut h = TrajectoryHistory::new(dt, weights, (0..n).map(row).collect())?;
        for k in 1..=steps {
            h.push((0..n).map(|i| row(k * n + i)).collect())?;
        }
        Ok(h)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// CSV dump with a header line and the same columns as the binary rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{}", HISTORY_COLUMNS.join(","))?;
        for k in 0..=self.steps() {
            for (i, s) in self.slice(k).iter().enumerate() {
                write!(f, "{k},{i}")?;
                for v in [s.x, s.xi, s.xdot, s.xidot] {
                    write!(f, ",{:e},{:e},{:e}", v[0], v[1], v[2])?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Reads `x1,x2,x3,xi1,xi2,xi3[,w]` rows; a non-numeric first line is a
/// header. Missing weights mean uniform weights.
pub fn read_ensemble_csv(path: &Path) -> Result<PhaseEnsemble> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let vals = match vals {
            Ok(v) => v,
            Err(_) if points.is_empty() && ln == 0 => continue,
            Err(e) => return Err(Error::Format(format!("line {}: {e}", ln + 1))),
        };
        if vals.len() != 6 && vals.len() != 7 {
            return Err(Error::Format(format!(
                "line {}: expected 6 or 7 columns, got {}",
                ln + 1,
                vals.len()
            )));
        }
        points.push(PhasePoint::new(
            Vec3::new(vals[0], vals[1], vals[2]),
            Vec3::new(vals[3], vals[4], vals[5]),
        ));
        weights.push(vals.get(6).copied());
    }
    if weights.iter().all(|w| w.is_none()) {
        return Ok(PhaseEnsemble::uniform(points));
    }
    let w: Option<Vec<f64>> = weights.into_iter().collect();
    let w = w.ok_or_else(|| Error::Format("weights given for some rows only".into()))?;
    PhaseEnsemble::weighted(points, w)
}

pub fn write_ensemble_csv(e: &PhaseEnsemble, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "x1,x2,x3,xi1,xi2,xi3,w")?;
    for (p, w) in e.points.iter().zip(&e.weights) {
        writeln!(
            f,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            p.x[0], p.x[1], p.x[2], p.xi[0], p.xi[1], p.xi[2], w
        )?;
    }
    Ok(())
}

/// Loads an ensemble from CSV, or from a binary history at time `t`
/// (last node when `t` is `None`).
pub fn load_ensemble(path: &Path, t: Option<f64>) -> Result<PhaseEnsemble> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        let h = TrajectoryHistory::from_bytes(&bytes)?;
        return match t {
            Some(t) => h.ensemble_at_time(t),
            None => Ok(h.ensemble_at(h.steps())),
        };
    }
    read_ensemble_csv(path)
}
