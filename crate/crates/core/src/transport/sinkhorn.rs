//! Log-domain Sinkhorn with an annealed regularization schedule.
//!
//! The returned plan is the Sinkhorn plan rounded onto the transport
//! polytope, so its cost is an upper bound for the exact optimum. The
//! c-transformed potentials give a feasible dual and hence a lower bound;
//! their difference is the reported gap.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SinkhornOptions {
    pub reg_start: f64,
    pub reg_final: f64,
    /// Geometric decrease of the regularization between stages.
    pub reg_factor: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions {
            reg_start: 0.5,
            reg_final: 1e-3,
            reg_factor: 0.5,
            tol: 1e-9,
            max_iter: 20_000,
        }
    }
}

pub struct SinkhornSolution {
    /// Dense row-major rounded plan.
    pub plan: Vec<f64>,
    pub upper: f64,
    pub lower: f64,
    pub iterations: usize,
    pub regs: Vec<f64>,
}

fn lse(vals: impl Iterator<Item = f64>, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(vals);
    let mx = buf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + buf.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
}

pub fn solve(a: &[f64], b: &[f64], cost: &[f64], opts: &SinkhornOptions) -> Result<SinkhornSolution> {
    let m = a.len();
    let n = b.len();
    let la: Vec<f64> = a.iter().map(|w| w.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|w| w.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut buf = Vec::with_capacity(m.max(n));
    let mut regs = Vec::new();
    let mut reg = opts.reg_start.max(opts.reg_final);
    let mut iterations = 0;
    let mut err = f64::INFINITY;
    loop {
        regs.push(reg);
        for _ in 0..opts.max_iter {
            iterations += 1;
            for i in 0..m {
                let row = &cost[i * n..(i + 1) * n];
                f[i] = -reg * lse((0..n).map(|j| (g[j] - row[j]) / reg + lb[j]), &mut buf);
            }
            for j in 0..n {
                g[j] = -reg * lse((0..m).map(|i| (f[i] - cost[i * n + j]) / reg + la[i]), &mut buf);
            }
            // after the g-update columns are exact; measure the row error
            err = 0.0;
            for i in 0..m {
                let row = &cost[i * n..(i + 1) * n];
                let s: f64 = (0..n)
                    .map(|j| ((f[i] + g[j] - row[j]) / reg + la[i] + lb[j]).exp())
                    .sum();
                err += (s - a[i]).abs();
            }
            if err <= opts.tol {
                break;
            }
        }
        if reg <= opts.reg_final {
            break;
        }
        reg = (reg * opts.reg_factor).max(opts.reg_final);
    }
    if !(err <= opts.tol * 10.0) {
        return Err(Error::EntropicNotConverged {
            residual: err,
            iterations,
        });
    }
    let mut plan = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            plan[i * n + j] = ((f[i] + g[j] - cost[i * n + j]) / reg + la[i] + lb[j]).exp();
        }
    }
    round_to_polytope(&mut plan, a, b);
    let upper = plan.iter().zip(cost).map(|(p, c)| p * c).sum();
    // c-transforms give a feasible dual pair
    let gt: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| cost[i * n + j] - f[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let ft: Vec<f64> = (0..m)
        .map(|i| (0..n).map(|j| cost[i * n + j] - gt[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let lower = a.iter().zip(&ft).map(|(w, v)| w * v).sum::<f64>()
        + b.iter().zip(&gt).map(|(w, v)| w * v).sum::<f64>();
    Ok(SinkhornSolution {
        plan,
        upper,
        lower,
        iterations,
        regs,
    })
}

/// Projects a nonnegative matrix onto the couplings of `(a, b)`: shrink
/// rows and columns that exceed their marginals, then add the rank-one
/// correction for the remaining deficit.
pub fn round_to_polytope(p: &mut [f64], a: &[f64], b: &[f64]) {
    let m = a.len();
    let n = b.len();
    for i in 0..m {
        let s: f64 = p[i * n..(i + 1) * n].iter().sum();
        if s > a[i] {
            let k = a[i] / s;
            p[i * n..(i + 1) * n].iter_mut().for_each(|v| *v *= k);
        }
    }
    for j in 0..n {
        let s: f64 = (0..m).map(|i| p[i * n + j]).sum();
        if s > b[j] {
            let k = b[j] / s;
            (0..m).for_each(|i| p[i * n + j] *= k);
        }
    }
    let er: Vec<f64> = (0..m)
        .map(|i| (a[i] - p[i * n..(i + 1) * n].iter().sum::<f64>()).max(0.0))
        .collect();
    let ec: Vec<f64> = (0..n)
        .map(|j| (b[j] - (0..m).map(|i| p[i * n + j]).sum::<f64>()).max(0.0))
        .collect();
    let tot: f64 = er.iter().sum();
    if tot > 0.0 {
        for i in 0..m {
            for j in 0..n {
                p[i * n + j] += er[i] * ec[j] / tot;
            }
        }
    }
}
