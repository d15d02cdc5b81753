//! Retarded memory integrals along one source trajectory.
//!
//! The integral over source time `s in [0, t]` is split into the history
//! segments (plus a possibly shorter tail segment ending at `t`) and each
//! segment uses Simpson's rule with the midpoint state from cubic Hermite
//! interpolation. The windowed path visits only segments that can meet the
//! kernel shell; skipped segments contribute exact zeros in the brute path,
//! so both paths add identical terms in identical order.

use super::history::{NodeState, TrajectoryHistory};
use super::velocity;
use crate::kernels::{KernelSample, RadialKernel};
use crate::vec3::Vec3;

/// Quadrature points of one source: history nodes `0..=last`, then `tail`.
pub(crate) struct SourcePath<'a> {
    pub hist: &'a TrajectoryHistory,
    pub j: usize,
    pub last: usize,
    pub tail: Option<(&'a NodeState, f64)>,
}

impl SourcePath<'_> {
    #[inline]
    fn len(&self) -> usize {
        self.last + 1 + usize::from(self.tail.is_some())
    }

    #[inline]
    fn point(&self, p: usize) -> (&NodeState, f64) {
        if p <= self.last {
            (self.hist.node(p, self.j), p as f64 * self.hist.dt)
        } else {
            self.tail.unwrap()
        }
    }
}

/// First index in `0..n` where the decreasing predicate turns false.
#[inline]
fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Segment range `[lo, hi)` that can meet the shell `|g| < support`, where
/// `g(s) = (t - s) - |target - x_j(s)|` is strictly decreasing.
#[inline]
fn window(kernel: &RadialKernel, target: Vec3, t: f64, path: &SourcePath) -> (usize, usize) {
    let np = path.len();
    let reach = kernel.support + path.hist.dt;
    let g = |p: usize| {
        let (s, ts) = path.point(p);
        (t - ts) - (target - s.x).norm()
    };
    let p1 = partition(np, |p| g(p) >= reach);
    let lo = p1.saturating_sub(1);
    let p2 = partition(np, |p| g(p) > -reach);
    let hi = p2.min(np - 1);
    (lo, hi.max(lo))
}

/// Visits every quadrature point with `(weight, kernel sample, v(xi_j))`.
#[inline]
pub(crate) fn integrate_source<F>(
    kernel: &RadialKernel,
    target: Vec3,
    t: f64,
    path: &SourcePath,
    windowed: bool,
    mut acc: F,
) where
    F: FnMut(f64, &KernelSample, Vec3),
{
    let np = path.len();
    if np < 2 {
        return;
    }
    let (lo, hi) = if windowed {
        window(kernel, target, t, path)
    } else {
        (0, np - 1)
    };
    let mut left: Option<(KernelSample, Vec3)> = None;
    for m in lo..hi {
        let (a, sa) = path.point(m);
        let (b, sb) = path.point(m + 1);
        let h = sb - sa;
        let (ls, lu) = match left.take() {
            Some(v) => v,
            None => (kernel.sample(t - sa, target - a.x), a.vel),
        };
        let (xm, xim) = NodeState::midpoint(a, b, h);
        let ms = kernel.sample(t - (sa + 0.5 * h), target - xm);
        let rs = kernel.sample((t - sb).max(0.0), target - b.x);
        let w = h / 6.0;
        acc(w, &ls, lu);
        acc(4.0 * w, &ms, velocity(xim));
        acc(w, &rs, b.vel);
        left = Some((rs, b.vel));
    }
}
