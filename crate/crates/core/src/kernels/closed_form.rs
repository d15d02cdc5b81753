//! Closed radial reductions of the retarded kernel and the initial layer.
//!
//! For a radial mollifier profile `p` with cumulative `P(s) = int_0^s u p`,
//! the mollified retarded kernel is
//! `Y(t, r) = (P(r + t) - P(|r - t|)) / (2 r)` and the initial-layer
//! potential `M = p * P(t, .)` with `P(t, x) = 1{|x| > t} / (4 pi |x|)` is
//! `M(t, r) = J(t, r) / (2 r)` where `J` has the closed antiderivative
//! `[P2(r + s) - P2_odd(s - r)]` between `max(t, r - S)` and `r + S`.
//! Derivatives follow from `w(u) = u p(|u|)`.

use super::mollifier::RadialProfile;
use std::f64::consts::PI;

/// Value and derivatives of `Y` at one `(t, r)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct YDerivs {
    pub y: f64,
    pub yt: f64,
    pub yr: f64,
    pub ytt: f64,
    pub ytr: f64,
    pub yrr: f64,
}

/// Value and derivatives of the initial-layer potential `M`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MDerivs {
    pub m: f64,
    pub mt: f64,
    pub mr: f64,
    pub mtr: f64,
    pub mrr: f64,
}

pub fn y_derivs(p: &RadialProfile, t: f64, r: f64) -> YDerivs {
    let s = p.support();
    if (r - t).abs() >= s {
        return YDerivs::default();
    }
    if r == 0.0 {
        let (f, f1, _) = p.eval(t);
        let ytt = p.w2(t);
        return YDerivs {
            y: t * f,
            yt: f + t * f1,
            yr: 0.0,
            ytt,
            ytr: 0.0,
            yrr: ytt / 3.0,
        };
    }
    let a = r + t;
    let b = r - t;
    let inv = 0.5 / r;
    let y = (p.cum(a) - p.cum(b.abs())) * inv;
    let (wa, wb) = (p.w(a), p.w(b));
    let (w1a, w1b) = (p.w1(a), p.w1(b));
    let yt = (wa + wb) * inv;
    let yr = -y / r + (wa - wb) * inv;
    let ytt = (w1a - w1b) * inv;
    let ytr = -yt / r + (w1a + w1b) * inv;
    let yrr = y / (r * r) - yr / r - (wa - wb) * inv / r + (w1a - w1b) * inv;
    YDerivs {
        y,
        yt,
        yr,
        ytt,
        ytr,
        yrr,
    }
}

/// `J(t, r) = int_{max(t, r-S)}^{r+S} [P(r+s) - P(|r-s|)] ds` in closed form.
pub fn j_closed(p: &RadialProfile, t: f64, r: f64) -> f64 {
    let s = p.support();
    let lo = t.max(r - s);
    let hi = r + s;
    if lo >= hi {
        return 0.0;
    }
    let g = |u: f64| p.cum2(r + u) - p.cum2_odd(u - r);
    g(hi) - g(lo)
}

pub fn m_derivs(p: &RadialProfile, t: f64, r: f64) -> MDerivs {
    let s = p.support();
    if r == 0.0 {
        let (f, _, _) = p.eval(t);
        return MDerivs {
            m: p.cum_max() - p.cum(t),
            mt: -t * f,
            mr: 0.0,
            mtr: 0.0,
            mrr: -p.w1(t) / 3.0,
        };
    }
    if r <= t - s {
        return MDerivs::default();
    }
    let yd = y_derivs(p, t, r);
    if r >= t + s {
        let m = 1.0 / (4.0 * PI * r);
        return MDerivs {
            m,
            mt: 0.0,
            mr: -m / r,
            mtr: 0.0,
            mrr: 2.0 * m / (r * r),
        };
    }
    let j = j_closed(p, t, r);
    let jr = 2.0 * p.cum_max() - p.cum(r + t) - p.cum((r - t).abs());
    let jrr = -2.0 * r * yd.yt;
    let m = j / (2.0 * r);
    let mr = -m / r + jr / (2.0 * r);
    let mrr = m / (r * r) - mr / r - jr / (2.0 * r * r) + jrr / (2.0 * r);
    MDerivs {
        m,
        mt: -yd.y,
        mr,
        mtr: -yd.yr,
        mrr,
    }
}
