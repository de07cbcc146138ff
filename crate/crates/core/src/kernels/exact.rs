//! Closed forms for the exact-scale families, written in units where `T = 1`.
//!
//! Both come from `ln+(1/r) = c * int (t - phi(r))_+ nu(dt)` with
//! `nu = 1_[0,1] dt/t^2 + delta_1`, split at `t = phi(1/n)`:
//! d = 1 uses `phi(r) = r`, `c = 1` (triangle functions), d = 2 uses
//! `phi(r) = sqrt(r)`, `c = 2` (Pasenchenko's kernel).

use super::LevelRange;

#[derive(Clone, Copy, Debug)]
pub(super) enum Profile {
    Linear,
    SquareRoot,
}

impl Profile {
    fn phi(self, r: f64) -> f64 {
        match self {
            Profile::Linear => r,
            Profile::SquareRoot => r.sqrt(),
        }
    }

    fn weight(self) -> f64 {
        match self {
            Profile::Linear => 1.0,
            Profile::SquareRoot => 2.0,
        }
    }
}

pub(super) fn partial(p: Profile, n: u32, r: f64) -> f64 {
    let nf = n as f64;
    if r > 1.0 {
        0.0
    } else if r * nf >= 1.0 {
        -r.ln()
    } else {
        nf.ln() + p.weight() * (1.0 - p.phi(nf * r))
    }
}

pub(super) fn increment(p: Profile, n: u32, r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let rho = p.phi(r);
    if n == 1 {
        return p.weight() * (1.0 - rho).max(0.0);
    }
    let a = p.phi(1.0 / n as f64);
    let b = p.phi(1.0 / (n - 1) as f64);
    let v = if rho <= a {
        (b / a).ln() - rho * (1.0 / a - 1.0 / b)
    } else if rho < b {
        (b / rho).ln() - 1.0 + rho / b
    } else {
        0.0
    };
    p.weight() * v.max(0.0)
}

pub(super) fn range(p: Profile, range: LevelRange, r: f64) -> f64 {
    let (lo, hi) = (range.n_min(), range.n_max());
    if lo == hi {
        increment(p, lo, r)
    } else if lo == 1 {
        partial(p, hi, r)
    } else {
        (partial(p, hi, r) - partial(p, lo - 1, r)).max(0.0)
    }
}

pub(super) fn cutoff(p: Profile, l: f64, r: f64) -> f64 {
    if r > 1.0 {
        0.0
    } else if r >= l {
        -r.ln()
    } else {
        (1.0 / l).ln() + p.weight() * (1.0 - p.phi(r / l))
    }
}
