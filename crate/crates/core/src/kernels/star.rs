//! Star-scale kernels. With `v = ln u` the level sum over `m..=n` becomes
//! `int_{m ln 2}^{(n+1) ln 2} k(r e^v) dv`, a smooth integrand on a finite interval.

use super::{LevelRange, SeedKernel};
use crate::error::Result;
use crate::quad::{integrate, Tolerance};

const LN2: f64 = std::f64::consts::LN_2;

pub(super) fn range(seed: SeedKernel, range: LevelRange, r: f64) -> Result<f64> {
    let lo = range.n_min() as f64 * LN2;
    let hi = (range.n_max() as f64 + 1.0) * LN2;
    if r == 0.0 {
        return Ok(hi - lo);
    }
    // Past this point the seed is below 1e-17.
    let cut = (seed.negligible_beyond() / r).ln();
    if cut <= lo {
        return Ok(0.0);
    }
    let hi = hi.min(cut);
    let est = integrate(|v| seed.eval(r * v.exp()), lo, hi, Tolerance::rel(1e-10))?;
    Ok(est.value)
}

pub(super) fn limit(seed: SeedKernel, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    let lo = LN2;
    let cut = (seed.negligible_beyond() / r).ln();
    if cut <= lo {
        return Ok(0.0);
    }
    let est = integrate(|v| seed.eval(r * v.exp()), lo, cut, Tolerance::rel(1e-10))?;
    Ok(est.value)
}
