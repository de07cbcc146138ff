//! Dirichlet heat kernel of the unit square and the time-slice decomposition
//! of its Green function `G(x, y) = pi * int_0^inf p_D(t, x, y) dt`.
//!
//! `p_D` is the transition density of Brownian motion (generator `Delta/2`)
//! killed on the boundary; it factorizes into two one-dimensional kernels on
//! `[0, 1]`. Each of those is evaluated by the method of images for `t <= 1/2`
//! and by the sine eigenfunction series above, so both series converge in a
//! handful of terms. Slice integrals use composite Gauss-Legendre in `ln t`.

use std::f64::consts::PI;

use super::LevelRange;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Point};
use crate::quad::composite_rule;

const SWITCH_T: f64 = 0.5;
/// Beyond this time the remaining integral is taken from the eigen expansion.
const TAIL_FACTOR: f64 = 16.0;
const PANEL_WIDTH: f64 = 0.5;
const PANEL_ORDER: usize = 8;

pub(crate) fn check_interior(p: &Point) -> Result<()> {
    if p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDomain(vec![p[0], p[1]]))
    }
}

/// One-dimensional Dirichlet heat kernel on `[0, 1]` for Brownian motion.
pub fn heat_kernel_1d(t: f64, x: f64, y: f64) -> f64 {
    if t <= SWITCH_T {
        let norm = 1.0 / (2.0 * PI * t).sqrt();
        let k_max = 1 + ((80.0 * t).sqrt() / 2.0).ceil() as i32;
        let mut s = 0.0;
        for k in -k_max..=k_max {
            let shift = 2.0 * k as f64;
            let a = x - y + shift;
            let b = x + y + shift;
            s += (-a * a / (2.0 * t)).exp() - (-b * b / (2.0 * t)).exp();
        }
        (s * norm).max(0.0)
    } else {
        let mut s = 0.0;
        for m in 1..200 {
            let mf = m as f64;
            let decay = (-mf * mf * PI * PI * t / 2.0).exp();
            if decay < 1e-18 {
                break;
            }
            s += 2.0 * (mf * PI * x).sin() * (mf * PI * y).sin() * decay;
        }
        s.max(0.0)
    }
}

pub fn heat_kernel_square(t: f64, x: &Point, y: &Point) -> f64 {
    heat_kernel_1d(t, x[0], y[0]) * heat_kernel_1d(t, x[1], y[1])
}

/// Time interval covered by a level range: `[t0 4^-n_max, t0 4^-(n_min-1)]`,
/// open-ended above when `n_min == 1`.
pub fn time_window(t0: f64, range: LevelRange) -> (f64, Option<f64>) {
    let lo = t0 * 4f64.powi(-(range.n_max() as i32));
    let hi = if range.n_min() == 1 {
        None
    } else {
        Some(t0 * 4f64.powi(-(range.n_min() as i32 - 1)))
    };
    (lo, hi)
}

/// Nodes `(t, weight)` such that `sum w p(t) ~ int p(t) dt` over the window,
/// excluding the analytic tail (see [`tail_integral`]).
fn time_nodes(t0: f64, range: LevelRange) -> (Vec<(f64, f64)>, Option<f64>) {
    let (lo, hi) = time_window(t0, range);
    let (top, tail_from) = match hi {
        Some(h) => (h, None),
        None => {
            let cap = TAIL_FACTOR * t0.max(lo);
            (cap, Some(cap))
        }
    };
    let (ulo, uhi) = (lo.ln(), top.ln());
    let panels = (((uhi - ulo) / PANEL_WIDTH).ceil() as usize).max(1);
    let nodes = composite_rule(ulo, uhi, panels, PANEL_ORDER)
        .into_iter()
        .map(|(u, w)| {
            let t = u.exp();
            (t, w * t)
        })
        .collect();
    (nodes, tail_from)
}

/// Eigen modes `(m1 pi, m2 pi, weight)` contributing to
/// `int_{from}^inf p_D(t, x, y) dt`; the integral is exact per mode.
fn tail_modes(from: f64) -> Vec<(f64, f64, f64)> {
    let mut modes = Vec::new();
    for m1 in 1..12 {
        for m2 in 1..12 {
            let lam = PI * PI * ((m1 * m1 + m2 * m2) as f64) / 2.0;
            let w = (-lam * from).exp() / lam;
            if w >= 1e-20 {
                modes.push((m1 as f64 * PI, m2 as f64 * PI, w));
            }
        }
    }
    modes
}

fn tail_integral(modes: &[(f64, f64, f64)], x: &Point, y: &Point) -> f64 {
    modes
        .iter()
        .map(|&(a, b, w)| 4.0 * (a * x[0]).sin() * (a * y[0]).sin() * (b * x[1]).sin() * (b * y[1]).sin() * w)
        .sum()
}

pub(crate) fn range_integral(t0: f64, range: LevelRange, x: &Point, y: &Point) -> Result<f64> {
    let (nodes, tail_from) = time_nodes(t0, range);
    let mut s = 0.0;
    for (t, w) in nodes {
        s += w * heat_kernel_square(t, x, y);
    }
    if let Some(from) = tail_from {
        s += tail_integral(&tail_modes(from), x, y);
    }
    Ok((PI * s).max(0.0))
}

/// Full Green function for `x != y`, summed slice by slice until the slices
/// are far below the diagonal scale `|x - y|^2`.
pub(crate) fn green(t0: f64, x: &Point, y: &Point) -> Result<f64> {
    let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    let mut n = 1;
    while t0 * 4f64.powi(-(n as i32)) > r2 / 80.0 && n < 60 {
        n += 1;
    }
    range_integral(t0, LevelRange::upto(n)?, x, y)
}

/// Dense covariance matrix `[sum_{p in range} q_p(x_i, x_j)]` over the lattice
/// sites, row-major. The lattice must sit strictly inside the unit square.
pub fn gram_matrix(t0: f64, range: LevelRange, lattice: &Lattice) -> Result<Vec<f64>> {
    if lattice.dim() != 2 {
        return Err(crate::error::invalid("gff-square lattice must be two-dimensional"));
    }
    let n = lattice.resolution();
    let h = lattice.spacing();
    let o = lattice.origin();
    let xs: Vec<f64> = (0..n).map(|i| o[0] + (i as f64 + 0.5) * h).collect();
    let ys: Vec<f64> = (0..n).map(|i| o[1] + (i as f64 + 0.5) * h).collect();
    for &v in xs.iter().chain(&ys) {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::OutsideDomain(vec![v]));
        }
    }
    gram_matrix_general(t0, range, lattice, &xs, &ys)
}

fn gram_matrix_general(
    t0: f64,
    range: LevelRange,
    lattice: &Lattice,
    xs: &[f64],
    ys: &[f64],
) -> Result<Vec<f64>> {
    let n = lattice.resolution();
    let sites = lattice.sites();
    let (nodes, tail_from) = time_nodes(t0, range);
    let mut gram = vec![0.0; sites * sites];
    let mut tx = vec![0.0; n * n];
    let mut ty = vec![0.0; n * n];
    for (t, w) in nodes {
        for a in 0..n {
            for b in 0..n {
                tx[a * n + b] = heat_kernel_1d(t, xs[a], xs[b]);
                ty[a * n + b] = heat_kernel_1d(t, ys[a], ys[b]);
            }
        }
        let wpi = PI * w;
        for i in 0..sites {
            let (a1, a2) = (i / n, i % n);
            let row = &mut gram[i * sites..(i + 1) * sites];
            for j in i..sites {
                let (b1, b2) = (j / n, j % n);
                row[j] += wpi * tx[a1 * n + b1] * ty[a2 * n + b2];
            }
        }
    }
    let modes = tail_from.map(tail_modes).unwrap_or_default();
    if !modes.is_empty() {
        for i in 0..sites {
            let (a1, a2) = (i / n, i % n);
            let p = [xs[a1], ys[a2]];
            for j in i..sites {
                let (b1, b2) = (j / n, j % n);
                let q = [xs[b1], ys[b2]];
                gram[i * sites + j] += PI * tail_integral(&modes, &p, &q);
            }
        }
    }
    for i in 0..sites {
        for j in 0..i {
            gram[i * sites + j] = gram[j * sites + i];
        }
    }
    Ok(gram)
}
