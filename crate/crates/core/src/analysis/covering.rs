//! Covering sums `S_n(s) = sum_I mu(I)^s` over the level-n construction cells
//! of a self-similar set, and the critical exponent where `ln S_n(s)` stops
//! growing or decaying in `n`.
//!
//! Only the set's own construction grid is used as covering family, so the
//! critical exponent is an upper-bound proxy for the `mu`-Hausdorff dimension.

use std::collections::BTreeMap;

use rand::Rng;

use super::stats::{ols, percentile_interval, BootstrapSpec};
use crate::atomic::{log_sum_exp, AtomicMeasure};
use crate::chaos::LatticeMeasure;
use crate::error::{invalid, Error, Result};
use crate::lattice::Region;
use crate::par::map_indexed;
use crate::rng::{Purpose, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetSpec {
    /// Middle-thirds Cantor set in `[0, 1]`; level n has 2^n intervals of length 3^-n.
    Cantor,
    /// `[0, 1]` split into `base^n` intervals.
    Interval { base: usize },
    /// `[0, 1]^2` split into `base^n` squares per side.
    Square { base: usize },
}

impl SetSpec {
    pub fn dim(&self) -> usize {
        match self {
            SetSpec::Square { .. } => 2,
            _ => 1,
        }
    }

    /// Euclidean similarity dimension. Covering sums of masses locate
    /// `dimension() / d` for Lebesgue measure.
    pub fn dimension(&self) -> f64 {
        match self {
            SetSpec::Cantor => 2f64.ln() / 3f64.ln(),
            SetSpec::Interval { .. } => 1.0,
            SetSpec::Square { .. } => 2.0,
        }
    }

    /// Cells of the level-n covering, half-open `[lo, hi)`.
    pub fn cells(&self, n: u32) -> Result<Vec<Region>> {
        match *self {
            SetSpec::Cantor => {
                if n > 30 {
                    return Err(invalid("Cantor depth above 30"));
                }
                let mut iv = vec![(0.0f64, 1.0f64)];
                for _ in 0..n {
                    iv = iv
                        .into_iter()
                        .flat_map(|(a, b)| {
                            let l = (b - a) / 3.0;
                            [(a, a + l), (b - l, b)]
                        })
                        .collect();
                }
                iv.into_iter().map(|(a, b)| Region::interval(a, b)).collect()
            }
            SetSpec::Interval { base } => {
                let k = checked_count(base, n, 1)?;
                (0..k).map(|i| Region::interval(i as f64 / k as f64, (i + 1) as f64 / k as f64)).collect()
            }
            SetSpec::Square { base } => {
                let k = checked_count(base, n, 2)?;
                let side = 1.0 / k as f64;
                let mut out = Vec::with_capacity(k * k);
                for i in 0..k {
                    for j in 0..k {
                        out.push(Region::square([i as f64 * side, j as f64 * side], side)?);
                    }
                }
                Ok(out)
            }
        }
    }
}

fn checked_count(base: usize, n: u32, d: u32) -> Result<usize> {
    if base < 2 {
        return Err(invalid("grid base must be at least 2"));
    }
    base.checked_pow(n)
        .filter(|k| k.checked_pow(d).is_some_and(|c| c <= 1 << 24))
        .ok_or_else(|| invalid(format!("covering level {n} too deep")))
}

/// Measures that can report the masses of boxes.
pub trait CoverMeasure {
    fn dim(&self) -> usize;
    /// `ln mu(B)` per box (`-inf` for empty boxes).
    fn ln_masses(&self, boxes: &[Region]) -> Result<Vec<f64>>;
}

impl CoverMeasure for LatticeMeasure {
    fn dim(&self) -> usize {
        self.lattice().dim()
    }

    /// Boxes must be unions of whole cells.
    fn ln_masses(&self, boxes: &[Region]) -> Result<Vec<f64>> {
        let l = self.lattice();
        let h = l.spacing();
        let o = l.origin();
        for b in boxes {
            for k in 0..l.dim() {
                for v in [b.lo[k], b.hi[k]] {
                    let t = (v - o[k]) / h;
                    if (t - t.round()).abs() > 1e-6 {
                        return Err(invalid(format!(
                            "covering depth exceeds lattice resolution: box edge {v} is not on a cell boundary"
                        )));
                    }
                }
            }
        }
        boxes.iter().map(|b| self.measure_box(b).map(f64::ln)).collect()
    }
}

impl CoverMeasure for AtomicMeasure {
    fn dim(&self) -> usize {
        AtomicMeasure::dim(self)
    }

    fn ln_masses(&self, boxes: &[Region]) -> Result<Vec<f64>> {
        if self.dim() == 1 {
            let mut order: Vec<usize> = (0..self.len()).collect();
            let pos = self.positions();
            order.sort_by(|&a, &b| pos[a][0].total_cmp(&pos[b][0]));
            let xs: Vec<f64> = order.iter().map(|&i| pos[i][0]).collect();
            let lm = self.ln_masses();
            Ok(boxes
                .iter()
                .map(|b| {
                    let start = xs.partition_point(|&x| x < b.lo[0]);
                    let end = xs.partition_point(|&x| x < b.hi[0]);
                    let v: Vec<f64> = order[start..end].iter().map(|&i| lm[i]).collect();
                    log_sum_exp(&v)
                })
                .collect())
        } else {
            Ok(boxes.iter().map(|b| self.ln_measure_box(b)).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringSumTable {
    pub set: SetSpec,
    pub s_grid: Vec<f64>,
    pub levels: Vec<u32>,
    /// `ln S_n(s)`, `[level][s]`.
    pub ln_sums: Vec<Vec<f64>>,
}

impl CoveringSumTable {
    pub fn sum(&self, level_index: usize, s_index: usize) -> f64 {
        self.ln_sums[level_index][s_index].exp()
    }
}

/// `ln sum_I exp(s ln mu(I))`, with `0^0 = 1` so that `s = 0` counts every cell.
pub fn ln_power_sum(ln_masses: &[f64], s: f64) -> f64 {
    if s == 0.0 {
        return (ln_masses.len() as f64).ln();
    }
    let terms: Vec<f64> = ln_masses.iter().map(|&l| if l == f64::NEG_INFINITY { l } else { s * l }).collect();
    log_sum_exp(&terms)
}

pub fn covering_sums(measure: &dyn CoverMeasure, set: SetSpec, levels: &[u32], s_grid: &[f64]) -> Result<CoveringSumTable> {
    if measure.dim() != set.dim() {
        return Err(Error::LatticeMismatch);
    }
    if levels.is_empty() || s_grid.is_empty() {
        return Err(Error::Empty("covering levels and exponents".into()));
    }
    let mut ln_sums = Vec::with_capacity(levels.len());
    for &n in levels {
        let cells = set.cells(n)?;
        let lm = measure.ln_masses(&cells)?;
        ln_sums.push(s_grid.iter().map(|&s| ln_power_sum(&lm, s)).collect());
    }
    Ok(CoveringSumTable { set, s_grid: s_grid.to_vec(), levels: levels.to_vec(), ln_sums })
}

/// Replica average `ln mean_r S_n^{(r)}(s)` per level. Tables may cover
/// different levels; each level averages the tables that contain it.
pub fn annealed(tables: &[&CoveringSumTable]) -> Result<CoveringSumTable> {
    let first = tables.first().ok_or_else(|| Error::Empty("no covering tables".into()))?;
    let mut acc: BTreeMap<u32, Vec<Vec<f64>>> = BTreeMap::new();
    for t in tables {
        if t.s_grid != first.s_grid || t.set != first.set {
            return Err(invalid("covering tables disagree on set or exponent grid"));
        }
        for (li, &n) in t.levels.iter().enumerate() {
            acc.entry(n).or_default().push(t.ln_sums[li].clone());
        }
    }
    let mut levels = Vec::new();
    let mut ln_sums = Vec::new();
    for (n, rows) in acc {
        let r = rows.len() as f64;
        let row: Vec<f64> = (0..first.s_grid.len())
            .map(|si| {
                let col: Vec<f64> = rows.iter().map(|v| v[si]).collect();
                log_sum_exp(&col) - r.ln()
            })
            .collect();
        levels.push(n);
        ln_sums.push(row);
    }
    Ok(CoveringSumTable { set: first.set, s_grid: first.s_grid.clone(), levels, ln_sums })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionEstimate {
    pub s_star: f64,
    /// Slope of `ln S_n(s)` against `n` for each `s`.
    pub slopes: Vec<(f64, f64)>,
    pub ci: Option<(f64, f64)>,
}

/// Exponent where the slope of `ln S_n(s)` in `n` changes sign, by linear
/// interpolation between the bracketing grid values.
pub fn dimension_estimate(table: &CoveringSumTable) -> Result<DimensionEstimate> {
    if table.levels.len() < 3 {
        return Err(invalid("dimension estimate needs at least 3 covering levels"));
    }
    if table.s_grid.len() < 5 {
        return Err(invalid("dimension estimate needs at least 5 exponents"));
    }
    let x: Vec<f64> = table.levels.iter().map(|&n| n as f64).collect();
    let mut slopes = Vec::with_capacity(table.s_grid.len());
    for (si, &s) in table.s_grid.iter().enumerate() {
        let y: Vec<f64> = table.ln_sums.iter().map(|row| row[si]).collect();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("covering sum at s = {s}")));
        }
        slopes.push((s, ols(&x, &y)?.slope));
    }
    for w in slopes.windows(2) {
        let ((s0, a0), (s1, a1)) = (w[0], w[1]);
        if a0 >= 0.0 && a1 < 0.0 {
            let s_star = if a0 == 0.0 { s0 } else { s0 + (s1 - s0) * a0 / (a0 - a1) };
            return Ok(DimensionEstimate { s_star, slopes, ci: None });
        }
    }
    Err(invalid("exponent grid does not bracket a sign change of the covering slope"))
}

/// Annealed estimate with a replica bootstrap interval. Replicas are
/// resampled within groups of tables covering the same levels.
pub fn dimension_with_ci(tables: &[CoveringSumTable], boot: BootstrapSpec, level: f64) -> Result<DimensionEstimate> {
    let refs: Vec<&CoveringSumTable> = tables.iter().collect();
    let mut est = dimension_estimate(&annealed(&refs)?)?;
    let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for (i, t) in tables.iter().enumerate() {
        groups.entry(t.levels.clone()).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let reps = map_indexed(boot.resamples, |b| {
        let mut rng = RngStream::new(boot.seed, b as u64, 0, Purpose::Bootstrap).rng();
        let mut picked = Vec::with_capacity(tables.len());
        for g in &groups {
            for _ in 0..g.len() {
                picked.push(&tables[g[rng.random_range(0..g.len())]]);
            }
        }
        annealed(&picked).and_then(|t| dimension_estimate(&t)).map(|e| e.s_star).unwrap_or(f64::NAN)
    });
    let finite: Vec<f64> = reps.into_iter().filter(|v| v.is_finite()).collect();
    if !finite.is_empty() {
        est.ci = Some(percentile_interval(&finite, level));
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn s_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    }

    #[test]
    fn lebesgue_cantor_sums_are_classical() {
        let lattice = Lattice::unit(1, 729 * 4).unwrap();
        let m = LatticeMeasure::lebesgue(&lattice);
        let d = 2f64.ln() / 3f64.ln();
        let t = covering_sums(&m, SetSpec::Cantor, &[1, 2, 3, 4, 5, 6], &[0.0, d, 1.0]).unwrap();
        for (li, &n) in t.levels.iter().enumerate() {
            assert!((t.sum(li, 0) - 2f64.powi(n as i32)).abs() < 1e-9);
            assert!((t.sum(li, 1) - 1.0).abs() < 1e-9);
            assert!((t.sum(li, 2) - (2.0f64 / 3.0).powi(n as i32)).abs() < 1e-9);
        }
    }

    #[test]
    fn lebesgue_dimensions() {
        let lattice = Lattice::unit(1, 729 * 4).unwrap();
        let m = LatticeMeasure::lebesgue(&lattice);
        let t = covering_sums(&m, SetSpec::Cantor, &[2, 3, 4, 5, 6], &s_grid(0.3, 0.9, 13)).unwrap();
        let e = dimension_estimate(&t).unwrap();
        assert!((e.s_star - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        let t = covering_sums(&m, SetSpec::Interval { base: 3 }, &[2, 3, 4, 5, 6], &s_grid(0.6, 1.4, 9)).unwrap();
        assert!((dimension_estimate(&t).unwrap().s_star - 1.0).abs() < 1e-9);
        assert!(covering_sums(&m, SetSpec::Cantor, &[8], &[0.5]).is_err());
        let narrow = covering_sums(&m, SetSpec::Cantor, &[2, 3, 4], &s_grid(0.7, 0.9, 5)).unwrap();
        assert!(dimension_estimate(&narrow).is_err());
    }

    #[test]
    fn lebesgue_square() {
        let lattice = Lattice::unit(2, 64).unwrap();
        let m = LatticeMeasure::lebesgue(&lattice);
        // Mass exponents are dimension / d.
        let t = covering_sums(&m, SetSpec::Square { base: 2 }, &[1, 2, 3, 4], &s_grid(0.5, 1.5, 5)).unwrap();
        assert!((dimension_estimate(&t).unwrap().s_star - 1.0).abs() < 1e-9);
    }

    #[test]
    fn annealing_averages_per_level() {
        let mk = |levels: Vec<u32>, v: f64| CoveringSumTable {
            set: SetSpec::Cantor,
            s_grid: vec![1.0],
            levels: levels.clone(),
            ln_sums: levels.iter().map(|_| vec![v.ln()]).collect(),
        };
        let a = mk(vec![1, 2], 1.0);
        let b = mk(vec![2], 3.0);
        let t = annealed(&[&a, &b]).unwrap();
        assert_eq!(t.levels, vec![1, 2]);
        assert!((t.ln_sums[0][0] - 0.0).abs() < 1e-15);
        assert!((t.ln_sums[1][0] - 2f64.ln()).abs() < 1e-15);
    }
}
