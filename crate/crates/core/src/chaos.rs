//! Lattice approximations `M_n` of Gaussian multiplicative chaos.
//!
//! Each cell carries `h^d exp(gamma X(c) - gamma^2/2 Var X(c))`, with `X`
//! collocated at the cell center. Boxes are snapped to cells by the rule
//! "cell center in `[lo, hi)`".

use crate::error::{invalid, Error, Result};
use crate::field::FieldGrid;
use crate::lattice::{Lattice, Region};
use crate::par::tree_sum;

#[derive(Clone, Debug, PartialEq)]
pub struct ChaosMeta {
    pub gamma2: f64,
    pub level: u32,
    /// Free-form provenance, e.g. kernel tag and seed path.
    pub source: String,
}

#[derive(Clone, Debug)]
pub struct LatticeMeasure {
    lattice: Lattice,
    masses: Vec<f64>,
    meta: ChaosMeta,
}

/// `xi(q) = (d + gamma^2/2) q - (gamma^2/2) q^2`.
pub fn xi(gamma2: f64, d: usize, q: f64) -> f64 {
    (d as f64 + gamma2 / 2.0) * q - gamma2 / 2.0 * q * q
}

/// Upper end `2d / gamma^2` of the range where positive moments of `M` are finite.
pub fn moment_bound(gamma2: f64, d: usize) -> f64 {
    2.0 * d as f64 / gamma2
}

pub fn build_chaos(field: &FieldGrid, gamma2: f64) -> Result<LatticeMeasure> {
    if !(gamma2 >= 0.0 && gamma2.is_finite()) {
        return Err(invalid(format!("gamma^2 must be nonnegative, got {gamma2}")));
    }
    let lattice = field.lattice();
    let d = lattice.dim();
    if gamma2 >= 2.0 * d as f64 {
        log::warn!("gamma^2 = {gamma2} >= 2d: the limiting chaos is degenerate");
    }
    let gamma = gamma2.sqrt();
    let vol = lattice.cell_volume();
    let var = field.variance();
    let mut masses = Vec::with_capacity(lattice.sites());
    for (i, &x) in field.values().iter().enumerate() {
        let m = vol * (gamma * x - 0.5 * gamma2 * var.at(i)).exp();
        if !m.is_finite() {
            return Err(Error::NonFinite(format!("chaos mass at site {i}")));
        }
        masses.push(m);
    }
    let meta = ChaosMeta { gamma2, level: field.level(), source: String::new() };
    Ok(LatticeMeasure { lattice: lattice.clone(), masses, meta })
}

impl LatticeMeasure {
    /// Measure from explicit nonnegative cell masses.
    pub fn from_masses(lattice: &Lattice, masses: Vec<f64>, meta: ChaosMeta) -> Result<Self> {
        if masses.len() != lattice.sites() {
            return Err(Error::LatticeMismatch);
        }
        if let Some(i) = masses.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::NonFinite(format!("cell mass {i} = {}", masses[i])));
        }
        Ok(Self { lattice: lattice.clone(), masses, meta })
    }

    /// Lebesgue measure on the lattice.
    pub fn lebesgue(lattice: &Lattice) -> Self {
        let meta = ChaosMeta { gamma2: 0.0, level: 0, source: "lebesgue".into() };
        Self { lattice: lattice.clone(), masses: vec![lattice.cell_volume(); lattice.sites()], meta }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.meta.source = source.into();
        self
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn meta(&self) -> &ChaosMeta {
        &self.meta
    }

    pub fn total_mass(&self) -> f64 {
        tree_sum(&self.masses)
    }

    /// Largest cell mass relative to the total.
    pub fn max_cell_share(&self) -> f64 {
        let max = self.masses.iter().cloned().fold(0.0, f64::max);
        max / self.total_mass()
    }

    /// Integer cell ranges `[a_k, b_k)` per axis of the snapped box.
    pub fn snap(&self, region: &Region) -> Result<[(usize, usize); 2]> {
        snap(&self.lattice, region)
    }

    pub fn measure_box(&self, region: &Region) -> Result<f64> {
        let r = self.snap(region)?;
        let n = self.lattice.resolution();
        if self.lattice.dim() == 1 {
            return Ok(tree_sum(&self.masses[r[0].0..r[0].1]));
        }
        let mut rows = Vec::with_capacity(r[0].1 - r[0].0);
        for i in r[0].0..r[0].1 {
            rows.push(tree_sum(&self.masses[i * n + r[1].0..i * n + r[1].1]));
        }
        Ok(tree_sum(&rows))
    }

    /// Masses of the `b^d` blocks of a regular partition with `b` blocks per
    /// side, row-major. `b` must divide the resolution.
    pub fn block_masses(&self, b: usize) -> Result<Vec<f64>> {
        block_sums(&self.lattice, &self.masses, b)
    }
}

pub(crate) fn snap(lattice: &Lattice, region: &Region) -> Result<[(usize, usize); 2]> {
    if region.d != lattice.dim() {
        return Err(Error::LatticeMismatch);
    }
    let h = lattice.spacing();
    let n = lattice.resolution();
    let o = lattice.origin();
    let mut out = [(0, 1); 2];
    for k in 0..lattice.dim() {
        // First and one-past-last cell whose center c = o + (i + 1/2) h is in [lo, hi).
        let first = ((region.lo[k] - o[k]) / h - 0.5).ceil().max(0.0);
        let end = ((region.hi[k] - o[k]) / h - 0.5).ceil().min(n as f64);
        if !(end > first) {
            return Err(Error::Empty(format!("box {region:?} contains no cell center")));
        }
        out[k] = (first as usize, end as usize);
    }
    Ok(out)
}

pub(crate) fn block_sums(lattice: &Lattice, masses: &[f64], b: usize) -> Result<Vec<f64>> {
    let n = lattice.resolution();
    if b == 0 || !n.is_multiple_of(b) {
        return Err(invalid(format!("{b} blocks per side do not divide resolution {n}")));
    }
    let w = n / b;
    if lattice.dim() == 1 {
        return Ok(masses.chunks_exact(w).map(tree_sum).collect());
    }
    let mut out = vec![0.0; b * b];
    let mut row_parts = vec![0.0; w];
    for bi in 0..b {
        for bj in 0..b {
            for (r, slot) in row_parts.iter_mut().enumerate() {
                let i = bi * w + r;
                *slot = tree_sum(&masses[i * n + bj * w..i * n + (bj + 1) * w]);
            }
            out[bi * b + bj] = tree_sum(&row_parts);
        }
    }
    Ok(out)
}

/// Masses of the boxes `[0, lambda)^d` anchored at the lattice origin for
/// cell counts `w` per side (`lambda = w h`), computed from one running sum.
pub fn corner_box_masses(m: &LatticeMeasure, widths: &[usize]) -> Result<Vec<f64>> {
    let n = m.lattice.resolution();
    let mut out = Vec::with_capacity(widths.len());
    for &w in widths {
        if w == 0 || w > n {
            return Err(invalid(format!("box width {w} outside 1..={n}")));
        }
        let s = if m.lattice.dim() == 1 {
            tree_sum(&m.masses[..w])
        } else {
            let rows: Vec<f64> = (0..w).map(|i| tree_sum(&m.masses[i * n..i * n + w])).collect();
            tree_sum(&rows)
        };
        out.push(s);
    }
    Ok(out)
}
