//! Regular lattices over axis-aligned cubes and box regions on them.

use crate::error::{invalid, Error, Result};

/// Points carry two coordinates; the second is ignored (and kept at 0) in d = 1.
pub type Point = [f64; 2];

/// Upper bound on `N^d`, the number of sites a lattice may hold.
pub const MAX_SITES: usize = 1 << 24;

/// `N^d` sites at the centers of the cells of `[origin, origin + side]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    d: usize,
    n: usize,
    origin: Point,
    side: f64,
}

impl Lattice {
    /// Lattice over the unit cube.
    pub fn unit(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, [0.0, 0.0], 1.0)
    }

    pub fn new(d: usize, n: usize, origin: Point, side: f64) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(invalid(format!("dimension {d} not supported (1 or 2)")));
        }
        if n < 2 {
            return Err(invalid("lattice needs at least 2 sites per side"));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid("lattice side must be positive"));
        }
        let sites = n.checked_pow(d as u32).unwrap_or(usize::MAX);
        if sites > MAX_SITES {
            return Err(Error::TooManySites { sites, limit: MAX_SITES });
        }
        let origin = if d == 1 { [origin[0], 0.0] } else { origin };
        Ok(Self { d, n, origin, side })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Sites per side.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn sites(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Row-major index of integer coordinates (`coords[1]` ignored in d = 1).
    pub fn index(&self, coords: [usize; 2]) -> usize {
        if self.d == 1 {
            coords[0]
        } else {
            coords[0] * self.n + coords[1]
        }
    }

    pub fn coords(&self, index: usize) -> [usize; 2] {
        if self.d == 1 {
            [index, 0]
        } else {
            [index / self.n, index % self.n]
        }
    }

    pub fn site_center(&self, index: usize) -> Point {
        let h = self.spacing();
        let c = self.coords(index);
        let mut p = [0.0; 2];
        for k in 0..self.d {
            p[k] = self.origin[k] + (c[k] as f64 + 0.5) * h;
        }
        p
    }

    /// Cell containing `p` under the half-open convention `[a, b)`; the upper
    /// domain face is assigned to the last cell.
    pub fn cell_of(&self, p: &Point) -> Option<usize> {
        let h = self.spacing();
        let mut c = [0usize; 2];
        for k in 0..self.d {
            let rel = (p[k] - self.origin[k]) / h;
            if !(rel >= 0.0) || rel > self.n as f64 {
                return None;
            }
            c[k] = (rel.floor() as usize).min(self.n - 1);
        }
        Some(self.index(c))
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.d).all(|k| p[k] >= self.origin[k] && p[k] <= self.origin[k] + self.side)
    }

    /// The whole lattice domain as a region.
    pub fn domain(&self) -> Region {
        let mut hi = self.origin;
        for k in 0..self.d {
            hi[k] += self.side;
        }
        Region { d: self.d, lo: self.origin, hi }
    }

    pub fn same_grid(&self, other: &Lattice) -> bool {
        self == other
    }
}

/// Axis-aligned box `[lo, hi]` in dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub d: usize,
    pub lo: Point,
    pub hi: Point,
}

impl Region {
    pub fn new(d: usize, lo: Point, hi: Point) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(invalid(format!("dimension {d} not supported")));
        }
        for k in 0..d {
            if !(hi[k] > lo[k]) {
                return Err(invalid("region must have positive extent"));
            }
        }
        Ok(Self { d, lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(1, [lo, 0.0], [hi, 0.0])
    }

    pub fn square(lo: Point, side: f64) -> Result<Self> {
        Self::new(2, lo, [lo[0] + side, lo[1] + side])
    }

    pub fn volume(&self) -> f64 {
        (0..self.d).map(|k| self.hi[k] - self.lo[k]).product()
    }

    /// Half-open membership `[lo, hi)`.
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.d).all(|k| p[k] >= self.lo[k] && p[k] < self.hi[k])
    }

    pub fn scaled(&self, factor: f64) -> Region {
        let mut r = self.clone();
        for k in 0..self.d {
            r.lo[k] *= factor;
            r.hi[k] *= factor;
        }
        r
    }
}
