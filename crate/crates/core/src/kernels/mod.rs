//! Sigma-positive covariance kernels `K = sum_n q_n` with partial sums `k_n`.
//!
//! Kernels are stored with unit coupling: `K(x, y) = ln+(T / |x - y|) + g`.
//! The coupling `gamma` only enters when a chaos measure is built.
//!
//! Families:
//!
//! * `ExactScale1D` / `ExactScale2D`: closed-form piecewise partial sums with
//!   cutoff `T / n` at level `n`, exactly scale invariant.
//! * `StarScale`: `q_n(x) = int_{2^n}^{2^{n+1}} k(x u / T) / u du` for a seed
//!   kernel `k` (Gaussian by default), computed by adaptive quadrature.
//! * `GffSquare`: Dirichlet Green function of the unit square split into heat
//!   kernel time slices `[4^-n t0, 4^-(n-1) t0]`; level 1 also carries `[t0, inf)`.

mod exact;
pub mod gff;
mod star;

use crate::error::{invalid, Error, Result};
use crate::lattice::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    ExactScale1D,
    ExactScale2D,
    StarScale,
    GffSquare,
}

impl Family {
    /// Name used in configuration files.
    pub fn tag(self) -> &'static str {
        match self {
            Family::ExactScale1D => "exact1d",
            Family::ExactScale2D => "exact2d",
            Family::StarScale => "star",
            Family::GffSquare => "gff-square",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "exact1d" => Ok(Family::ExactScale1D),
            "exact2d" => Ok(Family::ExactScale2D),
            "star" => Ok(Family::StarScale),
            "gff-square" => Ok(Family::GffSquare),
            other => Err(invalid(format!("unknown kernel family '{other}'"))),
        }
    }

    /// Numeric tag stored in binary ensemble headers.
    pub fn code(self) -> u32 {
        match self {
            Family::ExactScale1D => 0,
            Family::ExactScale2D => 1,
            Family::StarScale => 2,
            Family::GffSquare => 3,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Family::ExactScale1D),
            1 => Ok(Family::ExactScale2D),
            2 => Ok(Family::StarScale),
            3 => Ok(Family::GffSquare),
            c => Err(Error::Format(format!("unknown family code {c}"))),
        }
    }
}

/// Seed kernel of the star-scale family. Both choices are positive and
/// positive definite in every dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedKernel {
    Gaussian,
    Exponential,
}

impl SeedKernel {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            SeedKernel::Gaussian => (-r * r).exp(),
            SeedKernel::Exponential => (-r).exp(),
        }
    }

    /// Argument beyond which the seed is below `1e-17`.
    pub fn negligible_beyond(self) -> f64 {
        match self {
            SeedKernel::Gaussian => 6.3,
            SeedKernel::Exponential => 39.2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SeedKernel::Gaussian => "gaussian",
            SeedKernel::Exponential => "exponential",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "gaussian" => Ok(SeedKernel::Gaussian),
            "exponential" => Ok(SeedKernel::Exponential),
            other => Err(invalid(format!("unknown seed kernel '{other}'"))),
        }
    }
}

/// Inclusive range of decomposition levels `n_min..=n_max`, `n_min >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LevelRange {
    n_min: u32,
    n_max: u32,
}

impl LevelRange {
    pub fn new(n_min: u32, n_max: u32) -> Result<Self> {
        if n_min == 0 {
            return Err(Error::ZeroLevel);
        }
        if n_max < n_min {
            return Err(invalid(format!("empty level range {n_min}..={n_max}")));
        }
        Ok(Self { n_min, n_max })
    }

    /// Levels `1..=n`, i.e. the partial sum `k_n`.
    pub fn upto(n: u32) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn single(n: u32) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn n_min(&self) -> u32 {
        self.n_min
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn len(&self) -> u32 {
        self.n_max - self.n_min + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    family: Family,
    scale: f64,
    d: usize,
    seed: SeedKernel,
    gff_t0: f64,
}

impl KernelSpec {
    pub fn new(family: Family, d: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("correlation length T must be positive"));
        }
        let ok = match family {
            Family::ExactScale1D => d == 1,
            Family::ExactScale2D | Family::GffSquare => d == 2,
            Family::StarScale => d == 1 || d == 2,
        };
        if !ok {
            return Err(invalid(format!("family {} does not support d = {d}", family.tag())));
        }
        Ok(Self { family, scale, d, seed: SeedKernel::Gaussian, gff_t0: 1.0 })
    }

    pub fn exact_1d(scale: f64) -> Result<Self> {
        Self::new(Family::ExactScale1D, 1, scale)
    }

    pub fn exact_2d(scale: f64) -> Result<Self> {
        Self::new(Family::ExactScale2D, 2, scale)
    }

    pub fn star(d: usize, scale: f64, seed: SeedKernel) -> Result<Self> {
        Ok(Self::new(Family::StarScale, d, scale)?.with_seed(seed))
    }

    /// Green function of the unit square. `scale` is unused by this family
    /// (the domain fixes the geometry) and is kept at 1.
    pub fn gff_square() -> Result<Self> {
        Self::new(Family::GffSquare, 2, 1.0)
    }

    pub fn with_seed(mut self, seed: SeedKernel) -> Self {
        self.seed = seed;
        self
    }

    /// First slice boundary `t0` of the heat-kernel decomposition.
    pub fn with_gff_t0(mut self, t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(invalid("t0 must be positive"));
        }
        self.gff_t0 = t0;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> SeedKernel {
        self.seed
    }

    pub fn gff_t0(&self) -> f64 {
        self.gff_t0
    }

    pub fn is_stationary(&self) -> bool {
        self.family != Family::GffSquare
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        let mut s = 0.0;
        for k in 0..self.d {
            let dx = x[k] - y[k];
            s += dx * dx;
        }
        s.sqrt()
    }

    fn check_points(&self, x: &Point, y: &Point) -> Result<()> {
        for p in [x, y] {
            if (0..self.d).any(|k| !p[k].is_finite()) {
                return Err(Error::OutsideDomain(p[..self.d].to_vec()));
            }
        }
        if self.family == Family::GffSquare {
            gff::check_interior(x)?;
            gff::check_interior(y)?;
        }
        Ok(())
    }

    /// Partial sum `k_n(x, y) = sum_{p <= n} q_p(x, y)`.
    pub fn eval_partial_kernel(&self, n: u32, x: &Point, y: &Point) -> Result<f64> {
        self.eval_range(LevelRange::upto(n).map_err(|_| Error::ZeroLevel)?, x, y)
    }

    /// Level increment `q_n(x, y) = k_n - k_{n-1}`.
    pub fn eval_level_increment(&self, n: u32, x: &Point, y: &Point) -> Result<f64> {
        self.eval_range(LevelRange::single(n)?, x, y)
    }

    /// `sum_{p in range} q_p(x, y)`.
    pub fn eval_range(&self, range: LevelRange, x: &Point, y: &Point) -> Result<f64> {
        self.check_points(x, y)?;
        match self.family {
            Family::GffSquare => gff::range_integral(self.gff_t0, range, x, y),
            _ => self.radial(range, self.distance(x, y)),
        }
    }

    /// Heat-kernel time slice of the unit-square Green function:
    /// `pi * int_{t_n}^{t_(n-1)} p_D(t, x, y) dt` (level 1 extends to infinity).
    pub fn gff_square_level(&self, n: u32, x: &Point, y: &Point) -> Result<f64> {
        if self.family != Family::GffSquare {
            return Err(invalid("gff_square_level needs the gff-square family"));
        }
        self.eval_level_increment(n, x, y)
    }

    /// Stationary kernels as a function of the distance `r`.
    pub fn radial(&self, range: LevelRange, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(invalid("distance must be nonnegative"));
        }
        match self.family {
            Family::ExactScale1D | Family::ExactScale2D => {
                Ok(exact::range(self.exact_profile(), range, r / self.scale))
            }
            Family::StarScale => star::range(self.seed, range, r / self.scale),
            Family::GffSquare => Err(invalid("gff-square kernel is not stationary")),
        }
    }

    /// Distance beyond which every level in `range` is negligible (exactly zero
    /// for the exact-scale families). `None` for non-stationary kernels.
    pub fn support_radius(&self, range: LevelRange) -> Option<f64> {
        match self.family {
            Family::ExactScale1D | Family::ExactScale2D => Some(self.scale),
            Family::StarScale => {
                Some(self.scale * self.seed.negligible_beyond() / 2f64.powi(range.n_min() as i32))
            }
            Family::GffSquare => None,
        }
    }

    /// The full kernel `K(x, y)`; infinite on the diagonal.
    pub fn limit_kernel(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_points(x, y)?;
        let r = self.distance(x, y);
        match self.family {
            Family::ExactScale1D | Family::ExactScale2D => Ok((self.scale / r).ln().max(0.0)),
            Family::StarScale => star::limit(self.seed, r / self.scale),
            Family::GffSquare => {
                if r == 0.0 {
                    Ok(f64::INFINITY)
                } else {
                    gff::green(self.gff_t0, x, y)
                }
            }
        }
    }

    /// Continuous-cutoff kernel `k_l(r)` of the exact families, `0 < l <= 1`:
    /// `ln(T/r)` on `[lT, T]`, `ln(1/l) + c (1 - phi(r/(lT)))` below `lT`.
    /// Level `n` corresponds to `l = 1/n`.
    pub fn scale_kernel(&self, l: f64, r: f64) -> Result<f64> {
        if !matches!(self.family, Family::ExactScale1D | Family::ExactScale2D) {
            return Err(invalid("continuous cutoff only defined for exact-scale kernels"));
        }
        if !(l > 0.0 && l <= 1.0) || !(r >= 0.0) {
            return Err(invalid("need 0 < l <= 1 and r >= 0"));
        }
        Ok(exact::cutoff(self.exact_profile(), l, r / self.scale))
    }

    fn exact_profile(&self) -> exact::Profile {
        if self.family == Family::ExactScale1D {
            exact::Profile::Linear
        } else {
            exact::Profile::SquareRoot
        }
    }
}

/// Smallest eigenvalue of the level-`n` increment Gram matrix on `points`,
/// and its trace. Sigma-positivity asks for `min >= -eps * trace`.
pub fn gram_floor(spec: &KernelSpec, n: u32, points: &[Point]) -> Result<(f64, f64)> {
    let k = points.len();
    let mut g = nalgebra::DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = spec.eval_level_increment(n, &points[i], &points[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let trace = g.trace();
    let eig = nalgebra::SymmetricEigen::new(g);
    Ok((eig.eigenvalues.min(), trace))
}

#[cfg(test)]
mod tests;
