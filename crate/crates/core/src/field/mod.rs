//! Gaussian layers `Y^n` with covariance `q_n` on a lattice, and their sums `X^n`.
//!
//! A [`FieldSampler`] factorizes the covariance of a level range once and then
//! draws any number of replicas from it. Two factorizations are available:
//! circulant embedding through the FFT (stationary kernels) and a dense
//! Cholesky factor (any kernel, at most [`DENSE_LIMIT`] sites). Field values
//! are taken at cell centers.

pub mod ensemble;

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::kernels::{Family, KernelSpec, LevelRange};
use crate::lattice::Lattice;
use crate::rng::{Purpose, RngStream};

/// Largest site count accepted by the dense backend.
pub const DENSE_LIMIT: usize = 4096;
/// Largest clipped share of the embedding spectrum that is tolerated.
pub const CLIP_TOLERANCE: f64 = 1e-6;
const DENSE_JITTER: f64 = 1e-12;
const MAX_EMBEDDING_SITES: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Circulant embedding for stationary kernels, dense otherwise.
    Auto,
    Circulant,
    Dense,
}

impl Backend {
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "auto" => Ok(Backend::Auto),
            "circulant" => Ok(Backend::Circulant),
            "dense" => Ok(Backend::Dense),
            other => Err(invalid(format!("unknown field backend '{other}'"))),
        }
    }
}

/// Pointwise variance of a field: one value for stationary kernels, one per
/// site otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Variance {
    Uniform(f64),
    PerSite(Arc<Vec<f64>>),
}

impl Variance {
    pub fn at(&self, site: usize) -> f64 {
        match self {
            Variance::Uniform(v) => *v,
            Variance::PerSite(v) => v[site],
        }
    }

    pub fn uniform(&self) -> Option<f64> {
        match self {
            Variance::Uniform(v) => Some(*v),
            Variance::PerSite(_) => None,
        }
    }

    fn add(&self, other: &Variance) -> Variance {
        match (self, other) {
            (Variance::Uniform(a), Variance::Uniform(b)) => Variance::Uniform(a + b),
            (Variance::PerSite(a), Variance::Uniform(b)) | (Variance::Uniform(b), Variance::PerSite(a)) => {
                Variance::PerSite(Arc::new(a.iter().map(|x| x + b).collect()))
            }
            (Variance::PerSite(a), Variance::PerSite(b)) => {
                Variance::PerSite(Arc::new(a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()))
            }
        }
    }
}

/// One draw of `sum_{p in levels} Y^p` on a lattice.
#[derive(Clone, Debug)]
pub struct Layer {
    pub levels: LevelRange,
    pub values: Vec<f64>,
    pub variance: Variance,
}

/// Accumulated field `X` with its variance profile and optionally the layers
/// it was built from.
#[derive(Clone, Debug)]
pub struct FieldGrid {
    lattice: Lattice,
    levels: Option<LevelRange>,
    values: Vec<f64>,
    variance: Variance,
    layers: Option<Vec<Layer>>,
}

impl FieldGrid {
    pub fn zeros(lattice: &Lattice) -> Self {
        Self {
            lattice: lattice.clone(),
            levels: None,
            values: vec![0.0; lattice.sites()],
            variance: Variance::Uniform(0.0),
            layers: None,
        }
    }

    pub fn from_parts(lattice: &Lattice, levels: Option<LevelRange>, values: Vec<f64>, variance: Variance) -> Result<Self> {
        if values.len() != lattice.sites() {
            return Err(Error::LatticeMismatch);
        }
        if let Variance::PerSite(v) = &variance {
            if v.len() != values.len() {
                return Err(Error::LatticeMismatch);
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at site {i}")));
        }
        Ok(Self { lattice: lattice.clone(), levels, values, variance, layers: None })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Highest level included, 0 for the empty field.
    pub fn level(&self) -> u32 {
        self.levels.map_or(0, |r| r.n_max())
    }

    pub fn levels(&self) -> Option<LevelRange> {
        self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variance(&self) -> &Variance {
        &self.variance
    }

    /// `k_n(0)` for stationary fields.
    pub fn variance0(&self) -> Option<f64> {
        self.variance.uniform()
    }

    pub fn layers(&self) -> Option<&[Layer]> {
        self.layers.as_deref()
    }
}

/// Sitewise sum of layers. Level ranges must be contiguous and in order.
pub fn accumulate_field(lattice: &Lattice, layers: Vec<Layer>, keep_layers: bool) -> Result<FieldGrid> {
    let mut grid = FieldGrid::zeros(lattice);
    let mut levels: Option<LevelRange> = None;
    for layer in &layers {
        if layer.values.len() != lattice.sites() {
            return Err(Error::LatticeMismatch);
        }
        levels = Some(match levels {
            None => layer.levels,
            Some(r) if layer.levels.n_min() == r.n_max() + 1 => LevelRange::new(r.n_min(), layer.levels.n_max())?,
            Some(_) => return Err(invalid("layers must cover consecutive levels")),
        });
        for (x, y) in grid.values.iter_mut().zip(&layer.values) {
            *x += y;
        }
        grid.variance = grid.variance.add(&layer.variance);
    }
    grid.levels = levels;
    if keep_layers {
        grid.layers = Some(layers);
    }
    Ok(grid)
}

enum Plan {
    Zero,
    Circulant(CirculantPlan),
    Dense(DMatrix<f64>),
}

struct CirculantPlan {
    m: usize,
    d: usize,
    /// `sqrt(lambda_k / m^d)`.
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    clipped: f64,
}

/// Factorized covariance of `sum_{p in levels} q_p` on a lattice.
pub struct FieldSampler {
    lattice: Lattice,
    levels: LevelRange,
    variance: Variance,
    plan: Plan,
}

impl std::fmt::Debug for FieldSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSampler")
            .field("lattice", &self.lattice)
            .field("levels", &self.levels)
            .field("backend", &self.backend_name())
            .finish()
    }
}

impl FieldSampler {
    pub fn new(spec: &KernelSpec, lattice: &Lattice, levels: LevelRange, backend: Backend) -> Result<Self> {
        if spec.dim() != lattice.dim() {
            return Err(invalid(format!(
                "kernel dimension {} does not match lattice dimension {}",
                spec.dim(),
                lattice.dim()
            )));
        }
        let backend = match backend {
            Backend::Auto if spec.is_stationary() => Backend::Circulant,
            Backend::Auto => Backend::Dense,
            b => b,
        };
        match backend {
            Backend::Circulant => Self::circulant(spec, lattice, levels),
            _ => Self::dense(spec, lattice, levels),
        }
    }

    /// Dense sampler from an explicit row-major covariance matrix.
    pub fn from_covariance(lattice: &Lattice, levels: LevelRange, cov: Vec<f64>) -> Result<Self> {
        let n = lattice.sites();
        if cov.len() != n * n {
            return Err(Error::LatticeMismatch);
        }
        if n > DENSE_LIMIT {
            return Err(Error::TooManySites { sites: n, limit: DENSE_LIMIT });
        }
        if let Some(i) = cov.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("covariance entry {i}")));
        }
        let diag: Vec<f64> = (0..n).map(|i| cov[i * n + i]).collect();
        let stationary = diag.iter().all(|&v| v == diag[0]);
        let variance = if stationary { Variance::Uniform(diag[0]) } else { Variance::PerSite(Arc::new(diag.clone())) };
        if cov.iter().all(|&v| v == 0.0) {
            return Ok(Self { lattice: lattice.clone(), levels, variance, plan: Plan::Zero });
        }
        let jitter = DENSE_JITTER * diag.iter().cloned().fold(0.0, f64::max);
        let mut m = DMatrix::from_row_slice(n, n, &cov);
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Factorization("covariance is not positive definite".into()))?;
        Ok(Self { lattice: lattice.clone(), levels, variance, plan: Plan::Dense(chol.unpack()) })
    }

    fn dense(spec: &KernelSpec, lattice: &Lattice, levels: LevelRange) -> Result<Self> {
        let n = lattice.sites();
        if n > DENSE_LIMIT {
            return Err(Error::TooManySites { sites: n, limit: DENSE_LIMIT });
        }
        let cov = if spec.family() == Family::GffSquare {
            crate::kernels::gff::gram_matrix(spec.gff_t0(), levels, lattice)?
        } else {
            let pts: Vec<_> = (0..n).map(|i| lattice.site_center(i)).collect();
            let mut cov = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = spec.eval_range(levels, &pts[i], &pts[j])?;
                    cov[i * n + j] = v;
                    cov[j * n + i] = v;
                }
            }
            cov
        };
        let mut s = Self::from_covariance(lattice, levels, cov)?;
        if spec.is_stationary() {
            s.variance = Variance::Uniform(spec.radial(levels, 0.0)?);
        }
        Ok(s)
    }

    fn circulant(spec: &KernelSpec, lattice: &Lattice, levels: LevelRange) -> Result<Self> {
        let support = spec
            .support_radius(levels)
            .ok_or_else(|| invalid(format!("circulant embedding needs a stationary kernel, got {}", spec.family().tag())))?;
        let d = lattice.dim();
        let n = lattice.resolution();
        let h = lattice.spacing();
        let var0 = spec.radial(levels, 0.0)?;
        let variance = Variance::Uniform(var0);
        if var0 == 0.0 {
            return Ok(Self { lattice: lattice.clone(), levels, variance, plan: Plan::Zero });
        }
        let min_period = (2 * n).max((2.0 * support / h).ceil() as usize);
        let mut m = min_period.next_power_of_two();
        let mut last_fraction = 0.0;
        for _ in 0..3 {
            if m.pow(d as u32) > MAX_EMBEDDING_SITES {
                return Err(Error::TooManySites { sites: m.pow(d as u32), limit: MAX_EMBEDDING_SITES });
            }
            let plan = build_circulant(spec, levels, d, m, h)?;
            if plan.clipped <= CLIP_TOLERANCE {
                return Ok(Self { lattice: lattice.clone(), levels, variance, plan: Plan::Circulant(plan) });
            }
            last_fraction = plan.clipped;
            m *= 2;
        }
        Err(Error::Embedding(last_fraction))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn levels(&self) -> LevelRange {
        self.levels
    }

    pub fn variance(&self) -> &Variance {
        &self.variance
    }

    pub fn backend_name(&self) -> &'static str {
        match self.plan {
            Plan::Zero => "zero",
            Plan::Circulant(_) => "circulant",
            Plan::Dense(_) => "dense",
        }
    }

    /// Share of the embedding spectrum removed by clipping (0 for other backends).
    pub fn clipped_fraction(&self) -> f64 {
        match &self.plan {
            Plan::Circulant(p) => p.clipped,
            _ => 0.0,
        }
    }

    /// Circulant period per axis, if that backend is in use.
    pub fn embedding_period(&self) -> Option<usize> {
        match &self.plan {
            Plan::Circulant(p) => Some(p.m),
            _ => None,
        }
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let sites = self.lattice.sites();
        match &self.plan {
            Plan::Zero => vec![0.0; sites],
            Plan::Dense(l) => {
                let xi: Vec<f64> = (0..sites).map(|_| rng.sample(StandardNormal)).collect();
                let mut out = vec![0.0; sites];
                for i in 0..sites {
                    let mut s = 0.0;
                    for j in 0..=i {
                        s += l[(i, j)] * xi[j];
                    }
                    out[i] = s;
                }
                out
            }
            Plan::Circulant(p) => p.sample(rng, self.lattice.resolution()),
        }
    }

    pub fn sample_layer(&self, stream: RngStream) -> Layer {
        Layer { levels: self.levels, values: self.sample_values(&mut stream.rng()), variance: self.variance.clone() }
    }

    /// One replica of the field over the whole level range, drawn in a single
    /// step (equal in law to summing the individual layers).
    pub fn sample_field(&self, master_seed: u64, replica: u64) -> FieldGrid {
        let stream = RngStream::new(master_seed, replica, self.levels.n_max(), Purpose::Field);
        let values = self.sample_values(&mut stream.rng());
        FieldGrid {
            lattice: self.lattice.clone(),
            levels: Some(self.levels),
            values,
            variance: self.variance.clone(),
            layers: None,
        }
    }
}

fn build_circulant(spec: &KernelSpec, levels: LevelRange, d: usize, m: usize, h: f64) -> Result<CirculantPlan> {
    let total = m.pow(d as u32);
    let lag = |j: usize| h * j.min(m - j) as f64;
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(total);
    if d == 1 {
        let row: Vec<f64> = (0..=m / 2).map(|j| spec.radial(levels, lag(j))).collect::<Result<_>>()?;
        for j in 0..m {
            buf.push(Complex::new(row[j.min(m - j)], 0.0));
        }
    } else {
        // Radial values only depend on the unordered pair of folded lags.
        let half = m / 2 + 1;
        let mut table = vec![0.0; half * half];
        for a in 0..half {
            for b in a..half {
                let r = (h * a as f64).hypot(h * b as f64);
                let v = spec.radial(levels, r)?;
                table[a * half + b] = v;
                table[b * half + a] = v;
            }
        }
        for j0 in 0..m {
            for j1 in 0..m {
                buf.push(Complex::new(table[j0.min(m - j0) * half + j1.min(m - j1)], 0.0));
            }
        }
    }
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft_nd(&*fft, &mut buf, m, d);
    let mut neg = 0.0;
    let mut abs = 0.0;
    let norm = total as f64;
    let scale: Vec<f64> = buf
        .iter()
        .map(|z| {
            let lam = z.re;
            abs += lam.abs();
            if lam < 0.0 {
                neg -= lam;
                0.0
            } else {
                (lam / norm).sqrt()
            }
        })
        .collect();
    let clipped = if abs > 0.0 { neg / abs } else { 0.0 };
    Ok(CirculantPlan { m, d, scale, fft, clipped })
}

/// In-place forward FFT of an `m^d` row-major array; for d = 2 the result is
/// left transposed, which is harmless for symmetric spectra and handled when
/// reading samples.
fn fft_nd(fft: &dyn Fft<f64>, buf: &mut [Complex<f64>], m: usize, d: usize) {
    fft.process(buf);
    if d == 2 {
        transpose(buf, m);
        fft.process(buf);
    }
}

fn transpose(buf: &mut [Complex<f64>], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

impl CirculantPlan {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|&s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex::new(s * a, s * b)
            })
            .collect();
        fft_nd(&*self.fft, &mut buf, self.m, self.d);
        if self.d == 1 {
            buf[..n].iter().map(|z| z.re).collect()
        } else {
            // buf[j1 * m + j0] holds the transform at (j0, j1).
            let mut out = Vec::with_capacity(n * n);
            for i0 in 0..n {
                for i1 in 0..n {
                    out.push(buf[i1 * self.m + i0].re);
                }
            }
            out
        }
    }
}

/// Draws `Y^n` for a single level with the stream of `(replica, n, Layer)`.
pub fn sample_layer(spec: &KernelSpec, n: u32, lattice: &Lattice, stream: RngStream) -> Result<Layer> {
    let sampler = FieldSampler::new(spec, lattice, LevelRange::single(n)?, Backend::Auto)?;
    Ok(sampler.sample_layer(stream))
}

/// Per-level samplers for building `X^n` layer by layer.
#[derive(Debug)]
pub struct LayerStack {
    samplers: Vec<FieldSampler>,
}

impl LayerStack {
    pub fn new(spec: &KernelSpec, lattice: &Lattice, n: u32, backend: Backend) -> Result<Self> {
        let samplers = (1..=n)
            .map(|k| FieldSampler::new(spec, lattice, LevelRange::single(k)?, backend))
            .collect::<Result<Vec<_>>>()?;
        if samplers.is_empty() {
            return Err(Error::ZeroLevel);
        }
        Ok(Self { samplers })
    }

    pub fn depth(&self) -> u32 {
        self.samplers.len() as u32
    }

    pub fn sample_layers(&self, master_seed: u64, replica: u64) -> Vec<Layer> {
        self.samplers
            .iter()
            .map(|s| s.sample_layer(RngStream::new(master_seed, replica, s.levels.n_min(), Purpose::Layer)))
            .collect()
    }

    pub fn sample(&self, master_seed: u64, replica: u64, keep_layers: bool) -> FieldGrid {
        let lattice = self.samplers[0].lattice();
        accumulate_field(lattice, self.sample_layers(master_seed, replica), keep_layers)
            .expect("layers from one stack share a lattice")
    }
}
