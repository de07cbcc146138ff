//! Small statistics toolbox: least squares, bootstrap, rank correlation and
//! two goodness-of-fit tests.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::par::{map_indexed, tree_sum};
use crate::rng::{Purpose, RngStream};

pub fn mean(xs: &[f64]) -> f64 {
    tree_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    tree_sum(&dev) / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// Classical standard error of the slope (0 with two points).
    pub slope_se: f64,
    pub r2: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Empty("least squares needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(crate::error::invalid("least squares with constant abscissa"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(OlsFit { slope, intercept, slope_se, r2 })
}

/// Bootstrap settings: number of resamples and the master seed of their streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub seed: u64,
}

impl BootstrapSpec {
    pub fn new(resamples: usize, seed: u64) -> Self {
        Self { resamples, seed }
    }
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self { resamples: 1000, seed: 0x5eed }
    }
}

/// Evaluates `stat` on `spec.resamples` resamples (with replacement) of
/// `0..n`. Resample `b` uses its own stream, so results do not depend on
/// scheduling. `salt` separates independent bootstraps under one seed.
pub fn bootstrap<F>(n: usize, spec: BootstrapSpec, salt: u32, stat: F) -> Vec<f64>
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    map_indexed(spec.resamples, |b| {
        let mut rng = RngStream::new(spec.seed, b as u64, salt, Purpose::Bootstrap).rng();
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        stat(&idx)
    })
}

/// Linear-interpolated quantile of a sample, `p` in `[0, 1]`.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    if lo == hi {
        v[lo]
    } else {
        v[lo] * (1.0 - t) + v[hi] * t
    }
}

/// Central percentile interval at confidence `level`.
pub fn percentile_interval(xs: &[f64], level: f64) -> (f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    (quantile_sorted(&v, a), quantile_sorted(&v, 1.0 - a))
}

/// Mean with a percentile bootstrap interval.
pub fn bootstrap_mean(xs: &[f64], spec: BootstrapSpec, salt: u32, level: f64) -> (f64, (f64, f64)) {
    let m = mean(xs);
    let reps = bootstrap(xs.len(), spec, salt, |idx| idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64);
    (m, percentile_interval(&reps, level))
}

/// Average ranks (ties share the mean rank), starting at 1.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Empty("rank correlation needs at least three pairs".into()));
    }
    Ok(pearson(&ranks(x), &ranks(y)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS test needs two nonempty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok(TestResult { statistic: d, p_value: kolmogorov_q(lambda) })
}

/// `Q(l) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 l^2)`.
fn kolmogorov_q(l: f64) -> f64 {
    if l < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * l * l).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Jarque-Bera normality test; the statistic is asymptotically chi-square
/// with two degrees of freedom.
pub fn jarque_bera(xs: &[f64]) -> Result<TestResult> {
    if xs.len() < 8 {
        return Err(Error::Empty("normality test needs at least 8 values".into()));
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    let stat = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
    let chi2 = ChiSquared::new(2.0).expect("two degrees of freedom");
    Ok(TestResult { statistic: stat, p_value: 1.0 - chi2.cdf(stat) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ols_recovers_a_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 3.0).abs() < 1e-13);
        assert!(f.slope_se < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!(ols(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn ranks_and_spearman() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 8.0, 27.0, 64.0, 125.0];
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let z: Vec<f64> = y.iter().map(|v| -v).collect();
        assert!((spearman(&x, &z).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn ks_and_jarque_bera_on_gaussian_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let shifted: Vec<f64> = b.iter().map(|v: &f64| v + 0.2).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&a, &shifted).unwrap().p_value < 1e-6);
        assert!(jarque_bera(&a).unwrap().statistic < 9.21);
        let expo: Vec<f64> = a.iter().map(|v| v.exp()).collect();
        assert!(jarque_bera(&expo).unwrap().statistic > 100.0);
    }

    #[test]
    fn bootstrap_is_reproducible_and_brackets_the_mean() {
        let xs: Vec<f64> = (0..200).map(|i| (i % 7) as f64).collect();
        let spec = BootstrapSpec::new(300, 4);
        let (m, (lo, hi)) = bootstrap_mean(&xs, spec, 0, 0.95);
        assert!(lo < m && m < hi);
        assert_eq!(bootstrap_mean(&xs, spec, 0, 0.95), (m, (lo, hi)));
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5), 2.0);
    }
}
