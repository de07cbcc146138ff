//! Hill estimation of power-law tail indices.

use crate::error::{invalid, Error, Result};

/// Order statistics below this count give an estimate flagged as unstable.
pub const MIN_ORDER: usize = 30;
/// Largest relative drift of the k-sweep still accepted as a plateau.
pub const PLATEAU_DRIFT: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HillEstimate {
    pub alpha: f64,
    /// Asymptotic 95% interval `alpha (1 +- 1.96 / sqrt(k))`.
    pub ci: (f64, f64),
    pub k: usize,
    pub unstable: bool,
}

fn sorted_desc(ln_samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = ln_samples.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
        return Err(Error::NonFinite(format!("log-sample {v}")));
    }
    let mut v = ln_samples.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

fn hill_sorted(desc: &[f64], k: usize) -> Result<HillEstimate> {
    if k == 0 || k >= desc.len() {
        return Err(invalid(format!("need 0 < k < {} order statistics, got {k}", desc.len())));
    }
    let threshold = desc[k];
    if threshold == f64::NEG_INFINITY {
        return Err(invalid("samples must be positive"));
    }
    let h: f64 = desc[..k].iter().map(|x| x - threshold).sum::<f64>() / k as f64;
    let alpha = 1.0 / h;
    let half = 1.96 / (k as f64).sqrt();
    Ok(HillEstimate { alpha, ci: (alpha * (1.0 - half), alpha * (1.0 + half)), k, unstable: k < MIN_ORDER })
}

/// Hill estimator `k / sum_{i<k} ln(X_(i) / X_(k))` on the `k` largest of
/// positive samples given by their logarithms.
pub fn hill_from_logs(ln_samples: &[f64], k: usize) -> Result<HillEstimate> {
    hill_sorted(&sorted_desc(ln_samples)?, k)
}

pub fn hill_tail_index(samples: &[f64], k: usize) -> Result<HillEstimate> {
    if samples.iter().any(|x| !(*x > 0.0)) {
        return Err(invalid("Hill estimator needs positive samples"));
    }
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    hill_from_logs(&logs, k)
}

#[derive(Clone, Debug)]
pub struct HillPlateau {
    /// `(k, alpha_hat(k))` over a geometric k grid.
    pub sweep: Vec<(usize, f64)>,
    /// Median of the sweep.
    pub alpha: f64,
    /// Fitted change of `alpha_hat` across the sweep relative to `alpha`.
    pub drift: f64,
    pub stable: bool,
}

/// k grid: geometric from `max(30, n/1000)` to `n/20`.
pub fn k_grid(n: usize, points: usize) -> Vec<usize> {
    let lo = MIN_ORDER.max(n / 1000) as f64;
    let hi = (n / 20) as f64;
    if hi <= lo {
        return vec![(n / 20).max(1).min(n.saturating_sub(1))];
    }
    let mut ks: Vec<usize> = (0..points)
        .map(|i| (lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).round() as usize)
        .collect();
    ks.dedup();
    ks
}

/// Hill sweep with a stability verdict. The drift is the weighted
/// least-squares change of `alpha_hat(k)` against `ln k` over the sweep (weights
/// `k`, the inverse variance), relative to the median estimate.
pub fn hill_plateau(ln_samples: &[f64]) -> Result<HillPlateau> {
    let desc = sorted_desc(ln_samples)?;
    let n = desc.len();
    if n < 40 {
        return Err(Error::Empty(format!("only {n} samples for a Hill sweep")));
    }
    let ks = k_grid(n, 24);
    let sweep: Vec<(usize, f64)> = ks
        .iter()
        .map(|&k| hill_sorted(&desc, k).map(|h| (k, h.alpha)))
        .collect::<Result<_>>()?;
    let mut a: Vec<f64> = sweep.iter().map(|s| s.1).collect();
    a.sort_by(f64::total_cmp);
    let alpha = a[a.len() / 2];
    let drift = if sweep.len() >= 2 {
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for &(k, y) in &sweep {
            let w = k as f64;
            sw += w;
            sx += w * (k as f64).ln();
            sy += w * y;
        }
        let (mx, my) = (sx / sw, sy / sw);
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for &(k, y) in &sweep {
            let w = k as f64;
            let dx = (k as f64).ln() - mx;
            sxx += w * dx * dx;
            sxy += w * dx * (y - my);
        }
        let span = (sweep.last().unwrap().0 as f64 / sweep[0].0 as f64).ln();
        (sxy / sxx) * span / alpha
    } else {
        f64::INFINITY
    };
    let stable = drift.abs() <= PLATEAU_DRIFT && sweep[0].0 >= MIN_ORDER;
    Ok(HillPlateau { sweep, alpha, drift, stable })
}
