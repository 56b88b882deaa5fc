//! Small statistics toolkit: moments with standard errors, Kolmogorov–Smirnov
//! distances and Pearson chi-square tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl MeanSe {
    /// Whether `x` lies within `k` standard errors of the mean.
    pub fn covers(&self, x: f64, k: f64) -> bool {
        (self.mean - x).abs() <= k * self.se
    }
}

/// Sample mean and its standard error (unbiased variance).
pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN, count: 0 };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MeanSe { mean, se: (var / n as f64).sqrt(), count: n }
}

/// Mean with a batch-means standard error for a correlated sequence.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> MeanSe {
    let b = batches.max(2).min(xs.len().max(1));
    let size = xs.len() / b;
    if size == 0 {
        return mean_se(xs);
    }
    let means: Vec<f64> = xs[..b * size]
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = mean_se(&means);
    MeanSe { mean: xs.iter().sum::<f64>() / xs.len() as f64, se: m.se, count: xs.len() }
}

/// Self-normalized weighted mean with a delta-method standard error.
pub fn weighted_mean_se(xs: &[f64], ws: &[f64]) -> MeanSe {
    assert_eq!(xs.len(), ws.len());
    let sw: f64 = ws.iter().sum();
    let mean = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let var = xs.iter().zip(ws).map(|(x, w)| (w * (x - mean)).powi(2)).sum::<f64>() / (sw * sw);
    MeanSe { mean, se: var.sqrt(), count: xs.len() }
}

/// Kish effective sample size of a weight vector.
pub fn effective_sample_size(ws: &[f64]) -> f64 {
    let s: f64 = ws.iter().sum();
    let s2: f64 = ws.iter().map(|w| w * w).sum();
    s * s / s2
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit test of counts against probabilities. Cells with
/// expected count below 5 are pooled into one.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> ChiSquareResult {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut stat = 0.0;
    let mut cells = 0;
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n;
        if e < 5.0 {
            pool_obs += c as f64;
            pool_exp += e;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        cells += 1;
    }
    let dof = cells.max(2) - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat);
    ChiSquareResult { statistic: stat, dof, p_value }
}
