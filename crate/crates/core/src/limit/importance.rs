//! Importance sampling of the limit through a Radon–Nikodym tilt of
//! Brownian motion: a path `beta` of `B / sqrt 2` is weighted by
//! `exp(c min beta + a min (beta - beta_1))`.

use super::params::LimitParams;
use crate::error::{domain, Result};
use crate::rng::{chunk_sizes, stream};
use crate::stats::{effective_sample_size, weighted_mean_se, MeanSe};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const REPLICAS: usize = 64;

/// How path minima are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimumRule {
    /// Minimum over the walk grid. Overestimates the true minimum by about
    /// `0.58 sqrt(1/2m)`, a bias of order `m^{-1/2}` in the weights.
    #[default]
    Grid,
    /// Exact minimum of the Brownian bridge between consecutive grid points.
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceOptions {
    pub steps: usize,
    pub count: usize,
    pub seed: u64,
    pub rule: MinimumRule,
    /// Warn when the effective sample size falls below this fraction of `count`.
    pub ess_warn: f64,
}

impl ImportanceOptions {
    pub fn new(steps: usize, count: usize, seed: u64) -> Self {
        ImportanceOptions { steps, count, seed, rule: MinimumRule::Grid, ess_warn: 0.05 }
    }
}

/// Self-normalized weighted sample; `values` is row-major as in
/// [`super::EtaPaths`] and the weights sum to one.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedPaths {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub ess: f64,
}

impl WeightedPaths {
    pub fn column(&self, j: usize) -> Vec<f64> {
        let d = self.times.len();
        self.values.iter().skip(j).step_by(d).copied().collect()
    }

    /// Weighted mean of `f` applied to the values at time index `j`.
    pub fn mean<F: Fn(f64) -> f64>(&self, j: usize, f: F) -> MeanSe {
        let xs: Vec<f64> = self.column(j).into_iter().map(f).collect();
        weighted_mean_se(&xs, &self.weights)
    }
}

/// Weighted paths of `B / sqrt 2` at `times`, each a multiple of `1/steps`.
pub fn importance_sample_x(params: &LimitParams, times: &[f64], opts: &ImportanceOptions) -> Result<WeightedPaths> {
    let (a, c) = (params.a, params.c);
    if !(a.is_finite() && c.is_finite() && a + c > 0.0) {
        return domain(format!("importance sampling needs finite a, c with a + c > 0, got ({a}, {c})"));
    }
    let m = opts.steps;
    if m == 0 || opts.count == 0 {
        return domain("steps and count must be positive");
    }
    let mut idx = Vec::with_capacity(times.len());
    for &x in times {
        let k = (x * m as f64).round();
        if !(x > 0.0 && x <= 1.0) || (x * m as f64 - k).abs() > 1e-6 {
            return domain(format!("time {x} is not a positive multiple of 1/{m} in (0, 1]"));
        }
        idx.push(k as usize);
    }
    let d = times.len();
    let var = 0.5 / m as f64;
    let sd = var.sqrt();
    let rule = opts.rule;
    let parts: Vec<(Vec<f64>, Vec<f64>)> = chunk_sizes(opts.count, REPLICAS)
        .into_par_iter()
        .enumerate()
        .map(|(r, k)| {
            let mut rng = stream(opts.seed, r as u64);
            let mut vals = Vec::with_capacity(k * d);
            let mut lw = Vec::with_capacity(k);
            for _ in 0..k {
                let mut beta = 0.0f64;
                let mut min = 0.0f64;
                let mut next = 0;
                for step in 1..=m {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let prev = beta;
                    beta += sd * z;
                    let low = match rule {
                        MinimumRule::Grid => beta,
                        MinimumRule::Bridge => {
                            let u: f64 = 1.0 - rng.random::<f64>();
                            let diff = beta - prev;
                            0.5 * (prev + beta - (diff * diff - 2.0 * var * u.ln()).sqrt())
                        }
                    };
                    min = min.min(low);
                    while next < d && idx[next] == step {
                        vals.push(beta);
                        next += 1;
                    }
                }
                lw.push(c * min + a * (min - beta));
            }
            (vals, lw)
        })
        .collect();
    let values: Vec<f64> = parts.iter().flat_map(|p| p.0.iter().copied()).collect();
    let lw: Vec<f64> = parts.iter().flat_map(|p| p.1.iter().copied()).collect();
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let ess = effective_sample_size(&weights);
    if ess < opts.ess_warn * opts.count as f64 {
        log::warn!("importance sampling: effective sample size {ess:.0} of {}", opts.count);
    }
    Ok(WeightedPaths { times: times.to_vec(), values, weights, ess })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tilt_is_plain_brownian_motion() {
        // a = c = 0 is outside the admissible set; a tiny tilt leaves the
        // weights essentially flat
        let p = LimitParams::new(1e-9, 1e-9).unwrap();
        let w = importance_sample_x(&p, &[0.5, 1.0], &ImportanceOptions::new(50, 20_000, 3)).unwrap();
        assert!(w.ess > 0.999 * 20_000.0);
        let m = w.mean(1, |x| x * x);
        assert!((m.mean - 0.5).abs() < 4.0 * 0.5 * (2.0f64 / 20_000.0).sqrt());
    }

    #[test]
    fn weights_positive_and_finite() {
        let p = LimitParams::new(1.0, 1.0).unwrap();
        for rule in [MinimumRule::Grid, MinimumRule::Bridge] {
            let mut o = ImportanceOptions::new(100, 2000, 5);
            o.rule = rule;
            let w = importance_sample_x(&p, &[1.0], &o).unwrap();
            assert!(w.weights.iter().all(|&x| x > 0.0 && x.is_finite()));
            assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn off_grid_times_rejected() {
        let p = LimitParams::new(1.0, 1.0).unwrap();
        assert!(importance_sample_x(&p, &[0.333], &ImportanceOptions::new(10, 10, 1)).is_err());
        assert!(importance_sample_x(&LimitParams::new(1.0, -1.0).unwrap(), &[1.0], &ImportanceOptions::new(10, 10, 1)).is_err());
    }
}
