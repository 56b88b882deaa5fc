//! Convergence experiments: finite-`n` transforms against the limit, and
//! distances between rescaled heights and limit samples.

use super::finite::{finite_n_laplace, height_draws, jittered_scaled, LaplaceMode, Observable, StationarySource};
use crate::asep::{rates_from_boundary, TriplePointSchedule, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::laplace::{limit_laplace, LaplaceQuery};
use crate::limit::{importance_sample_x, sample_eta, ImportanceOptions, LimitParams, TimeGrid};
use crate::quad::Quad;
use crate::rng;
use crate::stats::{ks_two_sample, mean_se, MeanSe};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const SCHEMA: u32 = 1;

fn default_samples() -> usize {
    100_000
}

fn default_ks() -> f64 {
    0.02
}

fn default_true() -> bool {
    true
}

/// Input of [`convergence_experiment`]. Versioned by `schema`; unknown
/// fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub schedule: TriplePointSchedule,
    #[serde(default)]
    pub q: f64,
    pub query: LaplaceQuery,
    /// Sizes evaluated exactly over all states.
    #[serde(default)]
    pub exact_n: Vec<usize>,
    /// Sizes evaluated by sampling.
    #[serde(default)]
    pub mc_n: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_samples")]
    pub limit_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Times for the distance checks; defaults to the query times.
    #[serde(default)]
    pub ks_times: Vec<f64>,
    #[serde(default = "default_ks")]
    pub ks_threshold: f64,
    #[serde(default)]
    pub source: StationarySource,
    #[serde(default)]
    pub observable: Observable,
    /// Spread lattice heights uniformly over their cells before comparing
    /// distributions.
    #[serde(default = "default_true")]
    pub jitter: bool,
}

impl ExperimentConfig {
    pub fn new(schedule: TriplePointSchedule, query: LaplaceQuery) -> Self {
        ExperimentConfig {
            schema: SCHEMA,
            schedule,
            q: 0.0,
            query,
            exact_n: Vec::new(),
            mc_n: Vec::new(),
            samples: default_samples(),
            limit_samples: default_samples(),
            seed: 0,
            ks_times: Vec::new(),
            ks_threshold: default_ks(),
            source: StationarySource::Auto,
            observable: Observable::Height,
            jitter: true,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Config(format!("unsupported schema {}, expected {SCHEMA}", self.schema)));
        }
        for (name, ns) in [("exact_n", &self.exact_n), ("mc_n", &self.mc_n)] {
            if ns.windows(2).any(|w| w[0] >= w[1]) || ns.contains(&0) {
                return Err(Error::Config(format!("{name} must be positive and strictly ascending, got {ns:?}")));
            }
        }
        if let Some(&n) = self.exact_n.iter().find(|&&n| n > DEFAULT_CAP) {
            return Err(Error::Config(format!("exact mode is capped at n = {DEFAULT_CAP}, got {n}")));
        }
        if !(0.0..1.0).contains(&self.q) {
            return Err(Error::Config(format!("q must lie in [0,1), got {}", self.q)));
        }
        if self.ks_times.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::Config(format!("ks_times must lie in (0,1], got {:?}", self.ks_times)));
        }
        self.query.check_admissible(&self.schedule.limit)?;
        Ok(())
    }

    fn ks_times(&self) -> Vec<f64> {
        let mut t = if self.ks_times.is_empty() { self.query.x().to_vec() } else { self.ks_times.clone() };
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactEntry {
    pub n: usize,
    pub value: f64,
    pub gap: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    pub x: f64,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEntry {
    pub n: usize,
    pub value: f64,
    pub se: f64,
    /// 99% normal-approximation interval.
    pub ci99: (f64, f64),
    pub gap: f64,
    pub ks: Vec<KsEntry>,
    /// Distance between the rescaled heights at the last KS time in the
    /// first and second halves of the draws.
    pub split_half_ks: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub limit_value: f64,
    pub exact: Vec<ExactEntry>,
    pub mc: Vec<McEntry>,
    pub skipped: Vec<Skipped>,
    /// Whether the exact gaps decrease along `exact_n`.
    pub exact_gaps_decreasing: bool,
    /// Least-squares slope of `log gap` against `log n` over the exact
    /// entries. Descriptive only: no rate is claimed.
    pub descriptive_rate: Option<f64>,
    pub ks_pass: bool,
    pub seconds: f64,
}

impl ConvergenceReport {
    pub fn pass(&self) -> bool {
        self.exact_gaps_decreasing && self.ks_pass
    }
}

const Z99: f64 = 2.575_829_303_548_901;

fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Samples of `(B_x + eta_x) / sqrt 2` at `times`, row-major.
pub fn limit_height_samples(p: &LimitParams, times: &[f64], count: usize, seed: u64) -> Result<Vec<f64>> {
    let eta = sample_eta(p, &TimeGrid::new(times.to_vec())?, count, sub_seed(seed, 1))?;
    let d = times.len();
    let mut g = rng::stream(sub_seed(seed, 2), 0);
    let mut out = Vec::with_capacity(count * d);
    for i in 0..count {
        let (mut b, mut prev) = (0.0, 0.0);
        let row = eta.path(i);
        for (j, &x) in times.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut g);
            b += (x - prev).sqrt() * z;
            prev = x;
            out.push((b + row[j]) / std::f64::consts::SQRT_2);
        }
    }
    Ok(out)
}

fn column(v: &[f64], d: usize, j: usize) -> Vec<f64> {
    v.iter().skip(j).step_by(d).copied().collect()
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = points.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    (den > 0.0).then(|| num / den)
}

/// Runs the experiment described by `cfg`. Sizes where the schedule is
/// infeasible, or where no sampler applies, are skipped with a reason.
pub fn convergence_experiment(cfg: &ExperimentConfig, quad: &Quad) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let start = Instant::now();
    let p = cfg.schedule.limit;
    let limit_value = limit_laplace(&p, &cfg.query, quad)?;
    let mut skipped = Vec::new();
    let rates = |n: usize| -> Result<_> { rates_from_boundary(&cfg.schedule.at(n)?, cfg.q, n) };

    let mut exact = Vec::new();
    for &n in &cfg.exact_n {
        let t0 = Instant::now();
        match rates(n).and_then(|r| finite_n_laplace(&r, &cfg.query, LaplaceMode::Exact)) {
            Ok(v) => exact.push(ExactEntry {
                n,
                value: v.value,
                gap: (v.value - limit_value).abs(),
                seconds: t0.elapsed().as_secs_f64(),
            }),
            Err(e) => {
                log::warn!("skipping exact n = {n}: {e}");
                skipped.push(Skipped { n, reason: e.to_string() });
            }
        }
    }

    let ks_times = cfg.ks_times();
    let mut mc = Vec::new();
    if !cfg.mc_n.is_empty() {
        let lim = limit_height_samples(&p, &ks_times, cfg.limit_samples, cfg.seed)?;
        let d = ks_times.len();
        let lim_cols: Vec<Vec<f64>> = (0..d).map(|j| column(&lim, d, j)).collect();
        for &n in &cfg.mc_n {
            let t0 = Instant::now();
            let r = match rates(n) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("skipping sampled n = {n}: {e}");
                    skipped.push(Skipped { n, reason: e.to_string() });
                    continue;
                }
            };
            let seed = sub_seed(cfg.seed, 100 + n as u64);
            let mode = LaplaceMode::MonteCarlo { samples: cfg.samples, seed, source: cfg.source };
            let v = match finite_n_laplace(&r, &cfg.query, mode) {
                Ok(v) => v,
                Err(e) => {
                    log::warn!("skipping sampled n = {n}: {e}");
                    skipped.push(Skipped { n, reason: e.to_string() });
                    continue;
                }
            };
            let hs = height_draws(&r, &ks_times, cfg.samples, sub_seed(seed, 7), cfg.source, cfg.observable)?;
            let mut g = rng::stream(sub_seed(seed, 8), 0);
            let scaled: Vec<f64> = if cfg.jitter {
                jittered_scaled(&hs, n, &mut g)
            } else {
                hs.iter().map(|&h| h as f64 / (n as f64).sqrt()).collect()
            };
            let ks: Vec<KsEntry> = ks_times
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    let stat = ks_two_sample(&column(&scaled, d, j), &lim_cols[j]);
                    KsEntry { x, statistic: stat, threshold: cfg.ks_threshold, pass: stat < cfg.ks_threshold }
                })
                .collect();
            let last = column(&scaled, d, d - 1);
            let half = last.len() / 2;
            let split = ks_two_sample(&last[..half], &last[half..]);
            let se = v.se.unwrap_or(0.0);
            mc.push(McEntry {
                n,
                value: v.value,
                se,
                ci99: (v.value - Z99 * se, v.value + Z99 * se),
                gap: (v.value - limit_value).abs(),
                ks,
                split_half_ks: split,
                seconds: t0.elapsed().as_secs_f64(),
            });
        }
    }

    let exact_gaps_decreasing = exact.windows(2).all(|w| w[1].gap < w[0].gap);
    let pts: Vec<(f64, f64)> =
        exact.iter().filter(|e| e.gap > 0.0).map(|e| ((e.n as f64).ln(), e.gap.ln())).collect();
    let ks_pass = mc.iter().all(|m| m.ks.iter().all(|k| k.pass));
    Ok(ConvergenceReport {
        config: cfg.clone(),
        limit_value,
        exact,
        mc,
        skipped,
        exact_gaps_decreasing,
        descriptive_rate: slope(&pts),
        ks_pass,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub x: f64,
    /// 1 for the mean, 2 for the second moment.
    pub order: u32,
    pub weighted: MeanSe,
    pub sampled: MeanSe,
    /// `|difference| / sqrt(se_1^2 + se_2^2)`.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnReport {
    pub params: LimitParams,
    pub options: ImportanceOptions,
    pub ess: f64,
    pub rows: Vec<MomentRow>,
    pub z_max: f64,
}

impl RnReport {
    pub fn pass(&self, bands: f64) -> bool {
        self.z_max < bands
    }
}

/// First and second moments of the importance-weighted `B / sqrt 2` paths
/// against `eta / sqrt 2` from the direct sampler, at `times`.
pub fn rn_crosscheck(p: &LimitParams, times: &[f64], opts: &ImportanceOptions, eta_count: usize) -> Result<RnReport> {
    let w = importance_sample_x(p, times, opts)?;
    let eta = sample_eta(p, &TimeGrid::new(times.to_vec())?, eta_count, sub_seed(opts.seed, 3))?;
    let mut rows = Vec::new();
    for (j, &x) in times.iter().enumerate() {
        let col: Vec<f64> = eta.at_time(x).ok_or_else(|| Error::Numerical(format!("no sample at {x}")))?;
        for order in [1, 2] {
            // The weighted paths are already on the scale of eta / sqrt 2.
            let weighted = w.mean(j, |y| y.powi(order as i32));
            let scaled: Vec<f64> = col.iter().map(|&y| (y / std::f64::consts::SQRT_2).powi(order as i32)).collect();
            let sampled = mean_se(&scaled);
            let z = (weighted.mean - sampled.mean).abs() / weighted.se.hypot(sampled.se);
            rows.push(MomentRow { x, order, weighted, sampled, z });
        }
    }
    let z_max = rows.iter().map(|r| r.z).fold(0.0, f64::max);
    Ok(RnReport { params: *p, options: *opts, ess: w.ess, rows, z_max })
}
