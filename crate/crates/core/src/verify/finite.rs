//! Finite-`n` Laplace transforms of the height function, exactly over all
//! states or by averaging stationary draws.

use crate::asep::{
    hole_transform, stationary_exact, AsepRates, BurninOptions, Configuration, ExactSampler, Position,
    TasepSampler, DEFAULT_CAP,
};
use crate::error::{domain, Result};
use crate::laplace::LaplaceQuery;
use crate::rng::{self, Rng};
use crate::stats::{mean_se, MeanSe};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Replica streams used by every sampler here; fixed so results do not
/// depend on the thread count.
pub const REPLICAS: usize = 64;

/// Where stationary configurations come from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationarySource {
    /// The exact sampler when the state space fits, else the matrix product
    /// sampler when it applies, else burn-in simulation.
    #[default]
    Auto,
    Exact,
    Matrix,
    Burnin,
}

/// Which height observable is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// `h_n(x)`.
    #[default]
    Height,
    /// `h'_n(1 - x) - h'_n(1)` for the particle–hole image `h'`; it differs
    /// from `h_n(x)` by at most one.
    HoleReflected,
}

fn matrix_applies(r: &AsepRates) -> bool {
    r.q == 0.0 && r.gamma == 0.0 && r.delta == 0.0 && r.alpha <= 1.0 && r.beta <= 1.0
}

enum Draw {
    Exact(ExactSampler),
    Matrix(TasepSampler),
    Burnin(BurninOptions),
}

impl Draw {
    fn new(r: &AsepRates, source: StationarySource) -> Result<Self> {
        Ok(match source {
            StationarySource::Exact => Draw::Exact(ExactSampler::new(&stationary_exact(r)?)),
            StationarySource::Matrix => Draw::Matrix(TasepSampler::new(r)?),
            StationarySource::Burnin => Draw::Burnin(BurninOptions { replicas: REPLICAS, ..Default::default() }),
            StationarySource::Auto if r.n <= 12 => Draw::Exact(ExactSampler::new(&stationary_exact(r)?)),
            StationarySource::Auto if matrix_applies(r) => Draw::Matrix(TasepSampler::new(r)?),
            StationarySource::Auto => Draw::Burnin(BurninOptions { replicas: REPLICAS, ..Default::default() }),
        })
    }
}

fn observe(c: &Configuration, xs: &[Position], obs: Observable, out: &mut Vec<i64>) {
    match obs {
        Observable::Height => {
            // One pass over the prefix sums.
            let mut h = 0i64;
            let mut j = 0;
            let mut ends: Vec<(usize, usize)> = xs.iter().enumerate().map(|(i, x)| (x.floor_times(c.len()), i)).collect();
            ends.sort_unstable();
            let mut vals = vec![0i64; xs.len()];
            for (end, i) in ends {
                while j < end {
                    h += if c.0[j] { 1 } else { -1 };
                    j += 1;
                }
                vals[i] = h;
            }
            out.extend_from_slice(&vals);
        }
        Observable::HoleReflected => {
            let e = hole_transform(c);
            let total = crate::asep::height_at(&e, Position::new(1, 1).unwrap());
            for x in xs {
                out.push(crate::asep::height_at(&e, x.complement()) - total);
            }
        }
    }
}

/// Heights at `xs` for `count` stationary draws, row-major (`count` rows of
/// `xs.len()`). Deterministic in `seed`.
pub fn height_draws(
    r: &AsepRates,
    xs: &[f64],
    count: usize,
    seed: u64,
    source: StationarySource,
    obs: Observable,
) -> Result<Vec<i64>> {
    let pos: Vec<Position> = xs.iter().map(|&x| Position::from_f64(x)).collect::<Result<_>>()?;
    let draw = Draw::new(r, source)?;
    let chunks = rng::chunk_sizes(count, REPLICAS);
    let parts: Vec<Result<Vec<i64>>> = chunks
        .par_iter()
        .enumerate()
        .map(|(rep, &k)| {
            let mut g = rng::stream(seed, rep as u64);
            let mut out = Vec::with_capacity(k * pos.len());
            match &draw {
                Draw::Exact(s) => (0..k).for_each(|_| observe(&s.sample(&mut g), &pos, obs, &mut out)),
                Draw::Matrix(s) => {
                    let mut buf = Configuration(Vec::with_capacity(r.n));
                    for _ in 0..k {
                        s.sample_into(&mut g, &mut buf.0);
                        observe(&buf, &pos, obs, &mut out);
                    }
                }
                Draw::Burnin(opts) => {
                    let one = BurninOptions { replicas: 1, ..*opts };
                    let configs = crate::asep::sample_stationary(
                        r,
                        crate::asep::SampleMethod::Burnin(one),
                        k,
                        g.random(),
                    )?;
                    configs.iter().for_each(|c| observe(c, &pos, obs, &mut out));
                }
            }
            Ok(out)
        })
        .collect();
    let mut out = Vec::with_capacity(count * pos.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Value of a finite-`n` transform, with a standard error when sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteValue {
    pub value: f64,
    /// Standard error; `None` for exact evaluation.
    pub se: Option<f64>,
    pub samples: usize,
}

impl FiniteValue {
    /// Normal-approximation interval `value +- z se`.
    pub fn ci(&self, z: f64) -> Option<(f64, f64)> {
        self.se.map(|s| (self.value - z * s, self.value + z * s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum LaplaceMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64, #[serde(default)] source: StationarySource },
}

fn weight(q: &LaplaceQuery, h: &[i64], scale: f64) -> f64 {
    let e: f64 = q.c().iter().zip(h).map(|(c, &h)| c * h as f64).sum();
    (-e * scale).exp()
}

/// `< exp(-sum c_k h_n(x_k) / sqrt n) >` under the stationary law of `r`.
pub fn finite_n_laplace(r: &AsepRates, q: &LaplaceQuery, mode: LaplaceMode) -> Result<FiniteValue> {
    let scale = 1.0 / (r.n as f64).sqrt();
    match mode {
        LaplaceMode::Exact => {
            if r.n > DEFAULT_CAP {
                return domain(format!("exact mode needs n <= {DEFAULT_CAP}, got {}", r.n));
            }
            let mu = stationary_exact(r)?;
            let pos: Vec<Position> = q.x().iter().map(|&x| Position::from_f64(x)).collect::<Result<_>>()?;
            let mut h = Vec::with_capacity(q.d());
            let value = mu
                .probs
                .iter()
                .enumerate()
                .map(|(s, &p)| {
                    h.clear();
                    observe(&Configuration::from_index(s, r.n), &pos, Observable::Height, &mut h);
                    p * weight(q, &h, scale)
                })
                .sum();
            Ok(FiniteValue { value, se: None, samples: 0 })
        }
        LaplaceMode::MonteCarlo { samples, seed, source } => {
            let hs = height_draws(r, q.x(), samples, seed, source, Observable::Height)?;
            let ws: Vec<f64> = hs.chunks(q.d()).map(|h| weight(q, h, scale)).collect();
            let MeanSe { mean, se, .. } = mean_se(&ws);
            Ok(FiniteValue { value: mean, se: Some(se), samples })
        }
    }
}

/// Adds `U(-1, 1)` to each height before scaling by `1/sqrt n`. Heights
/// live on a lattice of spacing 2, so this spreads each atom over its cell
/// and makes distances to continuous limits meaningful.
pub fn jittered_scaled(heights: &[i64], n: usize, rng: &mut Rng) -> Vec<f64> {
    let s = 1.0 / (n as f64).sqrt();
    heights.iter().map(|&h| (h as f64 + rng.random_range(-1.0..1.0)) * s).collect()
}
