//! Exact-density path samplers for the limit processes on finite grids.
//!
//! Every coordinate is drawn from a one-dimensional law by inverse CDF on a
//! grid: endpoint marginals are tabulated once, and the interior values are
//! drawn left to right from bridge densities of the killed kernel.

use super::density::TimeGrid;
use super::kernels::{killed_laplace, ln_first_passage, ln_killed_kernel};
use super::norm::norm_const;
use super::params::{Branch, LimitParams};
use crate::error::{domain, Result};
use crate::quad::Quad;
use crate::rng::{chunk_sizes, stream, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::SQRT_2;

/// Points of a tabulated endpoint marginal.
pub const TABLE_POINTS: usize = 4096;
/// Points of a per-sample conditional grid.
pub const BRIDGE_POINTS: usize = 1024;
/// Tail mass beyond the tabulated range that triggers a warning.
pub const TAIL_WARN: f64 = 1e-10;
/// Fixed replica count so that output does not depend on the thread pool.
const REPLICAS: usize = 64;

/// Piecewise-linear density on a uniform grid.
#[derive(Debug, Clone, Default)]
struct Table {
    lo: f64,
    h: f64,
    f: Vec<f64>,
    cum: Vec<f64>,
}

impl Table {
    fn fill<F: Fn(f64) -> f64>(&mut self, lo: f64, hi: f64, n: usize, ln_f: F) {
        self.lo = lo;
        self.h = (hi - lo) / (n - 1) as f64;
        self.f.clear();
        self.f.extend((0..n).map(|i| ln_f(lo + i as f64 * self.h)));
        let m = self.f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in self.f.iter_mut() {
            *v = if v.is_finite() { (*v - m).exp() } else { 0.0 };
        }
        self.cum.clear();
        self.cum.push(0.0);
        let mut acc = 0.0;
        for w in self.f.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * self.h;
            self.cum.push(acc);
        }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        let total = *self.cum.last().unwrap();
        let target = rng.random::<f64>() * total;
        let i = self.cum.partition_point(|&c| c <= target).clamp(1, self.cum.len() - 1) - 1;
        let r = target - self.cum[i];
        let (f0, f1) = (self.f[i], self.f[i + 1]);
        let slope = (f1 - f0) / self.h;
        // solve f0 s + slope s^2 / 2 = r on [0, h]
        let denom = f0 + (f0 * f0 + 2.0 * slope * r).max(0.0).sqrt();
        let s = if denom > 0.0 { 2.0 * r / denom } else { 0.5 * self.h };
        self.lo + (i as f64 + (s / self.h).clamp(0.0, 1.0)) * self.h
    }
}

/// Range for a density that is a Gaussian `N(mu, sigma^2)` restricted to
/// `(0, inf)`, times factors that are bounded or grow polynomially.
fn bridge_range(mu: f64, sigma: f64) -> (f64, f64) {
    let lo = (mu - 12.0 * sigma).max(0.0);
    let width = if mu < 0.0 { (12.0 * sigma).min(40.0 * sigma * sigma / -mu) } else { 12.0 * sigma };
    (lo, mu.max(0.0) + width)
}

/// Tabulates a one-dimensional endpoint marginal with known total mass,
/// choosing the cutoff numerically and warning if the tail beyond it is
/// not negligible.
fn tabulate<F: Fn(f64) -> f64 + Copy>(ln_f: F, total: f64, what: &str) -> Table {
    let mut best = f64::NEG_INFINITY;
    let mut z = 0.0;
    let step = 0.02;
    loop {
        z += step;
        let v = ln_f(z);
        best = best.max(v);
        if (v < best - 50.0 && z > 1.0) || z > 1e4 {
            break;
        }
    }
    let mut t = Table::default();
    t.fill(0.0, z, TABLE_POINTS, ln_f);
    let quad = Quad::new(1e-14, 1e-10);
    let tail = quad.half_line(|y| ln_f(y).exp(), z).value;
    if !(tail <= TAIL_WARN * total) {
        log::warn!("{what}: truncation at {z} leaves tail mass {tail} of {total}");
    }
    t
}

/// One end of a bridge: a sampled value, or pinned at zero (entrance or
/// exit through the first-passage kernel).
#[derive(Debug, Clone, Copy)]
struct Anchor {
    time: f64,
    value: Option<f64>,
}

#[derive(Debug, Clone)]
enum Plan {
    Drift { a: f64 },
    /// Left end pinned at time 0, right end free at time 1.
    OneSided { right: Table },
    Excursion,
    General { c: f64, right: Table },
}

/// Sampler of `eta` at fixed times in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct EtaSampler {
    params: LimitParams,
    times: Vec<f64>,
    /// Times at which the underlying process is sampled, excluding anchors.
    interior: Vec<f64>,
    reversed: bool,
    plan: Plan,
}

impl EtaSampler {
    pub fn new(params: LimitParams, grid: &TimeGrid) -> Result<Self> {
        if grid.includes_zero() {
            return domain("eta vanishes at time 0; query times must lie in (0, 1]");
        }
        let times = grid.times().to_vec();
        let branch = params.branch();
        if branch == Branch::BothInf && grid.includes_one() {
            return domain("the excursion is pinned at time 1; query times must lie in (0, 1)");
        }
        // the (inf, c) branch is sampled as the reversed (c, inf) branch
        let reversed = branch == Branch::AInfCFinite;
        let inner = if reversed { params.swapped() } else { params };
        let mut interior: Vec<f64> = if reversed {
            times.iter().rev().map(|x| 1.0 - x).collect()
        } else {
            times.clone()
        };
        interior.retain(|&x| x > 0.0 && x < 1.0);
        let plan = match inner.branch() {
            Branch::Drift => Plan::Drift { a: inner.a },
            Branch::BothInf => Plan::Excursion,
            Branch::AFiniteCInf => {
                let a = inner.a;
                let right = tabulate(
                    move |y| ln_first_passage(1.0, y) - a * y / SQRT_2,
                    norm_const(&inner)?,
                    "one-sided endpoint",
                );
                Plan::OneSided { right }
            }
            Branch::General => {
                let (a, c) = (inner.a, inner.c);
                let right = tabulate(
                    move |y| killed_laplace(1.0, y, c / SQRT_2).ln() - a * y / SQRT_2,
                    norm_const(&inner)?,
                    "general endpoint",
                );
                Plan::General { c, right }
            }
            Branch::AInfCFinite => unreachable!(),
        };
        Ok(EtaSampler { params, times, interior, reversed, plan })
    }

    pub fn params(&self) -> &LimitParams {
        &self.params
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Appends one path (values at [`EtaSampler::times`]) to `out`.
    pub fn sample_into(&self, rng: &mut Rng, out: &mut Vec<f64>) {
        let mut scratch = Table::default();
        self.sample_with(rng, &mut scratch, out)
    }

    fn sample_with(&self, rng: &mut Rng, scratch: &mut Table, out: &mut Vec<f64>) {
        if let Plan::Drift { a } = self.plan {
            let mut b = 0.0;
            let mut prev = 0.0;
            for &x in &self.times {
                let z: f64 = StandardNormal.sample(rng);
                b += z * (x - prev).sqrt();
                prev = x;
                out.push(b - a * x / SQRT_2);
            }
            return;
        }
        // underlying process: left anchor at 0, right anchor at 1
        let (left, right) = match &self.plan {
            Plan::Excursion => (None, None),
            Plan::OneSided { right, .. } => (None, Some(right.sample(rng))),
            Plan::General { c, right, .. } => {
                let y1 = right.sample(rng);
                let mu = y1 - c / SQRT_2;
                let (lo, hi) = bridge_range(mu, 1.0);
                let c = *c;
                scratch.fill(lo, hi, BRIDGE_POINTS, |y| ln_killed_kernel(1.0, y, y1) - c * y / SQRT_2);
                (Some(scratch.sample(rng)), Some(y1))
            }
            Plan::Drift { .. } => unreachable!(),
        };
        let mut path = Vec::with_capacity(self.interior.len() + 1);
        let mut prev = Anchor { time: 0.0, value: left };
        let end = Anchor { time: 1.0, value: right };
        for &x in &self.interior {
            let z = bridge_sample(prev, end, x, scratch, rng);
            path.push(z);
            prev = Anchor { time: x, value: Some(z) };
        }
        let origin = left.unwrap_or(0.0);
        let at_one = right.unwrap_or(0.0);
        // tilde-eta at an underlying time u, from the interior list or an anchor
        let value_at = |u: f64| -> f64 {
            if u == 1.0 {
                at_one
            } else if u == 0.0 {
                origin
            } else {
                path[self.interior.iter().position(|&v| v == u).unwrap()]
            }
        };
        if self.reversed {
            // eta_x = tilde_x - tilde_0 with tilde_x = under_{1-x}
            let base = at_one;
            for &x in &self.times {
                out.push(value_at(1.0 - x) - base);
            }
        } else {
            for &x in &self.times {
                out.push(value_at(x) - origin);
            }
        }
    }
}

/// Draws the value at `x` given the values at the surrounding anchors.
fn bridge_sample(left: Anchor, right: Anchor, x: f64, scratch: &mut Table, rng: &mut Rng) -> f64 {
    let s = x - left.time;
    let t = right.time - x;
    let yl = left.value.unwrap_or(0.0);
    let yr = right.value.unwrap_or(0.0);
    let mu = (yl * t + yr * s) / (s + t);
    let sigma = (s * t / (s + t)).sqrt();
    let (lo, hi) = bridge_range(mu, sigma);
    scratch.fill(lo, hi, BRIDGE_POINTS, |z| {
        let l = match left.value {
            Some(y) => ln_killed_kernel(s, y, z),
            None => ln_first_passage(s, z),
        };
        let r = match right.value {
            Some(y) => ln_killed_kernel(t, z, y),
            None => ln_first_passage(t, z),
        };
        l + r
    });
    scratch.sample(rng)
}

/// Sampled paths, row-major: `values[i * d + j]` is path `i` at `times[j]`.
#[derive(Debug, Clone, Serialize)]
pub struct EtaPaths {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub count: usize,
}

impl EtaPaths {
    pub fn path(&self, i: usize) -> &[f64] {
        let d = self.times.len();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let d = self.times.len();
        self.values.iter().skip(j).step_by(d).copied().collect()
    }

    /// Column for time `x`, if it is on the grid.
    pub fn at_time(&self, x: f64) -> Option<Vec<f64>> {
        self.times.iter().position(|&t| (t - x).abs() < 1e-12).map(|j| self.column(j))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("path,time,value\n");
        for i in 0..self.count {
            for (t, v) in self.times.iter().zip(self.path(i)) {
                s += &format!("{i},{t},{v}\n");
            }
        }
        s
    }
}

/// `count` independent paths of `eta` at the grid times, which must lie in
/// `(0, 1]`. Deterministic in `seed` regardless of the thread count.
pub fn sample_eta(params: &LimitParams, grid: &TimeGrid, count: usize, seed: u64) -> Result<EtaPaths> {
    let sampler = EtaSampler::new(*params, grid)?;
    let d = grid.len();
    let chunks: Vec<Vec<f64>> = chunk_sizes(count, REPLICAS)
        .into_par_iter()
        .enumerate()
        .map(|(r, k)| {
            let mut rng = stream(seed, r as u64);
            let mut scratch = Table::default();
            let mut out = Vec::with_capacity(k * d);
            for _ in 0..k {
                sampler.sample_with(&mut rng, &mut scratch, &mut out);
            }
            out
        })
        .collect();
    Ok(EtaPaths { times: grid.times().to_vec(), values: chunks.concat(), count })
}
