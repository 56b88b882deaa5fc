//! Event-driven simulation of the open ASEP and stationary sampling.

use super::config::Configuration;
use super::generator::{stationary_exact_capped, Stationary, DEFAULT_CAP};
use super::params::AsepRates;
use crate::error::Result;
use crate::rng::{self, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Time(f64),
    Events(u64),
}

/// A running chain. Each step costs `O(n)`.
#[derive(Debug, Clone)]
pub struct AsepChain {
    pub rates: AsepRates,
    pub state: Vec<bool>,
    pub time: f64,
    pub events: u64,
}

impl AsepChain {
    pub fn new(rates: AsepRates, start: Configuration) -> Self {
        assert_eq!(start.len(), rates.n);
        AsepChain { rates, state: start.0, time: 0.0, events: 0 }
    }

    fn for_each_move(&self, mut f: impl FnMut(Move, f64) -> bool) {
        let r = &self.rates;
        let s = &self.state;
        let n = s.len();
        let left = if s[0] { (Move::Exit1, r.gamma) } else { (Move::Enter1, r.alpha) };
        if left.1 > 0.0 && f(left.0, left.1) {
            return;
        }
        for j in 0..n - 1 {
            let m = match (s[j], s[j + 1]) {
                (true, false) => (Move::Right(j), 1.0),
                (false, true) if r.q > 0.0 => (Move::Left(j), r.q),
                _ => continue,
            };
            if f(m.0, m.1) {
                return;
            }
        }
        let right = if s[n - 1] { (Move::ExitN, r.beta) } else { (Move::EnterN, r.delta) };
        if right.1 > 0.0 {
            f(right.0, right.1);
        }
    }

    pub fn total_rate(&self) -> f64 {
        let mut t = 0.0;
        self.for_each_move(|_, r| {
            t += r;
            false
        });
        t
    }

    /// Advances by one event, or returns `false` if no move is possible.
    pub fn step(&mut self, rng: &mut Rng) -> bool {
        let total = self.total_rate();
        if total <= 0.0 {
            return false;
        }
        let hold: f64 = Exp1.sample(rng);
        self.time += hold / total;
        self.fire(total, rng);
        true
    }

    fn fire(&mut self, total: f64, rng: &mut Rng) {
        let mut u = rng.random::<f64>() * total;
        let mut chosen = None;
        let mut last = None;
        self.for_each_move(|m, r| {
            last = Some(m);
            u -= r;
            if u < 0.0 {
                chosen = Some(m);
                true
            } else {
                false
            }
        });
        // `last` covers the rounding case where u never drops below zero.
        self.apply(chosen.or(last).unwrap());
        self.events += 1;
    }

    fn apply(&mut self, m: Move) {
        let n = self.state.len();
        match m {
            Move::Enter1 => self.state[0] = true,
            Move::Exit1 => self.state[0] = false,
            Move::EnterN => self.state[n - 1] = true,
            Move::ExitN => self.state[n - 1] = false,
            Move::Right(j) | Move::Left(j) => self.state.swap(j, j + 1),
        }
    }

    /// Runs until the horizon; `observe(time, state)` sees the state after
    /// every event. With a time horizon the chain is left at exactly that
    /// time (the pending event is discarded, which is exact by memorylessness).
    pub fn run(&mut self, horizon: Horizon, rng: &mut Rng, mut observe: impl FnMut(f64, &[bool])) {
        match horizon {
            Horizon::Events(k) => {
                for _ in 0..k {
                    if !self.step(rng) {
                        break;
                    }
                    observe(self.time, &self.state);
                }
            }
            Horizon::Time(t_end) => loop {
                let total = self.total_rate();
                if total <= 0.0 {
                    self.time = t_end;
                    break;
                }
                let hold: f64 = Exp1.sample(rng);
                if self.time + hold / total > t_end {
                    self.time = t_end;
                    break;
                }
                self.time += hold / total;
                self.fire(total, rng);
                observe(self.time, &self.state);
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Enter1,
    Exit1,
    EnterN,
    ExitN,
    Right(usize),
    Left(usize),
}

/// Trajectory `(time, configuration)` starting with the initial state.
pub fn gillespie_run(
    r: &AsepRates,
    start: Configuration,
    horizon: Horizon,
    seed: u64,
) -> Vec<(f64, Configuration)> {
    let mut rng = rng::stream(seed, 0);
    let mut chain = AsepChain::new(*r, start.clone());
    let mut out = vec![(0.0, start)];
    chain.run(horizon, &mut rng, |t, s| out.push((t, Configuration(s.to_vec()))));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleMethod {
    Exact,
    Burnin(BurninOptions),
}

/// Burn-in sampling. `None` picks the defaults `20 n^2 / (1-q)` for the
/// burn-in time and `n^2` for the spacing between recorded states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BurninOptions {
    pub burn_in: Option<f64>,
    pub thin: Option<f64>,
    pub replicas: usize,
}

impl BurninOptions {
    pub fn burn_in_time(&self, r: &AsepRates) -> f64 {
        self.burn_in.unwrap_or(20.0 * (r.n * r.n) as f64 / (1.0 - r.q))
    }

    pub fn thin_time(&self, r: &AsepRates) -> f64 {
        self.thin.unwrap_or((r.n * r.n) as f64)
    }
}

/// Inverse-cdf sampler over an exact stationary vector.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    n: usize,
    cdf: Vec<f64>,
}

impl ExactSampler {
    pub fn new(mu: &Stationary) -> Self {
        let mut acc = 0.0;
        let cdf = mu
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        ExactSampler { n: mu.n, cdf }
    }

    pub fn sample_index(&self, rng: &mut Rng) -> usize {
        let u = rng.random::<f64>() * self.cdf.last().unwrap();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample(&self, rng: &mut Rng) -> Configuration {
        Configuration::from_index(self.sample_index(rng), self.n)
    }
}

pub fn sample_stationary(
    r: &AsepRates,
    method: SampleMethod,
    count: usize,
    seed: u64,
) -> Result<Vec<Configuration>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    match method {
        SampleMethod::Exact => {
            let mu = stationary_exact_capped(r, DEFAULT_CAP)?;
            let s = ExactSampler::new(&mu);
            let mut rng = rng::stream(seed, 0);
            Ok((0..count).map(|_| s.sample(&mut rng)).collect())
        }
        SampleMethod::Burnin(opts) => {
            let burn = opts.burn_in_time(r);
            let thin = opts.thin_time(r);
            let chunks = rng::chunk_sizes(count, opts.replicas);
            let parts: Vec<Vec<Configuration>> = chunks
                .par_iter()
                .enumerate()
                .map(|(rep, &k)| {
                    let mut rng = rng::stream(seed, rep as u64);
                    let mut chain = AsepChain::new(*r, Configuration::empty(r.n));
                    chain.run(Horizon::Time(burn), &mut rng, |_, _| {});
                    let mut out = Vec::with_capacity(k);
                    for i in 0..k {
                        if i > 0 {
                            let t = chain.time + thin;
                            chain.run(Horizon::Time(t), &mut rng, |_, _| {});
                        }
                        out.push(Configuration(chain.state.clone()));
                    }
                    out
                })
                .collect();
            Ok(parts.into_iter().flatten().collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asep::stationary_exact;
    use crate::stats::{chi_square_gof, mean_se};

    #[test]
    fn no_injection_stays_empty() {
        let r = AsepRates::new_nonneg(0.0, 1.0, 0.5, 0.0, 0.3, 4).unwrap();
        let traj = gillespie_run(&r, Configuration::empty(4), Horizon::Time(100.0), 1);
        assert!(traj.iter().all(|(_, c)| c.particles() == 0));
    }

    #[test]
    fn deterministic_given_seed() {
        let r = AsepRates::new(0.6, 0.8, 0.1, 0.2, 0.4, 5).unwrap();
        let a = gillespie_run(&r, Configuration::empty(5), Horizon::Events(500), 9);
        let b = gillespie_run(&r, Configuration::empty(5), Horizon::Events(500), 9);
        assert_eq!(a, b);
        let c = gillespie_run(&r, Configuration::empty(5), Horizon::Events(500), 10);
        assert_ne!(a, c);
    }

    #[test]
    fn site_one_occupation_frequency() {
        let r = AsepRates::new(0.6, 0.8, 0.1, 0.2, 0.4, 2).unwrap();
        let want = stationary_exact(&r).unwrap().site_density(1);
        let xs: Vec<f64> = sample_stationary(
            &r,
            SampleMethod::Burnin(BurninOptions { burn_in: Some(50.0), thin: Some(4.0), replicas: 4 }),
            20_000,
            3,
        )
        .unwrap()
        .iter()
        .map(|c| f64::from(u8::from(c.site(1))))
        .collect();
        let m = mean_se(&xs);
        assert!(m.covers(want, 3.0), "{m:?} vs {want}");
    }

    fn counts(samples: &[Configuration], states: usize) -> Vec<u64> {
        let mut c = vec![0u64; states];
        for s in samples {
            c[s.index()] += 1;
        }
        c
    }

    #[test]
    fn burnin_chi_square() {
        let r = AsepRates::new(0.9, 0.5, 0.3, 0.05, 0.2, 3).unwrap();
        let mu = stationary_exact(&r).unwrap();
        let samples = sample_stationary(&r, SampleMethod::Burnin(BurninOptions::default()), 5000, 11).unwrap();
        let t = chi_square_gof(&counts(&samples, 8), &mu.probs);
        assert!(t.p_value > 0.01, "{t:?}");
    }

    #[test]
    fn exact_sampler_frequencies() {
        let r = AsepRates::new(0.9, 0.5, 0.3, 0.05, 0.2, 3).unwrap();
        let mu = stationary_exact(&r).unwrap();
        let samples = sample_stationary(&r, SampleMethod::Exact, 40_000, 5).unwrap();
        let c = counts(&samples, 8);
        for (k, p) in mu.probs.iter().enumerate() {
            let f = c[k] as f64 / 40_000.0;
            let se = (p * (1.0 - p) / 40_000.0).sqrt();
            assert!((f - p).abs() < 4.0 * se);
        }
        assert!(sample_stationary(&r, SampleMethod::Exact, 0, 5).unwrap().is_empty());
    }
}
