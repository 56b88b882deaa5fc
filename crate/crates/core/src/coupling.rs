//! Three-species ASEP coupling three open ASEPs with ordered boundary
//! parameters, so that `tau_tilde <= tau <= tau_hat` holds pathwise.
//!
//! Species priorities are red > blue > gray > empty. Across a bond the two
//! occupants swap at rate 1 if the left one has higher priority and at rate
//! `q` if the right one does. Boundary sites mutate according to the two
//! tables in `data/mutation_tables.json`.

use crate::asep::{boundary_from_rates, rates_from_boundary, AsepRates, BoundaryParams};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::stats::{batch_mean_se, MeanSe};
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

/// Batches for the standard errors of the audited marginals; consecutive
/// epochs are correlated.
const BATCHES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Empty = 0,
    Gray = 1,
    Blue = 2,
    Red = 3,
}

impl Species {
    pub const ALL: [Species; 4] = [Species::Empty, Species::Gray, Species::Blue, Species::Red];

    fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiConfig(pub Vec<Species>);

/// The three occupation vectors read off a multispecies state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledTriple {
    pub tau_tilde: Vec<bool>,
    pub tau: Vec<bool>,
    pub tau_hat: Vec<bool>,
}

pub fn project(state: &MultiConfig) -> CoupledTriple {
    CoupledTriple {
        tau_tilde: state.0.iter().map(|&s| s == Species::Red).collect(),
        tau: state.0.iter().map(|&s| s >= Species::Blue).collect(),
        tau_hat: state.0.iter().map(|&s| s != Species::Empty).collect(),
    }
}

/// `tilde = (A, B, 1/A, D)` and `hat = (1/C, B, C, D)`.
pub fn coupled_params(p: &BoundaryParams) -> Result<(BoundaryParams, BoundaryParams)> {
    if p.a == 0.0 || p.c == 0.0 {
        return Err(Error::Domain("coupling needs A > 0 and C > 0".into()));
    }
    let tilde = BoundaryParams { c: 1.0 / p.a, ..*p };
    let hat = BoundaryParams { a: 1.0 / p.c, ..*p };
    Ok((tilde, hat))
}

#[derive(Debug, Deserialize)]
struct TableFile {
    species: Vec<String>,
    left: Vec<Vec<String>>,
    right: Vec<Vec<String>>,
}

/// Symbolic mutation tables as transcribed; `[from][to]`, species order
/// empty, gray, blue, red.
pub fn symbolic_tables() -> ([[String; 4]; 4], [[String; 4]; 4]) {
    let raw: TableFile = serde_json::from_str(include_str!("../data/mutation_tables.json"))
        .expect("mutation table data file is valid JSON");
    assert_eq!(raw.species, ["empty", "gray", "blue", "red"]);
    let conv = |t: Vec<Vec<String>>| -> [[String; 4]; 4] {
        let rows: Vec<[String; 4]> = t.into_iter().map(|r| r.try_into().expect("4 columns")).collect();
        rows.try_into().expect("4 rows")
    };
    (conv(raw.left), conv(raw.right))
}

fn eval_entry(expr: &str, vars: &[(&str, f64)]) -> Result<f64> {
    let mut total = 0.0;
    let mut sign = 1.0;
    for tok in expr.split_whitespace() {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            "0" => {}
            name => {
                let v = vars
                    .iter()
                    .find(|(k, _)| *k == name)
                    .ok_or_else(|| Error::Config(format!("unknown symbol {name} in mutation table")))?
                    .1;
                total += sign * v;
            }
        }
    }
    Ok(total)
}

/// Numeric rates of the coupled dynamics.
#[derive(Debug, Clone)]
pub struct CoupledRates {
    pub base: AsepRates,
    pub tilde: AsepRates,
    pub hat: AsepRates,
    pub left: [[f64; 4]; 4],
    pub right: [[f64; 4]; 4],
}

impl CoupledRates {
    pub fn new(r: &AsepRates) -> Result<Self> {
        let p = boundary_from_rates(r)?;
        let (tp, hp) = coupled_params(&p)?;
        let tilde = rates_from_boundary(&tp, r.q, r.n)?;
        let hat = rates_from_boundary(&hp, r.q, r.n)?;
        let vars = [
            ("alpha", r.alpha),
            ("beta", r.beta),
            ("gamma", r.gamma),
            ("delta", r.delta),
            ("alpha_tilde", tilde.alpha),
            ("gamma_tilde", tilde.gamma),
            ("beta_hat", hat.beta),
            ("delta_hat", hat.delta),
        ];
        let (ls, rs) = symbolic_tables();
        let mut left = [[0.0; 4]; 4];
        let mut right = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                left[i][j] = eval_entry(&ls[i][j], &vars)?;
                right[i][j] = eval_entry(&rs[i][j], &vars)?;
                for (side, v, e) in [("left", left[i][j], &ls[i][j]), ("right", right[i][j], &rs[i][j])] {
                    // Reciprocal round trips can leave -1e-17 where the
                    // difference is exactly zero.
                    if v < -1e-12 {
                        return Err(Error::NegativeRate(format!("{side} table entry {e} = {v}")));
                    }
                }
                left[i][j] = left[i][j].max(0.0);
                right[i][j] = right[i][j].max(0.0);
            }
        }
        Ok(CoupledRates { base: *r, tilde, hat, left, right })
    }
}

/// The multispecies chain.
#[derive(Debug, Clone)]
pub struct MultiChain {
    pub rates: CoupledRates,
    pub state: MultiConfig,
    pub time: f64,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Swap(usize),
    Left(Species),
    Right(Species),
}

impl MultiChain {
    /// Starts from the all-empty state.
    pub fn new(rates: CoupledRates) -> Self {
        let n = rates.base.n;
        MultiChain { rates, state: MultiConfig(vec![Species::Empty; n]), time: 0.0 }
    }

    fn for_each_event(&self, mut f: impl FnMut(Event, f64) -> bool) {
        let s = &self.state.0;
        let n = s.len();
        for (to, &rate) in self.rates.left[s[0] as usize].iter().enumerate() {
            if rate > 0.0 && f(Event::Left(Species::from_index(to)), rate) {
                return;
            }
        }
        for j in 0..n - 1 {
            let rate = match s[j].cmp(&s[j + 1]) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Less => self.rates.base.q,
                std::cmp::Ordering::Equal => 0.0,
            };
            if rate > 0.0 && f(Event::Swap(j), rate) {
                return;
            }
        }
        for (to, &rate) in self.rates.right[s[n - 1] as usize].iter().enumerate() {
            if rate > 0.0 && f(Event::Right(Species::from_index(to)), rate) {
                return;
            }
        }
    }

    pub fn total_rate(&self) -> f64 {
        let mut t = 0.0;
        self.for_each_event(|_, r| {
            t += r;
            false
        });
        t
    }

    /// One Gillespie event.
    pub fn step(&mut self, rng: &mut Rng) {
        let total = self.total_rate();
        let hold: f64 = Exp1.sample(rng);
        self.time += hold / total;
        self.fire(total, rng);
    }

    fn fire(&mut self, total: f64, rng: &mut Rng) {
        let mut u = rng.random::<f64>() * total;
        let mut chosen = None;
        let mut last = None;
        self.for_each_event(|e, r| {
            last = Some(e);
            u -= r;
            if u < 0.0 {
                chosen = Some(e);
                true
            } else {
                false
            }
        });
        let n = self.state.0.len();
        match chosen.or(last).expect("at least one event has positive rate") {
            Event::Swap(j) => self.state.0.swap(j, j + 1),
            Event::Left(s) => self.state.0[0] = s,
            Event::Right(s) => self.state.0[n - 1] = s,
        }
    }

    /// Runs until `time + dt`, discarding the pending event at the horizon.
    pub fn advance(&mut self, dt: f64, rng: &mut Rng) {
        let t_end = self.time + dt;
        loop {
            let total = self.total_rate();
            let hold: f64 = Exp1.sample(rng);
            if self.time + hold / total > t_end {
                self.time = t_end;
                return;
            }
            self.time += hold / total;
            self.fire(total, rng);
        }
    }
}

/// One event of the multispecies dynamics from `state`.
pub fn multispecies_step(state: &MultiConfig, rates: &CoupledRates, rng: &mut Rng) -> MultiConfig {
    let mut chain = MultiChain { rates: rates.clone(), state: state.clone(), time: 0.0 };
    chain.step(rng);
    chain.state
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub epochs: usize,
    pub burn_in: Option<f64>,
    pub thin: Option<f64>,
    /// Keep histograms of the three projected states (only for `n <= 12`).
    pub histograms: bool,
}

impl AuditOptions {
    pub fn new(epochs: usize) -> Self {
        AuditOptions { epochs, burn_in: None, thin: None, histograms: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub n: usize,
    pub epochs: usize,
    pub pointwise_violations: u64,
    pub sandwich_violations: u64,
    pub hat_prediction: f64,
    pub tilde_prediction: f64,
    pub hat_marginals: Vec<MeanSe>,
    pub tilde_marginals: Vec<MeanSe>,
    pub tau_marginals: Vec<MeanSe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histograms: Option<[Vec<u64>; 3]>,
}

impl AuditReport {
    /// Largest deviation of a site marginal from its Bernoulli prediction,
    /// in standard errors.
    pub fn max_z(&self) -> f64 {
        let z = |ms: &[MeanSe], p: f64| ms.iter().map(|m| (m.mean - p).abs() / m.se).fold(0.0, f64::max);
        z(&self.hat_marginals, self.hat_prediction).max(z(&self.tilde_marginals, self.tilde_prediction))
    }

    /// Per-site CSV: site, hat mean, hat se, tilde mean, tilde se, tau mean, tau se.
    pub fn site_csv(&self) -> String {
        let mut s = String::from("site,hat_mean,hat_se,tilde_mean,tilde_se,tau_mean,tau_se\n");
        for j in 0..self.n {
            let (h, t, m) = (self.hat_marginals[j], self.tilde_marginals[j], self.tau_marginals[j]);
            s += &format!("{},{},{},{},{},{},{}\n", j + 1, h.mean, h.se, t.mean, t.se, m.mean, m.se);
        }
        s
    }
}

/// Count of grid pairs `x_0 < x_1` on `{j/n}` violating the centered-height
/// sandwich. With integer sums the two bounds collapse to
/// `sum(2 tau_tilde - 1) <= sum(2 tau - 1) <= sum(2 tau_hat - 1)` over
/// every block, but the centered form is what is checked.
pub fn sandwich_violations(t: &CoupledTriple, a: f64, c: f64) -> u64 {
    let n = t.tau.len();
    let prefix = |v: &[bool], center: f64| {
        let mut out = vec![0.0; n + 1];
        for j in 0..n {
            out[j + 1] = out[j] + 2.0 * f64::from(u8::from(v[j])) - center;
        }
        out
    };
    let h = prefix(&t.tau, 1.0);
    let hh = prefix(&t.tau_tilde, 2.0 * a / (1.0 + a));
    let hl = prefix(&t.tau_hat, 2.0 / (1.0 + c));
    let eps_tilde = (a - 1.0) / (1.0 + a);
    let eps_hat = (1.0 - c) / (1.0 + c);
    let mut bad = 0;
    for n0 in 0..=n {
        for n1 in n0 + 1..=n {
            let k = (n1 - n0) as f64;
            let dh = h[n1] - h[n0];
            let lower = hh[n1] - hh[n0] + k * eps_tilde;
            let upper = hl[n1] - hl[n0] + k * eps_hat;
            if dh < lower - 1e-9 || dh > upper + 1e-9 {
                bad += 1;
            }
        }
    }
    bad
}

pub fn sandwich_audit(r: &AsepRates, opts: AuditOptions, seed: u64) -> Result<AuditReport> {
    let rates = CoupledRates::new(r)?;
    let p = boundary_from_rates(r)?;
    let n = r.n;
    let burn = opts.burn_in.unwrap_or(20.0 * (n * n) as f64 / (1.0 - r.q));
    let thin = opts.thin.unwrap_or((n * n) as f64);
    let mut rng = rng::stream(seed, 0);
    let mut chain = MultiChain::new(rates);
    chain.advance(burn, &mut rng);
    let mut hat = vec![Vec::with_capacity(opts.epochs); n];
    let mut tilde = vec![Vec::with_capacity(opts.epochs); n];
    let mut tau = vec![Vec::with_capacity(opts.epochs); n];
    let keep_hist = opts.histograms && n <= 12;
    let mut hist = [vec![0u64; 1 << n.min(12)], vec![0u64; 1 << n.min(12)], vec![0u64; 1 << n.min(12)]];
    let (mut pointwise, mut sandwich) = (0, 0);
    let index = |v: &[bool]| v.iter().enumerate().fold(0usize, |acc, (j, &b)| acc | (usize::from(b) << j));
    for e in 0..opts.epochs {
        if e > 0 {
            chain.advance(thin, &mut rng);
        }
        let t = project(&chain.state);
        for j in 0..n {
            if t.tau_tilde[j] && !t.tau[j] || t.tau[j] && !t.tau_hat[j] {
                pointwise += 1;
            }
            hat[j].push(f64::from(u8::from(t.tau_hat[j])));
            tilde[j].push(f64::from(u8::from(t.tau_tilde[j])));
            tau[j].push(f64::from(u8::from(t.tau[j])));
        }
        sandwich += sandwich_violations(&t, p.a, p.c);
        if keep_hist {
            hist[0][index(&t.tau_tilde)] += 1;
            hist[1][index(&t.tau)] += 1;
            hist[2][index(&t.tau_hat)] += 1;
        }
    }
    let summarize = |v: &Vec<Vec<f64>>| v.iter().map(|xs| batch_mean_se(xs, BATCHES)).collect::<Vec<_>>();
    Ok(AuditReport {
        n,
        epochs: opts.epochs,
        pointwise_violations: pointwise,
        sandwich_violations: sandwich,
        hat_prediction: 1.0 / (1.0 + p.c),
        tilde_prediction: p.a / (1.0 + p.a),
        hat_marginals: summarize(&hat),
        tilde_marginals: summarize(&tilde),
        tau_marginals: summarize(&tau),
        histograms: keep_hist.then_some(hist),
    })
}
