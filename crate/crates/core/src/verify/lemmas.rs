//! Pointwise convergence of rescaled Askey–Wilson marginal and transition
//! densities near the triple point. Pure formula evaluation.

use crate::askey_wilson::{aw_marginal, aw_transition};
use crate::asep::{BoundaryParams, TriplePointSchedule};
use crate::error::{domain, Error, Result};
use crate::limit::{biane_kernel, Branch};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The normalization `Pi_n` of the rescaled marginal density.
///
/// The `(inf, c)` case is the mirror image of `(a, inf)`: `1 - C_n` is
/// replaced by `1 - A_n`.
pub fn pi_n(s: &TriplePointSchedule, n: usize) -> Result<f64> {
    let p = s.at(n)?;
    let pre = (1.0 - p.b * p.d) / (1.0 - p.a * p.b * p.c * p.d) / PI;
    let rn = (n as f64).sqrt();
    Ok(pre
        * match s.limit.branch() {
            Branch::General | Branch::Drift => s.limit.a + s.limit.c,
            Branch::AFiniteCInf => 1.0 / (rn * (1.0 - p.c)),
            Branch::AInfCFinite => 1.0 / (rn * (1.0 - p.a)),
            Branch::BothInf => (1.0 - p.a * p.c) / (rn * rn * rn * (1.0 - p.a).powi(2) * (1.0 - p.c).powi(2)),
        })
}

/// The pointwise limit of `pi_t^{(n)}(u) / Pi_n`.
pub fn marginal_limit(s: &TriplePointSchedule, t: f64, u: f64) -> f64 {
    let (a, c) = (s.limit.a, s.limit.c);
    let fa = if a.is_finite() { 1.0 / ((a - t).powi(2) + u) } else { 1.0 };
    let fc = if c.is_finite() { 1.0 / ((c + t).powi(2) + u) } else { 1.0 };
    u.sqrt() * fa * fc
}

/// `pi_t^{(n)}(u) = (1/2n) pi_{t_n}(1 - u/2n)` with `t_n = e^{2t/sqrt n}`:
/// the continuous part of the marginal of `2n(1 - Y)`.
pub fn rescaled_marginal(p: &BoundaryParams, q: f64, n: usize, t: f64, u: f64) -> Result<f64> {
    let nf = n as f64;
    let tn = (2.0 * t / nf.sqrt()).exp();
    Ok(aw_marginal(tn, p, q)?.density(1.0 - u / (2.0 * nf)) / (2.0 * nf))
}

/// `p_{s,t}^{(n)}(u, v)`, the transition density of `2n(1 - Y)` between
/// times `s_n < t_n`.
pub fn rescaled_transition(p: &BoundaryParams, q: f64, n: usize, s: f64, t: f64, u: f64, v: f64) -> Result<f64> {
    let nf = n as f64;
    let (sn, tn) = ((2.0 * s / nf.sqrt()).exp(), (2.0 * t / nf.sqrt()).exp());
    let m = aw_transition(sn, 1.0 - u / (2.0 * nf), tn, p, q)?;
    Ok(m.density(1.0 - v / (2.0 * nf)) / (2.0 * nf))
}

/// The pointwise limit of the rescaled transition density. With `doob`
/// false the factor `((a-s)^2 + u)/((a-t)^2 + v)` is dropped, which is only
/// correct for `a = inf`; it exists as a negative control.
pub fn transition_limit(a: f64, s: f64, t: f64, u: f64, v: f64, doob: bool) -> f64 {
    let k = biane_kernel(t - s, u, v).unwrap_or(0.0);
    if a.is_finite() && doob {
        k * ((a - s).powi(2) + u) / ((a - t).powi(2) + v)
    } else {
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub n: usize,
    pub point: Vec<f64>,
    pub finite: f64,
    pub limit: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub name: String,
    pub rows: Vec<RatioRow>,
    /// `max |ratio - 1|` per `n`, in the order of the `n` list.
    pub max_error: Vec<(usize, f64)>,
    /// Largest `pi_t^{(n)}(u) / (Pi_n sqrt u)` over `u` in `(0, 2n]`, per `n`
    /// (marginal check only).
    pub sqrt_bound: Vec<(usize, f64)>,
}

impl RatioReport {
    /// Whether the last `n` is within `tol` everywhere and the error
    /// decreases along the `n` list.
    pub fn passes(&self, tol: f64) -> bool {
        let last_ok = self.max_error.last().is_some_and(|&(_, e)| e < tol);
        let monotone = self.max_error.windows(2).all(|w| w[1].1 <= w[0].1);
        last_ok && monotone
    }
}

fn summarize(name: &str, rows: Vec<RatioRow>, ns: &[usize]) -> RatioReport {
    let max_error = ns
        .iter()
        .map(|&n| {
            let e = rows.iter().filter(|r| r.n == n).map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
            (n, e)
        })
        .collect();
    RatioReport { name: name.into(), rows, max_error, sqrt_bound: Vec::new() }
}

fn check_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return domain(format!("n list must be nonempty and increasing, got {ns:?}"));
    }
    Ok(())
}

/// Ratios `pi_t^{(n)}(u) / (Pi_n * limit(u))` on `u_grid` for each `n`,
/// plus the `sqrt u` envelope over a logarithmic `u` grid.
pub fn lemma1_check(s: &TriplePointSchedule, q: f64, t: f64, u_grid: &[f64], ns: &[usize]) -> Result<RatioReport> {
    check_ns(ns)?;
    let (a, c) = (s.limit.a, s.limit.c);
    if s.limit.branch() == Branch::Drift || !(-c < t && t < a) {
        return Err(Error::BranchMismatch(format!("need -c < t < a and a + c > 0, got t = {t}, ({a}, {c})")));
    }
    let mut rows = Vec::new();
    let mut bound = Vec::new();
    for &n in ns {
        let p = s.at(n)?;
        let pn = pi_n(s, n)?;
        for &u in u_grid {
            let finite = rescaled_marginal(&p, q, n, t, u)? / pn;
            let limit = marginal_limit(s, t, u);
            rows.push(RatioRow { n, point: vec![u], finite, limit, ratio: finite / limit });
        }
        let top = 2.0 * n as f64;
        let mut sup: f64 = 0.0;
        for k in 0..=400 {
            let u = top * 1e-8f64.powf(1.0 - k as f64 / 400.0);
            sup = sup.max(rescaled_marginal(&p, q, n, t, u)? / (pn * u.sqrt()));
        }
        bound.push((n, sup));
    }
    let mut r = summarize("lemma1", rows, ns);
    r.sqrt_bound = bound;
    Ok(r)
}

/// Ratios of the rescaled transition density to its limit at each
/// `(u, v)` on the grid.
pub fn lemma2_check(
    sched: &TriplePointSchedule,
    q: f64,
    s: f64,
    t: f64,
    grid: &[(f64, f64)],
    ns: &[usize],
    doob: bool,
) -> Result<RatioReport> {
    check_ns(ns)?;
    let a = sched.limit.a;
    if !(s < t && t < a) {
        return Err(Error::BranchMismatch(format!("need s < t < a, got s = {s}, t = {t}, a = {a}")));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let p = sched.at(n)?;
        for &(u, v) in grid {
            let finite = rescaled_transition(&p, q, n, s, t, u, v)?;
            let limit = transition_limit(a, s, t, u, v, doob);
            rows.push(RatioRow { n, point: vec![u, v], finite, limit, ratio: finite / limit });
        }
    }
    Ok(summarize(if doob { "lemma2" } else { "lemma2-no-doob" }, rows, ns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::LimitParams;
    use crate::quad::Quad;

    #[test]
    fn limit_transition_has_unit_mass() {
        let quad = Quad::new(1e-11, 1e-10);
        for (s, t, u) in [(-0.2, 0.1, 1.0), (0.0, 0.01, 2.0), (-1.0, 0.5, 0.3)] {
            let m = quad.half_line_points(|v| transition_limit(1.0, s, t, u, v, true), 0.0, &[u]).value;
            assert!((m - 1.0).abs() < 1e-7, "{s} {t} {u}: {m}");
        }
    }

    #[test]
    fn pi_n_is_positive_and_subexponential() {
        for (a, c) in [(1.0, 2.0), (0.5, f64::INFINITY), (f64::INFINITY, f64::INFINITY), (f64::INFINITY, 0.3)] {
            let s = TriplePointSchedule::new(LimitParams::new(a, c).unwrap(), -0.3, 0.0).unwrap();
            for n in [100, 10_000, 1_000_000] {
                let p = pi_n(&s, n).unwrap();
                assert!(p > 0.0 && (1.0 / p).ln() / (n as f64) < 0.05, "({a},{c}) n={n}: {p}");
            }
        }
    }
}
