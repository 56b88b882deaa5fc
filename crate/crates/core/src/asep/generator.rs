//! Sparse generator of the open ASEP and its exact stationary law.

use super::params::AsepRates;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default cap on the number of sites for state-space methods.
pub const DEFAULT_CAP: usize = 16;

/// Above this many states the stationary solve switches from dense LU to
/// preconditioned GMRES.
const DENSE_LIMIT: usize = 1 << 8;

/// Generator `Q` in compressed sparse row form; `Q[s][s']` is the rate of
/// `s -> s'` and the diagonal holds minus the exit rate.
#[derive(Debug, Clone)]
pub struct Generator {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

/// Off-diagonal moves out of `state`, in a fixed order. Duplicate targets
/// only arise for `n = 1` and are merged by the caller.
pub(crate) fn moves(r: &AsepRates, state: usize, mut push: impl FnMut(usize, f64)) {
    let n = r.n;
    for j in 0..n.saturating_sub(1) {
        let here = state >> j & 1;
        let next = state >> (j + 1) & 1;
        let flip = state ^ (0b11 << j);
        if here == 1 && next == 0 {
            push(flip, 1.0);
        } else if here == 0 && next == 1 && r.q > 0.0 {
            push(flip, r.q);
        }
    }
    let first = state & 1;
    if first == 0 && r.alpha > 0.0 {
        push(state | 1, r.alpha);
    } else if first == 1 && r.gamma > 0.0 {
        push(state & !1, r.gamma);
    }
    let last_bit = 1 << (n - 1);
    if state & last_bit == 0 && r.delta > 0.0 {
        push(state | last_bit, r.delta);
    } else if state & last_bit != 0 && r.beta > 0.0 {
        push(state & !last_bit, r.beta);
    }
}

impl Generator {
    pub fn new(r: &AsepRates, cap: usize) -> Result<Self> {
        if r.n > cap {
            return Err(Error::Size { n: r.n, cap });
        }
        let states = 1usize << r.n;
        let mut row_ptr = Vec::with_capacity(states + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(states);
        row_ptr.push(0);
        for s in 0..states {
            let start = cols.len();
            let mut out = 0.0;
            moves(r, s, |t, rate| {
                out += rate;
                if let Some(k) = (start..cols.len()).find(|&k| cols[k] as usize == t) {
                    vals[k] += rate;
                } else {
                    cols.push(t as u32);
                    vals.push(rate);
                }
            });
            diag.push(-out);
            row_ptr.push(cols.len());
        }
        Ok(Generator { n: r.n, row_ptr, cols, vals, diag })
    }

    pub fn states(&self) -> usize {
        self.diag.len()
    }

    /// Off-diagonal entries of row `s`.
    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[s]..self.row_ptr[s + 1];
        self.cols[range.clone()].iter().map(|&c| c as usize).zip(self.vals[range].iter().copied())
    }

    pub fn diag(&self, s: usize) -> f64 {
        self.diag[s]
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diag[from];
        }
        self.row(from).find(|&(c, _)| c == to).map_or(0.0, |(_, v)| v)
    }

    pub fn row_sum(&self, s: usize) -> f64 {
        self.row(s).map(|(_, v)| v).sum::<f64>() + self.diag[s]
    }

    /// `(mu Q)_s` for every state.
    pub fn left_apply(&self, mu: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = mu.iter().zip(&self.diag).map(|(m, d)| m * d).collect();
        for (s, &m) in mu.iter().enumerate() {
            for (t, v) in self.row(s) {
                out[t] += m * v;
            }
        }
        out
    }

    /// `max_s |(mu Q)_s|`.
    pub fn residual(&self, mu: &[f64]) -> f64 {
        self.left_apply(mu).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn dense_transpose(&self) -> DMatrix<f64> {
        let n = self.states();
        let mut m = DMatrix::zeros(n, n);
        for s in 0..n {
            m[(s, s)] = self.diag[s];
            for (t, v) in self.row(s) {
                m[(t, s)] += v;
            }
        }
        m
    }
}

/// Stationary law `mu` with `mu Q = 0`, `sum mu = 1`, indexed by state.
#[derive(Debug, Clone)]
pub struct Stationary {
    pub n: usize,
    pub probs: Vec<f64>,
    pub residual: f64,
}

impl Stationary {
    pub fn prob(&self, c: &super::Configuration) -> f64 {
        self.probs[c.index()]
    }

    /// Marginal occupation probability of site `j` (1-based).
    pub fn site_density(&self, j: usize) -> f64 {
        self.probs.iter().enumerate().filter(|(s, _)| s >> (j - 1) & 1 == 1).map(|(_, p)| p).sum()
    }
}

pub fn stationary_exact(r: &AsepRates) -> Result<Stationary> {
    stationary_exact_capped(r, DEFAULT_CAP)
}

pub fn stationary_exact_capped(r: &AsepRates, cap: usize) -> Result<Stationary> {
    if !(r.alpha > 0.0 && r.beta > 0.0) {
        return Err(Error::Domain("stationary solve needs alpha, beta > 0".into()));
    }
    let g = Generator::new(r, cap)?;
    let mut mu = if g.states() <= DENSE_LIMIT { solve_dense(&g)? } else { gmres::solve(&g)? };
    for p in mu.iter_mut() {
        *p = p.max(0.0);
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|p| *p /= total);
    let residual = g.residual(&mu);
    Ok(Stationary { n: r.n, probs: mu, residual })
}

/// Dense LU of `Q^T` with the last balance equation replaced by the
/// normalization, followed by one step of iterative refinement.
fn solve_dense(g: &Generator) -> Result<Vec<f64>> {
    let n = g.states();
    let mut m = g.dense_transpose();
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = m.clone().lu();
    let mut x = lu.solve(&rhs).ok_or_else(|| Error::Numerical("singular balance system".into()))?;
    let r = &rhs - &m * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x.iter().copied().collect())
}

mod gmres {
    use super::Generator;
    use crate::error::{Error, Result};

    const RESTART: usize = 80;
    const MAX_CYCLES: usize = 400;
    const TOL: f64 = 1e-15;

    /// `A x` for `A = Q^T` with its last row replaced by ones.
    fn apply(g: &Generator, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for (o, (xi, d)) in out.iter_mut().zip(x.iter().zip(&g.diag)) {
            *o = xi * d;
        }
        for s in 0..n {
            let xs = x[s];
            for (t, v) in g.row(s) {
                out[t] += v * xs;
            }
        }
        out[n - 1] = x.iter().sum();
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    /// Restarted GMRES with right Jacobi preconditioning.
    pub(super) fn solve(g: &Generator) -> Result<Vec<f64>> {
        let n = g.states();
        let mut minv: Vec<f64> = g.diag.iter().map(|d| 1.0 / d).collect();
        minv[n - 1] = 1.0;
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let mut x = vec![1.0 / n as f64; n];
        let mut ax = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = vec![0.0; n];
        for _ in 0..MAX_CYCLES {
            apply(g, &x, &mut ax);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let beta = norm(&r);
            if beta < TOL {
                return Ok(x);
            }
            let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
            let mut h = vec![vec![0.0; RESTART]; RESTART + 1];
            let (mut cs, mut sn) = (vec![0.0; RESTART], vec![0.0; RESTART]);
            let mut e = vec![0.0; RESTART + 1];
            e[0] = beta;
            let mut k_used = 0;
            for k in 0..RESTART {
                for i in 0..n {
                    z[i] = v[k][i] * minv[i];
                }
                apply(g, &z, &mut w);
                // Modified Gram–Schmidt, twice for stability.
                for _ in 0..2 {
                    for (i, vi) in v.iter().enumerate() {
                        let hij = dot(&w, vi);
                        h[i][k] += hij;
                        w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hij * vj);
                    }
                }
                let hn = norm(&w);
                h[k + 1][k] = hn;
                for i in 0..k {
                    let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                    h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                    h[i][k] = t;
                }
                let rho = h[k][k].hypot(h[k + 1][k]);
                cs[k] = h[k][k] / rho;
                sn[k] = h[k + 1][k] / rho;
                h[k][k] = rho;
                h[k + 1][k] = 0.0;
                e[k + 1] = -sn[k] * e[k];
                e[k] *= cs[k];
                k_used = k + 1;
                if e[k + 1].abs() < TOL * 0.1 || hn == 0.0 {
                    break;
                }
                v.push(w.iter().map(|wi| wi / hn).collect());
            }
            let mut y = vec![0.0; k_used];
            for i in (0..k_used).rev() {
                let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
                y[i] = (e[i] - s) / h[i][i];
            }
            for (j, yj) in y.iter().enumerate() {
                for i in 0..n {
                    x[i] += yj * v[j][i] * minv[i];
                }
            }
        }
        apply(g, &x, &mut ax);
        let res = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>());
        Err(Error::Numerical(format!("GMRES stalled at residual {res:e}")))
    }
}
