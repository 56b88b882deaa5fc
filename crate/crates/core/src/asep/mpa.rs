//! Exact sequential sampler for the stationary TASEP (`q = 0`,
//! `gamma = delta = 0`) built on the matrix product representation
//! `D = 1 + d`, `E = 1 + e` with `d e = 1` on `l^2(N)`:
//! `<W| = (C^k)_k`, `|V> = (A^k)_k`, so that the weight of a configuration
//! is `<W| prod_j (tau_j D + (1 - tau_j) E) |V>`.
//!
//! The weight is a sum over lattice paths `k_0, ..., k_n` where `D` steps
//! `k -> k` or `k + 1` and `E` steps `k -> k` or `k - 1`. Sampling the path
//! forward needs `R_j(k) = <k|(D+E)^{n-j}|V>`. For `k >= n - j` the walk
//! cannot reach the boundary, so `R_j(k) = A^k lambda^{n-j}` with
//! `lambda = 2 + A + 1/A`; only the triangle `k < n - j` is tabulated.
//! Rows are stored divided by `lambda^{n-j}` to stay in range.

use super::config::Configuration;
use super::params::{boundary_from_rates, AsepRates};
use crate::error::{Error, Result};
use crate::rng::Rng;
use rand::Rng as _;

#[derive(Debug, Clone)]
pub struct TasepSampler {
    n: usize,
    a: f64,
    c: f64,
    // rows[j][k] = R_j(k) / lambda^{n-j} for k < n - j
    rows: Vec<Vec<f64>>,
    // P(k_0 = k) for k < n, and the geometric tail mass beyond
    start: Vec<f64>,
    tail: f64,
}

impl TasepSampler {
    pub fn new(r: &AsepRates) -> Result<Self> {
        if r.q != 0.0 || r.gamma != 0.0 || r.delta != 0.0 {
            return Err(Error::Unsupported(
                "the matrix product sampler needs q = 0 and gamma = delta = 0".into(),
            ));
        }
        if r.alpha > 1.0 || r.beta > 1.0 {
            // Then 1/alpha - 1 < 0 and the boundary vectors alternate in sign.
            return Err(Error::Unsupported("the matrix product sampler needs alpha, beta <= 1".into()));
        }
        let p = boundary_from_rates(r)?;
        let (a, c) = (p.a, p.c);
        if a * c >= 1.0 - 1e-12 {
            return Err(Error::Unsupported(format!("AC = {} >= 1 has no normalizable weight", a * c)));
        }
        let n = r.n;
        // With A = 0 the vector |V> is e_0 and rows are tabulated in full.
        let lambda = if a > 0.0 { 2.0 + a + 1.0 / a } else { 2.0 };
        let mut rows = vec![Vec::new(); n + 1];
        let mut s = TasepSampler { n, a, c, rows: Vec::new(), start: Vec::new(), tail: 0.0 };
        for j in (0..n).rev() {
            let m = n - j;
            let width = if a > 0.0 { m } else { m + 1 };
            let next = &rows[j + 1];
            let get = |k: usize| s.r_with(next, m - 1, k);
            let row: Vec<f64> = (0..width)
                .map(|k| {
                    let down = if k > 0 { get(k - 1) } else { 0.0 };
                    (down + 2.0 * get(k) + get(k + 1)) / lambda
                })
                .collect();
            rows[j] = row;
        }
        s.rows = rows;
        let kmax = if a > 0.0 { n } else { n + 1 };
        let mut w: Vec<f64> = (0..kmax).map(|k| c.powi(k as i32) * s.r(0, k)).collect();
        let tail = if a > 0.0 && c > 0.0 { (a * c).powi(n as i32) / (1.0 - a * c) } else { 0.0 };
        let total: f64 = w.iter().sum::<f64>() + tail;
        w.iter_mut().for_each(|x| *x /= total);
        s.start = w;
        s.tail = tail / total;
        Ok(s)
    }

    fn r_with(&self, row: &[f64], m: usize, k: usize) -> f64 {
        if k < row.len() {
            row[k]
        } else if self.a > 0.0 {
            self.a.powi(k as i32)
        } else if m == 0 && k == 0 {
            1.0
        } else {
            0.0
        }
    }

    /// `R_j(k) / lambda^{n-j}`.
    fn r(&self, j: usize, k: usize) -> f64 {
        self.r_with(&self.rows[j], self.n - j, k)
    }

    fn start_index(&self, rng: &mut Rng) -> usize {
        let mut u: f64 = rng.random();
        for (k, &p) in self.start.iter().enumerate() {
            if u < p {
                return k;
            }
            u -= p;
        }
        if self.tail <= 0.0 {
            return self.start.len().saturating_sub(1);
        }
        // Geometric tail with ratio AC beyond k = n.
        let v: f64 = rng.random();
        self.n + ((1.0 - v).ln() / (self.a * self.c).ln()).floor() as usize
    }

    /// One configuration from the stationary law.
    pub fn sample(&self, rng: &mut Rng) -> Configuration {
        let mut out = Vec::with_capacity(self.n);
        self.sample_into(rng, &mut out);
        Configuration(out)
    }

    pub fn sample_into(&self, rng: &mut Rng, out: &mut Vec<bool>) {
        out.clear();
        let mut k = self.start_index(rng);
        for j in 1..=self.n {
            let stay = self.r(j, k);
            let up = self.r(j, k + 1);
            let down = if k > 0 { self.r(j, k - 1) } else { 0.0 };
            let total = 2.0 * stay + up + down;
            let u = rng.random::<f64>() * total;
            // D: k -> k or k + 1; E: k -> k or k - 1
            if u < stay + up {
                out.push(true);
                if u >= stay {
                    k += 1;
                }
            } else {
                out.push(false);
                if u >= 2.0 * stay + up {
                    k -= 1;
                }
            }
        }
    }

    /// Exact probability of a configuration under the sampler's law, by
    /// forward propagation of the path distribution.
    pub fn probability(&self, c: &Configuration) -> f64 {
        assert_eq!(c.len(), self.n);
        let kmax = self.n + self.tail_cutoff();
        let mut dist = vec![0.0; kmax + 2];
        for (k, &p) in self.start.iter().enumerate() {
            dist[k] = p;
        }
        if self.tail > 0.0 {
            let rho = self.a * self.c;
            for (k, slot) in dist.iter_mut().enumerate().take(kmax + 1).skip(self.n) {
                *slot = self.tail * (1.0 - rho) * rho.powi((k - self.n) as i32);
            }
        }
        for (j, &occ) in c.0.iter().enumerate() {
            let j = j + 1;
            let mut next = vec![0.0; kmax + 2];
            for k in 0..=kmax {
                if dist[k] == 0.0 {
                    continue;
                }
                let stay = self.r(j, k);
                let up = self.r(j, k + 1);
                let down = if k > 0 { self.r(j, k - 1) } else { 0.0 };
                let total = 2.0 * stay + up + down;
                if occ {
                    next[k] += dist[k] * stay / total;
                    next[(k + 1).min(kmax + 1)] += dist[k] * up / total;
                } else {
                    next[k] += dist[k] * stay / total;
                    if k > 0 {
                        next[k - 1] += dist[k] * down / total;
                    }
                }
            }
            dist = next;
        }
        dist.iter().sum()
    }

    fn tail_cutoff(&self) -> usize {
        let rho = self.a * self.c;
        if rho <= 0.0 {
            return 1;
        }
        ((1e-18f64).ln() / rho.ln()).ceil() as usize + 1
    }
}
