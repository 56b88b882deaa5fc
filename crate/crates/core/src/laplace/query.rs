use crate::error::{domain, Error, Result};
use crate::limit::{Branch, LimitParams};
use serde::{Deserialize, Serialize};

/// Queries closer than this to the edge of the admissible region are
/// rejected: the integrands lose integrability there.
pub const BOUNDARY_MARGIN: f64 = 1e-3;

/// Times `0 < x_1 < ... < x_d = 1` and coefficients `c_1, ..., c_d` of a
/// Laplace transform `E exp(-sum c_k Z_{x_k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuery", into = "RawQuery")]
pub struct LaplaceQuery {
    x: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    x: Vec<f64>,
    c: Vec<f64>,
}

impl TryFrom<RawQuery> for LaplaceQuery {
    type Error = Error;
    fn try_from(r: RawQuery) -> Result<Self> {
        LaplaceQuery::new(r.x, r.c)
    }
}

impl From<LaplaceQuery> for RawQuery {
    fn from(q: LaplaceQuery) -> Self {
        RawQuery { x: q.x, c: q.c }
    }
}

impl LaplaceQuery {
    pub fn new(x: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != c.len() {
            return domain(format!("need matching nonempty x and c, got {} and {}", x.len(), c.len()));
        }
        if x[0] <= 0.0 || x.windows(2).any(|w| w[0] >= w[1]) || *x.last().unwrap() != 1.0 {
            return domain(format!("times must satisfy 0 < x_1 < ... < x_d = 1, got {x:?}"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return domain(format!("coefficients must be finite, got {c:?}"));
        }
        Ok(LaplaceQuery { x, c })
    }

    /// Single time `x = 1`.
    pub fn single(c: f64) -> Result<Self> {
        LaplaceQuery::new(vec![1.0], vec![c])
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Partial sums `s_k = c_k + ... + c_d`, indexed from 0.
    pub fn s(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        let mut acc = 0.0;
        for k in (0..self.d()).rev() {
            acc += self.c[k];
            out[k] = acc;
        }
        out
    }

    /// `x_k - x_{k-1}` with `x_0 = 0`.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.x
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }

    /// Coefficients scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        LaplaceQuery { x: self.x.clone(), c: self.c.iter().map(|v| v * factor).collect() }
    }

    /// The query describing the same functional of the time-reversed
    /// process `x -> eta'_{1-x} - eta'_1`.
    pub fn reversed(&self) -> Self {
        let d = self.d();
        let s1 = self.s()[0];
        let mut x: Vec<f64> = (1..d).map(|j| 1.0 - self.x[d - 1 - j]).collect();
        x.push(1.0);
        let mut c: Vec<f64> = (1..d).map(|j| self.c[d - 1 - j]).collect();
        c.push(-s1);
        LaplaceQuery { x, c }
    }

    /// Enforces `c_1, ..., c_{d-1} > 0` and `-a < c_d <= s_1 < c` with a
    /// margin of [`BOUNDARY_MARGIN`] at the `a` and `c` edges. Any query
    /// is admissible on the drift branch.
    pub fn check_admissible(&self, p: &LimitParams) -> Result<()> {
        if p.branch() == Branch::Drift {
            return Ok(());
        }
        let d = self.d();
        if let Some(k) = (0..d - 1).find(|&k| !(self.c[k] > 0.0)) {
            return Err(Error::Inadmissible(format!("c_{} = {} must be positive", k + 1, self.c[k])));
        }
        let cd = self.c[d - 1];
        let s1 = self.s()[0];
        if p.a.is_finite() && !(cd + p.a > BOUNDARY_MARGIN) {
            return Err(Error::Inadmissible(format!(
                "c_d = {cd} must exceed -a = {} by at least {BOUNDARY_MARGIN}",
                -p.a
            )));
        }
        if p.c.is_finite() && !(p.c - s1 > BOUNDARY_MARGIN) {
            return Err(Error::Inadmissible(format!(
                "s_1 = {s1} must stay below c = {} by at least {BOUNDARY_MARGIN}",
                p.c
            )));
        }
        Ok(())
    }

    pub fn is_admissible(&self, p: &LimitParams) -> bool {
        self.check_admissible(p).is_ok()
    }
}
