use super::params::BoundaryParams;
use crate::error::{domain, Error, Result};
use crate::limit::LimitParams;
use serde::{Deserialize, Serialize};

/// Sequence `(A_n, B, C_n, D)` approaching the triple point `A = C = 1`
/// with `sqrt(n)(1 - A_n) -> a`, `sqrt(n)(1 - C_n) -> c`.
///
/// Finite limits use `A_n = max(0, 1 - a/sqrt(n))`; an infinite limit uses
/// `A_n = 1 - n^{-1/4}`. Any rate with `sqrt(n)(1 - A_n) -> inf` would do,
/// so results at `a = inf` and finite `n` depend on this choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriplePointSchedule {
    pub limit: LimitParams,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub d: f64,
}

impl TriplePointSchedule {
    pub fn new(limit: LimitParams, b: f64, d: f64) -> Result<Self> {
        if !(b > -1.0 && b <= 0.0 && d > -1.0 && d <= 0.0) {
            return domain(format!("B and D must lie in (-1,0], got {b}, {d}"));
        }
        Ok(TriplePointSchedule { limit, b, d })
    }

    pub fn at(&self, n: usize) -> Result<BoundaryParams> {
        triple_point(self, n)
    }
}

fn scaled(limit: f64, n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    if limit.is_finite() {
        (1.0 - limit / rn).max(0.0)
    } else {
        1.0 - (n as f64).powf(-0.25)
    }
}

pub fn triple_point(s: &TriplePointSchedule, n: usize) -> Result<BoundaryParams> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let a = scaled(s.limit.a, n);
    let c = scaled(s.limit.c, n);
    if a * c >= 1.0 {
        return Err(Error::Infeasible { n, product: a * c });
    }
    BoundaryParams::new(a, s.b, c, s.d)
}
