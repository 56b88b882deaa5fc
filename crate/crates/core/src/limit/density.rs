use super::kernels::{ln_first_passage, ln_killed_kernel};
use super::norm::norm_const;
use super::params::{Branch, LimitParams};
use crate::error::{domain, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Strictly increasing times in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return domain("time grid is empty");
        }
        if !times.iter().all(|t| (0.0..=1.0).contains(t)) || times.windows(2).any(|w| w[0] >= w[1]) {
            return domain(format!("times must be strictly increasing in [0,1], got {times:?}"));
        }
        Ok(TimeGrid { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn includes_zero(&self) -> bool {
        self.times[0] == 0.0
    }

    pub fn includes_one(&self) -> bool {
        *self.times.last().unwrap() == 1.0
    }

    /// `1 - x` in increasing order.
    pub fn reversed(&self) -> Self {
        TimeGrid { times: self.times.iter().rev().map(|x| 1.0 - x).collect() }
    }

    /// Checks that the grid carries exactly the free coordinates of `branch`.
    pub fn check(&self, branch: Branch) -> Result<()> {
        let (zero, one) = (self.includes_zero(), self.includes_one());
        let ok = match branch {
            Branch::Drift => true,
            Branch::BothInf => !zero && !one,
            Branch::AFiniteCInf => !zero && one,
            Branch::AInfCFinite => zero && !one,
            Branch::General => zero && one && self.len() >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BranchMismatch(format!("grid {:?} does not match branch {branch:?}", self.times)))
        }
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TimeGrid::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.times
    }
}

fn ln_chain(x: &[f64], y: &[f64]) -> f64 {
    (1..x.len()).map(|k| ln_killed_kernel(x[k] - x[k - 1], y[k - 1], y[k])).sum()
}

/// Joint density of the tilted process at the grid times. Grids must
/// contain exactly the free coordinates of the branch: `0` when the left
/// end is free (`c` finite), `1` when the right end is free (`a` finite).
/// The `(inf, c)` branch is evaluated through time reversal.
pub fn eta_joint_density(p: &LimitParams, grid: &TimeGrid, values: &[f64]) -> Result<f64> {
    let branch = p.branch();
    grid.check(branch)?;
    if values.len() != grid.len() {
        return domain(format!("{} values for {} times", values.len(), grid.len()));
    }
    if values.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return Ok(0.0);
    }
    let x = grid.times();
    let d = x.len();
    let ln = match branch {
        Branch::Drift => {
            return Err(Error::BranchMismatch("a + c = 0 has no positive density of this form".into()))
        }
        Branch::BothInf => {
            0.5 * (8.0 * PI).ln()
                + ln_first_passage(x[0], values[0])
                + ln_first_passage(1.0 - x[d - 1], values[d - 1])
                + ln_chain(x, values)
        }
        Branch::AFiniteCInf => {
            ln_first_passage(x[0], values[0]) - p.a * values[d - 1] / SQRT_2 + ln_chain(x, values)
                - norm_const(p)?.ln()
        }
        Branch::AInfCFinite => {
            let rev: Vec<f64> = values.iter().rev().copied().collect();
            return eta_joint_density(&p.swapped(), &grid.reversed(), &rev);
        }
        Branch::General => {
            -(p.c * values[0] + p.a * values[d - 1]) / SQRT_2 + ln_chain(x, values) - norm_const(p)?.ln()
        }
    };
    Ok(ln.exp())
}

/// The `(inf, c)` density from its own formula, without reversal. Other
/// branches defer to [`eta_joint_density`].
pub fn eta_density_direct(p: &LimitParams, grid: &TimeGrid, values: &[f64]) -> Result<f64> {
    if p.branch() != Branch::AInfCFinite {
        return eta_joint_density(p, grid, values);
    }
    grid.check(Branch::AInfCFinite)?;
    if values.len() != grid.len() {
        return domain(format!("{} values for {} times", values.len(), grid.len()));
    }
    if values.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return Ok(0.0);
    }
    let x = grid.times();
    let d = x.len();
    let ln = ln_first_passage(1.0 - x[d - 1], values[d - 1]) - p.c * values[0] / SQRT_2 + ln_chain(x, values)
        - norm_const(p)?.ln();
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meander_single_time_is_rayleigh() {
        let p = LimitParams::new(0.0, f64::INFINITY).unwrap();
        let g = TimeGrid::new(vec![1.0]).unwrap();
        for y in [0.1f64, 1.0, 2.5] {
            let want = y * (-y * y / 2.0).exp();
            assert!((eta_joint_density(&p, &g, &[y]).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn grids_must_match_branch() {
        let inf = f64::INFINITY;
        let g = TimeGrid::new(vec![0.0, 0.5]).unwrap();
        assert!(eta_joint_density(&LimitParams::new(1.0, inf).unwrap(), &g, &[1.0, 1.0]).is_err());
        assert!(eta_joint_density(&LimitParams::new(inf, 1.0).unwrap(), &g, &[1.0, 1.0]).is_ok());
        assert!(matches!(
            eta_joint_density(&LimitParams::new(1.0, -1.0).unwrap(), &g, &[1.0, 1.0]),
            Err(Error::BranchMismatch(_))
        ));
        assert!(TimeGrid::new(vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn time_reversal_pointwise() {
        let inf = f64::INFINITY;
        let y = [0.3, 1.7, 0.9, 2.2];
        // general: grid 0 < .. < 1
        let g = TimeGrid::new(vec![0.0, 0.2, 0.65, 1.0]).unwrap();
        for (a, c) in [(1.0, 2.0), (-0.5, 0.8), (3.0, 3.0)] {
            let p = LimitParams::new(a, c).unwrap();
            let rev: Vec<f64> = y.iter().rev().copied().collect();
            let lhs = eta_joint_density(&p.swapped(), &g, &y).unwrap();
            let rhs = eta_joint_density(&p, &g.reversed(), &rev).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300), "{a},{c}: {lhs} vs {rhs}");
        }
        // one-sided pair, checked against the direct formula
        let g = TimeGrid::new(vec![0.0, 0.3, 0.5, 0.9]).unwrap();
        for c in [-0.7, 0.0, 2.0] {
            let p = LimitParams::new(inf, c).unwrap();
            let direct = eta_density_direct(&p, &g, &y).unwrap();
            let via = eta_joint_density(&p, &g, &y).unwrap();
            assert!((direct - via).abs() <= 1e-12 * direct, "{c}: {direct} vs {via}");
        }
        // excursion
        let p = LimitParams::new(inf, inf).unwrap();
        let g = TimeGrid::new(vec![0.1, 0.3, 0.5, 0.9]).unwrap();
        let rev: Vec<f64> = y.iter().rev().copied().collect();
        let lhs = eta_joint_density(&p, &g, &y).unwrap();
        let rhs = eta_joint_density(&p, &g.reversed(), &rev).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }
}
