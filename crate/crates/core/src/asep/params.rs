use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// Rates of the open ASEP on `n` sites: entry `alpha` / exit `gamma` at
/// site 1, entry `delta` / exit `beta` at site `n`, bulk hops right at rate 1
/// and left at rate `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsepRates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub q: f64,
    pub n: usize,
}

impl AsepRates {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, q: f64, n: usize) -> Result<Self> {
        let r = Self::new_nonneg(alpha, beta, gamma, delta, q, n)?;
        if !(alpha > 0.0 && beta > 0.0) {
            return domain(format!("alpha and beta must be positive, got {alpha}, {beta}"));
        }
        Ok(r)
    }

    /// Like [`AsepRates::new`] but allows `alpha = 0` or `beta = 0`. Such
    /// chains may be reducible; they are only meant for simulation.
    pub fn new_nonneg(alpha: f64, beta: f64, gamma: f64, delta: f64, q: f64, n: usize) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return domain(format!("{name} must be a finite nonnegative rate, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&q) {
            return domain(format!("q must lie in [0,1), got {q}"));
        }
        if n == 0 {
            return domain("n must be at least 1");
        }
        Ok(AsepRates { alpha, beta, gamma, delta, q, n })
    }

    pub fn with_n(self, n: usize) -> Self {
        AsepRates { n, ..self }
    }
}

/// The `(A, B, C, D)` reparametrization of the boundary rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl BoundaryParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a >= 0.0 && c >= 0.0 && a.is_finite() && c.is_finite()) {
            return domain(format!("A and C must be finite and nonnegative, got {a}, {c}"));
        }
        if !(b > -1.0 && b <= 0.0 && d > -1.0 && d <= 0.0) {
            return domain(format!("B and D must lie in (-1,0], got {b}, {d}"));
        }
        Ok(BoundaryParams { a, b, c, d })
    }

    /// Particle–hole image: `(A,B) <-> (C,D)`.
    pub fn swapped(&self) -> Self {
        BoundaryParams { a: self.c, b: self.d, c: self.a, d: self.b }
    }
}

/// Roots `kappa_+ >= 0 >= kappa_- > -1` of
/// `u k^2 - (1-q-u+v) k - v = 0`.
pub fn kappa_pm(u: f64, v: f64, q: f64) -> Result<(f64, f64)> {
    if !(u > 0.0 && u.is_finite()) {
        return domain(format!("kappa requires u > 0, got {u}"));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return domain(format!("kappa requires v >= 0, got {v}"));
    }
    if !(0.0..1.0).contains(&q) {
        return domain(format!("q must lie in [0,1), got {q}"));
    }
    let s = 1.0 - q - u + v;
    let root = (s * s + 4.0 * u * v).sqrt();
    // Take the root without cancellation, recover the other from the
    // product kappa_+ kappa_- = -v/u.
    if s >= 0.0 {
        let kp = (s + root) / (2.0 * u);
        let km = if kp > 0.0 { -v / (u * kp) } else { 0.0 };
        Ok((kp, km))
    } else {
        let km = (s - root) / (2.0 * u);
        let kp = -v / (u * km);
        Ok((kp, km))
    }
}

pub fn boundary_from_rates(r: &AsepRates) -> Result<BoundaryParams> {
    let (a, b) = kappa_pm(r.beta, r.delta, r.q)?;
    let (c, d) = kappa_pm(r.alpha, r.gamma, r.q)?;
    Ok(BoundaryParams { a, b, c, d })
}

pub fn rates_from_boundary(p: &BoundaryParams, q: f64, n: usize) -> Result<AsepRates> {
    let left = (1.0 + p.c) * (1.0 + p.d);
    let right = (1.0 + p.a) * (1.0 + p.b);
    if !(left > 0.0 && right > 0.0) {
        return domain(format!("nonpositive denominator: (1+C)(1+D) = {left}, (1+A)(1+B) = {right}"));
    }
    if !(0.0..1.0).contains(&q) {
        return domain(format!("q must lie in [0,1), got {q}"));
    }
    let alpha = (1.0 - q) / left;
    let beta = (1.0 - q) / right;
    // -CD and -AB are nonnegative; clamp the signed zero.
    let gamma = (-(1.0 - q) * p.c * p.d / left).max(0.0);
    let delta = (-(1.0 - q) * p.a * p.b / right).max(0.0);
    AsepRates::new(alpha, beta, gamma, delta, q, n)
}
