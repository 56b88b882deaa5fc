//! Special functions: the scaled complementary error function H, Gaussian
//! tails, and q-Pochhammer symbols with a certified truncation bound.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// `exp(x^2)` with the rounding error of `x*x` folded back in, which matters
/// once `x^2` is in the tens.
pub fn exp_sq(x: f64) -> f64 {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    hi.exp() * (1.0 + lo)
}

/// `H(x) = exp(x^2) erfc(x)`, finite for all `x` where the result is
/// representable. Negative arguments use `H(x) + H(-x) = 2 exp(x^2)`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 * exp_sq(x) - erfcx(-x);
    }
    if x < 5.0 {
        return exp_sq(x) * libm::erfc(x);
    }
    if x > 1e8 {
        return FRAC_1_SQRT_PI / x;
    }
    // Laplace continued fraction, evaluated bottom-up.
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + 0.5 * k as f64 / tail;
    }
    FRAC_1_SQRT_PI / tail
}

/// Alias matching the notation `H` used throughout the limit formulas.
#[inline]
pub fn h_fn(x: f64) -> f64 {
    erfcx(x)
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Index of a q-Pochhammer symbol: a finite length or the infinite product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PochLen {
    Finite(usize),
    Infinite,
}

/// Default truncation tolerance for infinite products.
pub const POCH_TOL: f64 = 1e-14;

/// Cached partial products of `(alpha; q)_k`.
///
/// The infinite product is truncated after `J` factors, where `J` is the
/// first index with tail bound `T = |alpha| q^J / (1-q) < tol`. Since
/// `|prod_{j>=J} (1 - alpha q^j) - 1| <= exp(T) - 1`, the returned
/// `error_bound` is `|value| (exp(T) - 1)`.
#[derive(Debug, Clone)]
pub struct QPochhammer {
    alpha: C64,
    q: f64,
    partial: Vec<C64>,
    bound: f64,
}

impl QPochhammer {
    pub fn new(alpha: C64, q: f64, tol: f64) -> Self {
        assert!((0.0..1.0).contains(&q), "q must lie in [0,1)");
        assert!(tol > 0.0);
        let r = alpha.norm();
        let mut partial = vec![C64::new(1.0, 0.0)];
        let mut qj = 1.0;
        let mut acc = C64::new(1.0, 0.0);
        loop {
            let tail = r * qj / (1.0 - q);
            if tail < tol {
                let bound = acc.norm() * tail.exp_m1();
                return QPochhammer { alpha, q, partial, bound };
            }
            acc *= C64::new(1.0, 0.0) - alpha * qj;
            partial.push(acc);
            qj *= q;
        }
    }

    /// `(alpha; q)_k`.
    pub fn finite(&self, k: usize) -> C64 {
        if k < self.partial.len() {
            return self.partial[k];
        }
        let mut acc = *self.partial.last().unwrap();
        let mut qj = self.q.powi(self.partial.len() as i32 - 1);
        for _ in self.partial.len() - 1..k {
            acc *= C64::new(1.0, 0.0) - self.alpha * qj;
            qj *= self.q;
        }
        acc
    }

    /// Truncated `(alpha; q)_inf`.
    pub fn infinite(&self) -> C64 {
        *self.partial.last().unwrap()
    }

    pub fn error_bound(&self) -> f64 {
        self.bound
    }

    pub fn factors_used(&self) -> usize {
        self.partial.len() - 1
    }
}

/// `(alpha; q)_k` for finite or infinite `k`.
pub fn qpoch(alpha: C64, q: f64, k: PochLen, tol: f64) -> C64 {
    match k {
        PochLen::Finite(k) => {
            let mut acc = C64::new(1.0, 0.0);
            let mut qj = 1.0;
            for _ in 0..k {
                acc *= C64::new(1.0, 0.0) - alpha * qj;
                qj *= q;
            }
            acc
        }
        PochLen::Infinite => QPochhammer::new(alpha, q, tol).infinite(),
    }
}

/// Real `(x; q)_inf`.
pub fn qpoch_inf(x: f64, q: f64) -> f64 {
    qpoch(C64::new(x, 0.0), q, PochLen::Infinite, POCH_TOL).re
}

/// `|(r e^{i phi}; q)_inf|^2` in real form: each factor is
/// `(1 - r q^k)^2 + 4 r q^k sin^2(phi/2)`, which avoids cancellation near
/// `phi = 0`.
pub fn qpoch_abs2_polar(r: f64, phi: f64, q: f64) -> f64 {
    let s2 = (0.5 * phi).sin().powi(2);
    let mut acc = 1.0;
    let mut rk = r;
    loop {
        if rk / (1.0 - q) < POCH_TOL {
            return acc;
        }
        acc *= (1.0 - rk) * (1.0 - rk) + 4.0 * rk * s2;
        if q == 0.0 {
            return acc;
        }
        rk *= q;
    }
}

/// Envelope for `|(alpha; q)_inf|` with `|alpha| <= 1`:
/// returns `((q;q)_inf |1-alpha|, (-q;q)_inf |1-alpha|)`.
pub fn poch_envelope(alpha: C64, q: f64) -> (f64, f64) {
    let one_minus = (C64::new(1.0, 0.0) - alpha).norm();
    (qpoch_inf(q, q) * one_minus, qpoch_inf(-q, q) * one_minus)
}
