//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals and
//! half-lines.
//!
//! Half-lines `[a, inf)` are compactified with `u = a + t/(1-t)`, so no
//! truncation radius has to be chosen; Kronrod nodes never touch `t = 1`.

use crate::error::{Error, Result};
use std::cell::Cell;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quad {
    fn default() -> Self {
        Quad { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut fv = [(0.0, 0.0); 7];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
        *slot = (f1, f2);
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kron * h;
    let asc = asc * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    (value, err.max(50.0 * f64::EPSILON * value.abs()))
}

impl Quad {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Quad { abs_tol, rel_tol, ..Default::default() }
    }

    pub fn with_max_intervals(mut self, m: usize) -> Self {
        self.max_intervals = m;
        self
    }

    /// Integral over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Estimate {
        self.integrate_points(f, &[a, b])
    }

    /// Integral over `[p_0, p_k]` with forced breakpoints at every `p_i`.
    /// Breakpoints must be nondecreasing; repeated points are ignored.
    pub fn integrate_points<F: FnMut(f64) -> f64>(&self, mut f: F, points: &[f64]) -> Estimate {
        assert!(points.len() >= 2);
        let mut heap = BinaryHeap::new();
        let (mut total, mut total_err) = (0.0, 0.0);
        let mut evals = 0;
        for w in points.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let (v, e) = gk15(&mut f, w[0], w[1]);
            evals += 15;
            total += v;
            total_err += e;
            heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
        }
        let mut converged = false;
        while !heap.is_empty() {
            if total_err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                converged = true;
                break;
            }
            if heap.len() >= self.max_intervals {
                break;
            }
            let p = heap.pop().unwrap();
            let m = 0.5 * (p.a + p.b);
            if m <= p.a || m >= p.b {
                heap.push(p);
                break;
            }
            let (v1, e1) = gk15(&mut f, p.a, m);
            let (v2, e2) = gk15(&mut f, m, p.b);
            evals += 30;
            total += v1 + v2 - p.value;
            total_err += e1 + e2 - p.error;
            heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
            heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
        }
        // Re-sum to shed accumulated drift from the running updates.
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let converged = (converged || error <= self.abs_tol.max(self.rel_tol * value.abs()))
            && value.is_finite();
        Estimate { value, error, evals, converged }
    }

    /// Integral over `[a, inf)`.
    pub fn half_line<F: FnMut(f64) -> f64>(&self, f: F, a: f64) -> Estimate {
        self.half_line_points(f, a, &[])
    }

    /// Integral over `[a, inf)` with interior breakpoints (values `> a`).
    /// Uses `u = a + (t / (1 - t))^2`, which keeps power tails down to
    /// `u^{-3/2}` and square-root behaviour at `a` bounded in `t`.
    pub fn half_line_points<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        points: &[f64],
    ) -> Estimate {
        let mut ts = vec![0.0];
        let mut sorted: Vec<f64> = points.iter().copied().filter(|&p| p > a && p.is_finite()).collect();
        sorted.sort_by(f64::total_cmp);
        ts.extend(sorted.iter().map(|&p| {
            let r = (p - a).sqrt();
            r / (1.0 + r)
        }));
        ts.push(1.0);
        let g = |t: f64| {
            let s = 1.0 - t;
            let r = t / s;
            let u = a + r * r;
            if !u.is_finite() {
                return 0.0;
            }
            let v = f(u);
            if v == 0.0 {
                0.0
            } else {
                v * 2.0 * r / (s * s)
            }
        };
        self.integrate_points(g, &ts)
    }

    /// Integral over the whole real line, split at `center`.
    pub fn real_line<F: FnMut(f64) -> f64>(&self, mut f: F, center: f64) -> Estimate {
        let r = self.half_line(&mut f, center);
        let l = self.half_line(|u| f(2.0 * center - u), center);
        Estimate {
            value: r.value + l.value,
            error: r.error + l.error,
            evals: r.evals + l.evals,
            converged: r.converged && l.converged,
        }
    }

    /// Integral over `(0, inf)^d` by nested half-line rules, coordinate 1
    /// outermost. `breaks(prefix)` lists breakpoints for the next
    /// coordinate given the earlier ones.
    pub fn orthant(
        &self,
        d: usize,
        f: &dyn Fn(&[f64]) -> f64,
        breaks: &dyn Fn(&[f64]) -> Vec<f64>,
    ) -> Result<f64> {
        fn level(
            q: &Quad,
            inner: &Quad,
            d: usize,
            prefix: &mut Vec<f64>,
            f: &dyn Fn(&[f64]) -> f64,
            breaks: &dyn Fn(&[f64]) -> Vec<f64>,
            flag: &NestFlag,
        ) -> Estimate {
            let pts = breaks(prefix);
            q.half_line_points(
                |y| {
                    prefix.push(y);
                    let v = if prefix.len() == d { f(prefix) } else { flag.value(level(inner, inner, d, prefix, f, breaks, flag)) };
                    prefix.pop();
                    v
                },
                0.0,
                &pts,
            )
        }
        if d == 0 {
            return Ok(f(&[]));
        }
        let flag = NestFlag::default();
        let outer = level(self, &self.relative(), d, &mut Vec::with_capacity(d), f, breaks, &flag);
        flag.check(self, outer)
    }

    /// The same rule with only the relative tolerance active. Inner
    /// integrals of nested rules use it: far out along the outer variable
    /// their values are tiny but still add up.
    pub fn relative(&self) -> Quad {
        Quad { abs_tol: f64::MIN_POSITIVE, ..*self }
    }

    /// Unwraps an estimate, turning non-convergence into an error.
    pub fn require(&self, e: Estimate) -> Result<f64> {
        if e.converged {
            Ok(e.value)
        } else {
            Err(Error::Quadrature { tol: self.abs_tol.max(self.rel_tol * e.value.abs()), err: e.error })
        }
    }
}

/// Records whether any inner integral of a nested computation failed to
/// converge, so the outer call can surface it.
#[derive(Debug, Default)]
pub struct NestFlag {
    failed: Cell<bool>,
    worst: Cell<f64>,
}

impl NestFlag {
    pub fn value(&self, e: Estimate) -> f64 {
        if !e.converged {
            self.failed.set(true);
            self.worst.set(self.worst.get().max(e.error));
        }
        e.value
    }

    pub fn check(&self, q: &Quad, outer: Estimate) -> Result<f64> {
        if self.failed.get() {
            return Err(Error::Quadrature { tol: q.abs_tol, err: self.worst.get() });
        }
        q.require(outer)
    }
}
