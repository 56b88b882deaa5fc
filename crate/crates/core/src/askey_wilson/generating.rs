use super::measure::AwMeasure;
use super::process::{aw_marginal, aw_transition};
use crate::asep::BoundaryParams;
use crate::error::{domain, Error, Result};
use crate::quad::{NestFlag, Quad};

/// Largest number of time points accepted by [`generating_function_aw`].
pub const MAX_POINTS: usize = 4;

/// How the iterated conditional expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GfMethod {
    /// Conditional expectations of polynomials are polynomials of the same
    /// degree, so each inner integral is sampled at Chebyshev nodes and
    /// interpolated exactly.
    #[default]
    Polynomial,
    /// Fully nested quadrature, one level per distinct time.
    Nested,
}

fn factor(t: f64, y: f64) -> f64 {
    1.0 + t + 2.0 * t.sqrt() * y
}

fn require_atom_free(m: &AwMeasure, what: &str) -> Result<()> {
    if m.atoms.is_empty() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{what} has atoms at {:?}", m.atoms)))
    }
}

/// Chebyshev points of the second kind with barycentric weights.
struct Cheb {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Cheb {
    fn new(deg: usize) -> Self {
        if deg == 0 {
            return Cheb { nodes: vec![0.0], weights: vec![1.0] };
        }
        let nodes = (0..=deg).map(|j| (std::f64::consts::PI * j as f64 / deg as f64).cos()).collect();
        let weights = (0..=deg)
            .map(|j| {
                let w = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == deg { 0.5 * w } else { w }
            })
            .collect();
        Cheb { nodes, weights }
    }

    fn eval(&self, values: &[f64], y: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((&x, &w), &v) in self.nodes.iter().zip(&self.weights).zip(values) {
            let d = y - x;
            if d == 0.0 {
                return v;
            }
            num += w * v / d;
            den += w / d;
        }
        num / den
    }
}

/// Groups equal times: `(time, multiplicity)`.
fn group(times: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &t in times {
        match out.last_mut() {
            Some((s, k)) if *s == t => *k += 1,
            _ => out.push((t, 1)),
        }
    }
    out
}

fn validate(p: &BoundaryParams, q: f64, times: &[f64]) -> Result<()> {
    if times.is_empty() || times.len() > MAX_POINTS {
        return domain(format!("need 1..={MAX_POINTS} times, got {}", times.len()));
    }
    if p.a * p.c >= 1.0 {
        return domain(format!("AC = {} must be below 1", p.a * p.c));
    }
    if !(0.0..1.0).contains(&q) {
        return domain(format!("q must lie in [0,1), got {q}"));
    }
    if !times.iter().all(|t| *t > 0.0 && t.is_finite()) || times.windows(2).any(|w| w[0] > w[1]) {
        return domain(format!("times must be positive and nondecreasing, got {times:?}"));
    }
    Ok(())
}

/// Joint generating function `< prod t_j^{tau_j} >` of the first `n` sites
/// of the stationary open ASEP with `n = times.len()` sites, evaluated as
/// `E prod (1 + t_j + 2 sqrt(t_j) Y_{t_j}) / (2^n E (1 + Y_1)^n)`.
pub fn generating_function_aw(p: &BoundaryParams, q: f64, times: &[f64], quad: &Quad) -> Result<f64> {
    generating_function_aw_with(p, q, times, quad, GfMethod::Polynomial)
}

pub fn generating_function_aw_with(
    p: &BoundaryParams,
    q: f64,
    times: &[f64],
    quad: &Quad,
    method: GfMethod,
) -> Result<f64> {
    validate(p, q, times)?;
    let n = times.len() as i32;
    let one = aw_marginal(1.0, p, q)?;
    require_atom_free(&one, "marginal at t = 1")?;
    let denom = 2f64.powi(n) * one.integrate(quad, |y| (1.0 + y).powi(n))?;
    if times.iter().all(|&t| t == 1.0) {
        return Ok(1.0);
    }
    let groups = group(times);
    let first = aw_marginal(groups[0].0, p, q)?;
    require_atom_free(&first, "first marginal")?;
    // Transitions out of (-1, 1) have atoms only if A sqrt t or B sqrt t
    // leaves the unit disc.
    let t_max = groups.last().unwrap().0;
    if groups.len() > 1 && (p.a * t_max.sqrt() > 1.0 || p.b.abs() * t_max.sqrt() > 1.0) {
        return Err(Error::Unsupported(format!("transition kernels up to t = {t_max} have atoms")));
    }
    let num = match method {
        GfMethod::Polynomial => polynomial(p, q, &groups, &first, quad)?,
        GfMethod::Nested => {
            let flag = NestFlag::default();
            let outer = quad.integrate_points(
                |th| first.density_theta(th) * nested(p, q, &groups, 0, th.cos(), quad, &flag),
                &first.breakpoints(),
            );
            flag.check(quad, outer)?
        }
    };
    Ok(num / denom)
}

fn polynomial(
    p: &BoundaryParams,
    q: f64,
    groups: &[(f64, usize)],
    first: &AwMeasure,
    quad: &Quad,
) -> Result<f64> {
    // v(y) = E[ prod over later groups | Y_{t_i} = y ] * factor(t_i, y)^k_i,
    // built from the last group backwards.
    let last = groups.len() - 1;
    let (t_last, k_last) = groups[last];
    let mut deg = k_last;
    let mut cheb = Cheb::new(deg);
    let mut values: Vec<f64> = cheb.nodes.iter().map(|&y| factor(t_last, y).powi(k_last as i32)).collect();
    for i in (0..last).rev() {
        let (s, k) = groups[i];
        let t = groups[i + 1].0;
        let new_deg = deg + k;
        let new_cheb = Cheb::new(new_deg);
        let mut new_values = Vec::with_capacity(new_deg + 1);
        for &y in &new_cheb.nodes {
            let kernel = aw_transition(s, y, t, p, q)?;
            let cond = kernel.integrate(quad, |z| cheb.eval(&values, z))?;
            new_values.push(cond * factor(s, y).powi(k as i32));
        }
        deg = new_deg;
        cheb = new_cheb;
        values = new_values;
    }
    first.integrate(quad, |y| cheb.eval(&values, y))
}

fn nested(
    p: &BoundaryParams,
    q: f64,
    groups: &[(f64, usize)],
    i: usize,
    y: f64,
    quad: &Quad,
    flag: &NestFlag,
) -> f64 {
    let (s, k) = groups[i];
    let here = factor(s, y).powi(k as i32);
    if i + 1 == groups.len() {
        return here;
    }
    let t = groups[i + 1].0;
    match aw_transition(s, y, t, p, q) {
        Ok(kernel) => {
            let est = quad.integrate_points(
                |th| kernel.density_theta(th) * nested(p, q, groups, i + 1, th.cos(), quad, flag),
                &kernel.breakpoints(),
            );
            here * flag.value(est)
        }
        Err(_) => f64::NAN,
    }
}

/// Same quantity from a stationary law on `times.len()` sites.
pub fn generating_function_exact(stationary: &crate::asep::Stationary, times: &[f64]) -> Result<f64> {
    if times.len() != stationary.n {
        return domain(format!("{} times for {} sites", times.len(), stationary.n));
    }
    Ok(stationary
        .probs
        .iter()
        .enumerate()
        .map(|(idx, &pr)| {
            let w: f64 = (0..stationary.n).filter(|j| idx >> j & 1 == 1).map(|j| times[j]).product();
            pr * w
        })
        .sum())
}
