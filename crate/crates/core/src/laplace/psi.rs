//! The limit Laplace transform `Psi` by quadrature in two independent ways:
//! over the Biane coordinates `u`, and directly against the tilted
//! densities of `eta`.

use super::query::LaplaceQuery;
use crate::error::{Error, Result};
use crate::limit::{biane, killed_laplace, ln_first_passage, ln_killed_kernel, norm_const, Branch, LimitParams};
use crate::quad::Quad;
use std::f64::consts::{PI, SQRT_2};

/// Largest dimension served by quadrature.
pub const MAX_DIM: usize = 3;

fn check_dim(q: &LaplaceQuery) -> Result<()> {
    if q.d() > MAX_DIM {
        return Err(Error::Unsupported(format!("quadrature is capped at d = {MAX_DIM}, got {}", q.d())));
    }
    Ok(())
}

/// `E exp(-sum c_k B_{x_k} / sqrt 2) = exp(1/4 sum s_k^2 (x_k - x_{k-1}))`.
pub fn bm_laplace(q: &LaplaceQuery) -> f64 {
    let s = q.s();
    let e: f64 = s.iter().zip(q.increments()).map(|(s, dx)| s * s * dx).sum();
    (0.25 * e).exp()
}

/// `int_{(0,inf)^d} L(u) f(u_1) g(u_d) du`, where `L` carries the
/// exponential weights and the Biane kernels `p_{c_k}(u_k, u_{k+1})`.
pub fn biane_integral(q: &LaplaceQuery, f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64, quad: &Quad) -> Result<f64> {
    check_dim(q)?;
    let d = q.d();
    let c = q.c();
    if let Some(k) = (0..d - 1).find(|&k| !(c[k] > 0.0)) {
        return Err(Error::Inadmissible(format!("Biane time c_{} = {} must be positive", k + 1, c[k])));
    }
    let dx = q.increments();
    let integrand = |u: &[f64]| {
        let mut v = f(u[0]) * g(u[d - 1]);
        let mut e = 0.0;
        for k in 0..d {
            e += dx[k] * u[k];
            if k + 1 < d {
                v *= biane(c[k], u[k], u[k + 1]);
            }
        }
        v * (-0.25 * e).exp()
    };
    // The Biane kernel concentrates near u_{k+1} = u_k with width ~ c_k.
    let breaks = |prefix: &[f64]| match prefix.last() {
        None => vec![1.0, 4.0],
        Some(&u) => {
            let t = c[prefix.len() - 1];
            vec![u, (u - t * t).max(0.0), u + t * t, u + t * (u.sqrt() + t) * 4.0]
        }
    };
    quad.orthant(d, &integrand, &breaks)
}

/// `Psi_x^{(a,c)}(c)` from the Biane-coordinate integrals.
pub fn psi(p: &LimitParams, q: &LaplaceQuery, quad: &Quad) -> Result<f64> {
    check_dim(q)?;
    q.check_admissible(p)?;
    let d = q.d();
    match p.branch() {
        Branch::Drift => Ok(drift_psi(p, q)),
        Branch::AInfCFinite => psi(&p.swapped(), &q.reversed(), quad),
        Branch::BothInf => {
            let v = biane_integral(q, &|u| u.sqrt(), &|_| 1.0, quad)?;
            Ok(v / (4.0 * PI.sqrt()))
        }
        Branch::AFiniteCInf => {
            let al = p.a + q.c()[d - 1];
            let v = biane_integral(q, &|u| u.sqrt(), &|u| 1.0 / (al * al + u), quad)?;
            Ok(v / (2.0 * SQRT_2 * PI * norm_const(p)?))
        }
        Branch::General => {
            let al = p.a + q.c()[d - 1];
            let ga = p.c - q.s()[0];
            let v = biane_integral(q, &|u| u.sqrt() / (ga * ga + u), &|u| 1.0 / (al * al + u), quad)?;
            Ok(SQRT_2 * v / (PI * norm_const(p)?))
        }
    }
}

/// `a + c = 0`: `eta_x = B_x - a x / sqrt 2` is itself Brownian with drift,
/// so `Psi` is the Brownian factor times `exp(a/2 sum c_k x_k)`.
fn drift_psi(p: &LimitParams, q: &LaplaceQuery) -> f64 {
    let e: f64 = q.c().iter().zip(q.x()).map(|(c, x)| c * x).sum();
    (0.5 * p.a * e).exp() * bm_laplace(q)
}

/// The Gaussian moment generating function of `-sum c_k eta_{x_k} / sqrt 2`
/// from its mean and covariance `min(x_j, x_k) / 2`.
fn drift_mgf(p: &LimitParams, q: &LaplaceQuery) -> f64 {
    let (c, x) = (q.c(), q.x());
    let mean: f64 = c.iter().zip(x).map(|(c, x)| c * p.a * x / 2.0).sum();
    let mut var = 0.0;
    for j in 0..c.len() {
        for k in 0..c.len() {
            var += c[j] * c[k] * x[j].min(x[k]) / 2.0;
        }
    }
    (mean + var / 2.0).exp()
}

/// `E exp(-sum c_k B_{x_k}/sqrt 2) * Psi`.
pub fn limit_laplace(p: &LimitParams, q: &LaplaceQuery, quad: &Quad) -> Result<f64> {
    Ok(bm_laplace(q) * psi(p, q, quad)?)
}

fn killed_chain(x: &[f64], y: &[f64]) -> f64 {
    (1..x.len()).map(|k| ln_killed_kernel(x[k] - x[k - 1], y[k - 1], y[k])).sum()
}

fn ex(ln: f64) -> f64 {
    if ln == f64::NEG_INFINITY {
        0.0
    } else {
        ln.exp()
    }
}

/// `E exp(-sum c_k eta_{x_k} / sqrt 2)` integrated against the joint
/// densities of `eta`. The free right endpoint, when present, is integrated
/// in closed form; the `(inf, c)` branch uses its own density.
pub fn eta_laplace(p: &LimitParams, q: &LaplaceQuery, quad: &Quad) -> Result<f64> {
    check_dim(q)?;
    q.check_admissible(p)?;
    let d = q.d();
    let x = q.x();
    let c = q.c();
    let dx = q.increments();
    let r2 = 1.0 / SQRT_2;
    // Interior coordinates are y_{x_1}, ..., y_{x_{d-1}}.
    let tilt = |y: &[f64]| -> f64 { (0..y.len()).map(|k| c[k] * y[k]).sum::<f64>() * r2 };
    // A ridge along the previous coordinate, as in the sampler bridges.
    let breaks = |prefix: &[f64]| match prefix.last() {
        None => vec![1.0],
        Some(&y) => vec![y, y + 1.0],
    };
    match p.branch() {
        Branch::Drift => Ok(drift_mgf(p, q)),
        Branch::BothInf => {
            if d == 1 {
                return Ok(1.0);
            }
            let f = |y: &[f64]| {
                ex(0.5 * (8.0 * PI).ln() + ln_first_passage(x[0], y[0]) + ln_first_passage(1.0 - x[d - 2], y[d - 2])
                    + killed_chain(&x[..d - 1], y)
                    - tilt(y))
            };
            quad.orthant(d - 1, &f, &breaks)
        }
        Branch::AFiniteCInf => {
            let al = (p.a + c[d - 1]) * r2;
            let f = |y: &[f64]| {
                // Last free coordinate y_1 integrated out from y_{x_{d-1}}.
                let (ln_left, last_k) = if d == 1 {
                    (0.0, None)
                } else {
                    (ln_first_passage(x[0], y[0]) + killed_chain(&x[..d - 1], y) - tilt(y), Some(y[d - 2]))
                };
                match last_k {
                    None => ex(ln_first_passage(1.0, y[0]) - al * y[0]),
                    Some(yl) => ex(ln_left) * killed_laplace(dx[d - 1], yl, al),
                }
            };
            let dim = if d == 1 { 1 } else { d - 1 };
            Ok(quad.orthant(dim, &f, &breaks)? / norm_const(p)?)
        }
        Branch::AInfCFinite => {
            // Coordinates y_0, y_{x_1}, ..., y_{x_{d-1}} with x_0 = 0.
            let ga = (p.c - q.s()[0]) * r2;
            let mut xs = vec![0.0];
            xs.extend_from_slice(&x[..d - 1]);
            let f = |y: &[f64]| {
                ex(-ga * y[0] - tilt(&y[1..]) + killed_chain(&xs, y) + ln_first_passage(1.0 - xs[d - 1], y[d - 1]))
            };
            Ok(quad.orthant(d, &f, &breaks)? / norm_const(p)?)
        }
        Branch::General => {
            let ga = (p.c - q.s()[0]) * r2;
            let al = (p.a + c[d - 1]) * r2;
            let mut xs = vec![0.0];
            xs.extend_from_slice(&x[..d - 1]);
            let f = |y: &[f64]| {
                ex(-ga * y[0] - tilt(&y[1..]) + killed_chain(&xs, y)) * killed_laplace(dx[d - 1], y[d - 1], al)
            };
            Ok(quad.orthant(d, &f, &breaks)? / norm_const(p)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brownian_factor() {
        let q = LaplaceQuery::single(0.8).unwrap();
        assert_relative_eq!(bm_laplace(&q), (0.16f64).exp(), max_relative = 1e-15);
        let q = LaplaceQuery::new(vec![0.3, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(bm_laplace(&q), 1.0);
    }

    #[test]
    fn transform_at_zero_is_one() {
        let quad = Quad::new(1e-11, 1e-11);
        for (a, c) in [(1.0, 2.0), (0.5, f64::INFINITY), (f64::INFINITY, 0.7), (f64::INFINITY, f64::INFINITY)] {
            let p = LimitParams::new(a, c).unwrap();
            let v = psi(&p, &LaplaceQuery::single(1e-6).unwrap(), &quad).unwrap();
            assert!((v - 1.0).abs() < 1e-5, "({a},{c}): {v}");
        }
    }

    #[test]
    fn drift_closed_form() {
        let p = LimitParams::new(0.7, -0.7).unwrap();
        let q = LaplaceQuery::new(vec![0.5, 1.0], vec![1.0, -3.0]).unwrap();
        // B_{1/2} and B_1 - B_{1/2} carry weights -2 and -3
        let gauss = ((4.0 + 9.0) * 0.25f64 * 0.5).exp();
        let want = (0.35f64 * (0.5 - 3.0)).exp() * gauss;
        assert_relative_eq!(psi(&p, &q, &Quad::default()).unwrap(), want, max_relative = 1e-14);
        assert_relative_eq!(eta_laplace(&p, &q, &Quad::default()).unwrap(), want, max_relative = 1e-14);
    }

    #[test]
    fn inadmissible_and_oversized_queries() {
        let p = LimitParams::new(1.0, 2.0).unwrap();
        let quad = Quad::default();
        assert!(matches!(psi(&p, &LaplaceQuery::single(2.5).unwrap(), &quad), Err(Error::Inadmissible(_))));
        let q = LaplaceQuery::new(vec![0.2, 0.4, 0.6, 1.0], vec![0.1; 4]).unwrap();
        assert!(matches!(psi(&p, &q, &quad), Err(Error::Unsupported(_))));
    }
}
