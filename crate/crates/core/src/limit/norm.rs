use super::kernels::{ln_first_passage, ln_killed_kernel};
use super::params::{Branch, LimitParams};
use crate::error::{domain, Error, Result};
use crate::quad::{NestFlag, Quad};
use crate::special::h_fn;
use std::f64::consts::{PI, SQRT_2};

/// Below this `|a - c|` the diagonal branch of the constant is used.
pub const DIAGONAL_SWITCH: f64 = 1e-8;

fn one_sided(a: f64) -> f64 {
    1.0 / (2.0 * PI).sqrt() - a * h_fn(a / 2.0) / (2.0 * SQRT_2)
}

/// Normalization constant of the tilted densities. The excursion carries
/// its own constant and has no entry here.
pub fn norm_const(p: &LimitParams) -> Result<f64> {
    let (a, c) = (p.a, p.c);
    match p.branch() {
        Branch::Drift => domain(format!("a + c = 0 has no normalization constant, got ({a}, {c})")),
        Branch::BothInf => Err(Error::BranchMismatch("the excursion density is normalized by sqrt(8 pi)".into())),
        Branch::AFiniteCInf => Ok(one_sided(a)),
        Branch::AInfCFinite => Ok(one_sided(c)),
        Branch::General if (a - c).abs() < DIAGONAL_SWITCH => {
            let m = 0.5 * (a + c);
            Ok((2.0 + m * m) / (2.0 * SQRT_2 * m) * h_fn(m / 2.0) - 1.0 / (2.0 * PI).sqrt())
        }
        Branch::General => Ok(SQRT_2 * (a * h_fn(a / 2.0) - c * h_fn(c / 2.0)) / (a * a - c * c)),
    }
}

/// The constant from its defining integral: the double integral of
/// `e^{-(c x + a y)/sqrt 2} g_1(x, y)` for finite parameters, or the single
/// integral of `l_1(y) e^{-a y / sqrt 2}` when the other parameter is infinite.
pub fn norm_const_quadrature(p: &LimitParams, quad: &Quad) -> Result<f64> {
    let one = |a: f64| {
        quad.require(quad.half_line_points(
            |y| {
                let lf = ln_first_passage(1.0, y);
                if lf == f64::NEG_INFINITY {
                    0.0
                } else {
                    (lf - a * y / SQRT_2).exp()
                }
            },
            0.0,
            &[(-a / SQRT_2).max(0.0) + 1.0],
        ))
    };
    match p.branch() {
        Branch::Drift | Branch::BothInf => norm_const(p),
        Branch::AFiniteCInf => one(p.a),
        Branch::AInfCFinite => one(p.c),
        Branch::General => {
            let (a, c) = (p.a, p.c);
            let flag = NestFlag::default();
            let outer = quad.half_line_points(
                |x| {
                    let centre = (x - a / SQRT_2).max(0.0);
                    let inner = quad.half_line_points(
                        |y| {
                            let lk = ln_killed_kernel(1.0, x, y);
                            if lk == f64::NEG_INFINITY {
                                0.0
                            } else {
                                (lk - (c * x + a * y) / SQRT_2).exp()
                            }
                        },
                        0.0,
                        &[centre],
                    );
                    flag.value(inner)
                },
                0.0,
                &[(-(a + c) / SQRT_2).max(0.0) + 1.0],
            );
            flag.check(quad, outer)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meander_constant() {
        let p = LimitParams::new(0.0, f64::INFINITY).unwrap();
        assert!((norm_const(&p).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn excursion_and_drift_rejected() {
        let inf = f64::INFINITY;
        assert!(matches!(norm_const(&LimitParams::new(inf, inf).unwrap()), Err(Error::BranchMismatch(_))));
        assert!(norm_const(&LimitParams::new(1.0, -1.0).unwrap()).is_err());
    }

    #[test]
    fn diagonal_continuity() {
        let near = norm_const(&LimitParams::new(1.0, 1.0 + 1e-6).unwrap()).unwrap();
        let diag = norm_const(&LimitParams::new(1.0, 1.0).unwrap()).unwrap();
        assert!((near - diag).abs() < 1e-5);
    }

    #[test]
    fn symmetric_in_parameters() {
        let p = LimitParams::new(-0.4, 1.3).unwrap();
        assert!((norm_const(&p).unwrap() - norm_const(&p.swapped()).unwrap()).abs() < 1e-15);
    }
}
