//! Both sides of the duality between Biane-process integrals and
//! killed-Brownian-motion integrals.

use super::identities::IdentityReport;
use super::query::LaplaceQuery;
use crate::error::{domain, Result};
use crate::laplace::psi::biane_integral;
use crate::limit::{killed_laplace, ln_first_passage, ln_killed_kernel, LimitParams};
use crate::quad::Quad;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::{PI, SQRT_2};

/// The pairs `(f, g)` entering the Laplace transforms of the three
/// non-drift limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum DualVariant {
    /// `f = sqrt u`, `g = 1`.
    Excursion,
    /// `f = sqrt u`, `g = 1 / (alpha^2 + u)`.
    MeanderType { alpha: f64 },
    /// `f = sqrt u / (gamma^2 + u)`, `g = 1 / (alpha^2 + u)`.
    General { alpha: f64, gamma: f64 },
}

impl DualVariant {
    /// The variant and constants used by the Laplace transform of `eta`
    /// with parameters `p` at `q`: `alpha = a + c_d`, `gamma = c - s_1`.
    pub fn for_query(p: &LimitParams, q: &LaplaceQuery) -> Self {
        let alpha = p.a + q.c()[q.d() - 1];
        let gamma = p.c - q.s()[0];
        match (p.a.is_finite(), p.c.is_finite()) {
            (true, true) => DualVariant::General { alpha, gamma },
            (true, false) => DualVariant::MeanderType { alpha },
            _ => DualVariant::Excursion,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            DualVariant::Excursion => "excursion",
            DualVariant::MeanderType { .. } => "meander-type",
            DualVariant::General { .. } => "general",
        }
    }

    fn f(&self, u: f64) -> f64 {
        match *self {
            DualVariant::General { gamma, .. } => u.sqrt() / (gamma * gamma + u),
            _ => u.sqrt(),
        }
    }

    fn g(&self, u: f64) -> f64 {
        match *self {
            DualVariant::Excursion => 1.0,
            DualVariant::MeanderType { alpha } | DualVariant::General { alpha, .. } => 1.0 / (alpha * alpha + u),
        }
    }

    /// Closed form of `f_hat` at first time `x1`.
    pub fn f_hat(&self, x1: f64, z: f64) -> f64 {
        match *self {
            DualVariant::General { gamma, .. } => f_kernel(z, gamma / SQRT_2, x1 / 2.0) / (2.0 * SQRT_2),
            _ => SQRT_2 * PI * ln_first_passage(x1, z).exp(),
        }
    }

    /// Closed form of `g_hat` for last increment `dx`.
    pub fn g_hat(&self, dx: f64, z: f64) -> f64 {
        match *self {
            DualVariant::Excursion => PI * ln_first_passage(dx, z).exp(),
            DualVariant::MeanderType { alpha } | DualVariant::General { alpha, .. } => {
                0.25 * f_kernel(z, alpha / SQRT_2, dx / 2.0)
            }
        }
    }
}

/// `F(z | alpha, theta) = int_0^inf e^{-theta u} sin(z sqrt u) / (alpha^2 + u) du`
/// in closed form, as `pi int_0^inf g_{2 theta}(z, y) e^{-alpha y} dy`.
pub fn f_kernel(z: f64, alpha: f64, theta: f64) -> f64 {
    PI * killed_laplace(2.0 * theta, z, alpha)
}

/// `f_hat(z) = int_0^inf f(2u^2) sin(uz) e^{-x1 u^2/2} du` by quadrature.
pub fn f_hat(f: &dyn Fn(f64) -> f64, x1: f64, z: f64, quad: &Quad) -> Result<f64> {
    quad.require(quad.half_line(|u| f(2.0 * u * u) * (u * z).sin() * (-x1 * u * u / 2.0).exp(), 0.0))
}

/// `g_hat(z) = int_0^inf g(2u^2) u sin(uz) e^{-dx u^2/2} du` by quadrature.
pub fn g_hat(g: &dyn Fn(f64) -> f64, dx: f64, z: f64, quad: &Quad) -> Result<f64> {
    quad.require(quad.half_line(|u| g(2.0 * u * u) * u * (u * z).sin() * (-dx * u * u / 2.0).exp(), 0.0))
}

/// Evaluates both sides: the left over `(0, inf)^d` in Biane coordinates,
/// the right over `(0, inf)^{d-1}` with killed kernels and the closed-form
/// transforms `f_hat`, `g_hat`. The gap is absolute.
pub fn dual_identity_check(variant: DualVariant, q: &LaplaceQuery, tol: f64, quad: &Quad) -> Result<IdentityReport> {
    let d = q.d();
    if d < 2 {
        return domain("the dual representation needs d >= 2");
    }
    let x = q.x();
    let c = q.c();
    let dx = q.increments();
    let lhs = biane_integral(q, &|u| variant.f(u), &|u| variant.g(u), quad)?;
    let rhs_integrand = |z: &[f64]| {
        let m = z.len();
        let mut ln = -(0..m).map(|k| c[k] * z[k]).sum::<f64>() / SQRT_2;
        for k in 1..m {
            ln += ln_killed_kernel(x[k] - x[k - 1], z[k - 1], z[k]);
        }
        if ln == f64::NEG_INFINITY {
            return 0.0;
        }
        ln.exp() * variant.f_hat(x[0], z[0]) * variant.g_hat(dx[d - 1], z[m - 1])
    };
    let breaks = |prefix: &[f64]| match prefix.last() {
        None => vec![1.0],
        Some(&z) => vec![z, z + 1.0],
    };
    let rhs = 8.0 / PI * quad.orthant(d - 1, &rhs_integrand, &breaks)?;
    let mut inputs = json!({"x": x, "c": c});
    inputs["variant"] = serde_json::to_value(variant)?;
    Ok(IdentityReport::new(format!("duality/{}/d={d}", variant.name()), inputs, lhs, rhs, tol))
}
