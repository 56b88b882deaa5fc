//! Closed-form kernels of the limit objects.

use crate::error::{domain, Result};
use crate::special::erfcx;
use std::f64::consts::PI;

pub use crate::special::h_fn;

/// `ln(1 - e^{-u})` for `u > 0`.
pub(crate) fn ln_one_minus_exp(u: f64) -> f64 {
    if u > std::f64::consts::LN_2 {
        (-(-u).exp()).ln_1p()
    } else {
        (-(-u).exp_m1()).ln()
    }
}

/// `ln g_t(x, y)`; `-inf` when `x` or `y` is not positive.
pub fn ln_killed_kernel(t: f64, x: f64, y: f64) -> f64 {
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return f64::NEG_INFINITY;
    }
    -(x - y) * (x - y) / (2.0 * t) + ln_one_minus_exp(2.0 * x * y / t) - 0.5 * (2.0 * PI * t).ln()
}

/// Transition density of Brownian motion killed at zero.
pub fn killed_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("killed kernel needs t > 0, got {t}"));
    }
    Ok(ln_killed_kernel(t, x, y).exp())
}

/// `ln l_x(y)`.
pub fn ln_first_passage(x: f64, y: f64) -> f64 {
    if !(y > 0.0 && y.is_finite()) {
        return f64::NEG_INFINITY;
    }
    y.ln() - 0.5 * (2.0 * PI * x * x * x).ln() - y * y / (2.0 * x)
}

/// `l_x(y) = y / sqrt(2 pi x^3) exp(-y^2 / 2x)`: as a function of `x`, the
/// first-passage density of Brownian motion from `y` to zero.
pub fn first_passage(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return domain(format!("first-passage kernel needs x, y > 0, got {x}, {y}"));
    }
    Ok(ln_first_passage(x, y).exp())
}

/// Transition density of the 1/2-stable Biane process.
pub fn biane_kernel(t: f64, u: f64, v: f64) -> Result<f64> {
    if !(t > 0.0 && u > 0.0 && v > 0.0) {
        return domain(format!("Biane kernel needs t, u, v > 0, got {t}, {u}, {v}"));
    }
    Ok(biane(t, u, v))
}

pub(crate) fn biane(t: f64, u: f64, v: f64) -> f64 {
    let t2 = t * t;
    2.0 * t * v.sqrt() / (PI * (t2 * t2 + 2.0 * t2 * (u + v) + (u - v) * (u - v)))
}

/// `int_0^inf g_t(x, y) e^{-c y} dy` in closed form:
/// `1/2 e^{-x^2/2t} (H((ct - x)/sqrt(2t)) - H((ct + x)/sqrt(2t)))`,
/// rearranged so that no `H` of a large negative argument is formed.
pub fn killed_laplace(t: f64, x: f64, c: f64) -> f64 {
    let s = (2.0 * t).sqrt();
    let a = (c * t - x) / s;
    let b = (c * t + x) / s;
    let pre = (-x * x / (2.0 * t)).exp();
    if a >= 0.0 {
        0.5 * pre * (erfcx(a) - erfcx(b))
    } else {
        // H(a) = 2 e^{a^2} - H(-a) and e^{-x^2/2t + a^2} = e^{c^2 t/2 - c x}
        (c * c * t / 2.0 - c * x).exp() - 0.5 * pre * (erfcx(-a) + erfcx(b))
    }
}
