use super::measure::{AwMeasure, AwParams};
use crate::asep::BoundaryParams;
use crate::error::{domain, Result};
use num_complex::Complex64 as C64;

/// Parameters of the time-`t` marginal `(A sqrt t, B sqrt t, C / sqrt t, D / sqrt t)`.
pub fn marginal_params(t: f64, p: &BoundaryParams, q: f64) -> Result<AwParams> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time must be positive, got {t}"));
    }
    if p.a * p.c >= 1.0 {
        return domain(format!("AC = {} must be below 1", p.a * p.c));
    }
    let r = t.sqrt();
    Ok(AwParams::real(p.a * r, p.b * r, p.c / r, p.d / r, q))
}

/// Marginal law of `Y_t`.
pub fn aw_marginal(t: f64, p: &BoundaryParams, q: f64) -> Result<AwMeasure> {
    AwMeasure::new(marginal_params(t, p, q)?)
}

/// Parameters of the transition from `Y_s = y` to time `t`.
pub fn transition_params(s: f64, y: f64, t: f64, p: &BoundaryParams, q: f64) -> Result<AwParams> {
    if !(s > 0.0 && s < t && t.is_finite()) {
        return domain(format!("transition needs 0 < s < t, got s = {s}, t = {t}"));
    }
    if !y.is_finite() {
        return domain(format!("state must be finite, got {y}"));
    }
    let r = (s / t).sqrt();
    let (a, b) = (p.a * t.sqrt(), p.b * t.sqrt());
    if y.abs() < 1.0 {
        let theta = y.acos();
        Ok(AwParams::with_pair(a, b, C64::from_polar(r, theta), q))
    } else {
        let w = (y * y - 1.0).sqrt();
        Ok(AwParams::real(a, b, r * (y + w), r * (y - w), q))
    }
}

pub fn aw_transition(s: f64, y: f64, t: f64, p: &BoundaryParams, q: f64) -> Result<AwMeasure> {
    AwMeasure::new(transition_params(s, y, t, p, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Quad;

    fn bp() -> BoundaryParams {
        BoundaryParams::new(0.4, -0.2, 0.3, -0.1).unwrap()
    }

    #[test]
    fn marginal_at_one_is_direct_substitution() {
        let m = marginal_params(1.0, &bp(), 0.2).unwrap();
        assert_eq!(m, AwParams::real(0.4, -0.2, 0.3, -0.1, 0.2));
    }

    #[test]
    fn marginal_mass_across_times() {
        let quad = Quad::default();
        for t in [0.5, 1.0, 2.0] {
            let m = aw_marginal(t, &bp(), 0.2).unwrap();
            assert!(m.atoms.is_empty());
            assert!((m.mass(&quad).unwrap() - 1.0).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn small_time_d_atom() {
        let p = BoundaryParams::new(0.2, -0.1, 0.3, -0.6).unwrap();
        let m = aw_marginal(0.25, &p, 0.1).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert!(m.atoms[0].location < -1.0);
        assert!((m.mass(&Quad::default()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn transition_mass_and_concentration() {
        let quad = Quad::default();
        let k = aw_transition(0.5, 0.2, 1.0, &bp(), 0.3).unwrap();
        assert!((k.mass(&quad).unwrap() - 1.0).abs() < 1e-8);

        let k = aw_transition(1.0 - 1e-3, 0.2, 1.0, &bp(), 0.3).unwrap();
        let m1 = k.moment(&quad, 1).unwrap();
        let m2 = k.moment(&quad, 2).unwrap();
        assert!((m1 - 0.2).abs() < 5e-3);
        assert!(m2 - m1 * m1 < 1e-2);
    }

    #[test]
    fn conditional_mean_and_variance() {
        let quad = Quad::default();
        let p = bp();
        let (s, t) = (0.6, 1.3);
        for y in [-0.7, 0.0, 0.45] {
            for q in [0.0, 0.4] {
                let k = aw_transition(s, y, t, &p, q).unwrap();
                let got = k.moment(&quad, 1).unwrap();
                let ab = p.a * p.b;
                let want = ((p.a + p.b) * (t - s) + 2.0 * (1.0 - ab * t) * s.sqrt() * y)
                    / (2.0 * t.sqrt() * (1.0 - ab * s));
                assert!((got - want).abs() < 1e-9, "y={y} q={q}: {got} vs {want}");
                let var = k.moment(&quad, 2).unwrap() - got * got;
                let want_var = (1.0 - q) * (t - s) * (1.0 - ab * t)
                    / (4.0 * t * (1.0 - ab * s).powi(2) * (1.0 - q * ab * s))
                    * (1.0 + p.a * p.a * s - 2.0 * p.a * s.sqrt() * y)
                    * (1.0 + p.b * p.b * s - 2.0 * p.b * s.sqrt() * y);
                assert!((var - want_var).abs() < 1e-9, "var y={y} q={q}: {var} vs {want_var}");
            }
        }
    }
}
