use crate::error::{Error, Result};
use crate::quad::Quad;
use crate::special::{qpoch_abs2_polar, QPochhammer, POCH_TOL};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Parameters `(a, b, c, d, q)`: each real, or `c, d` a conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwParams {
    pub p: [C64; 4],
    pub q: f64,
}

fn poch(x: C64, q: f64) -> C64 {
    QPochhammer::new(x, q, POCH_TOL).infinite()
}

fn is_real(z: C64) -> bool {
    z.im.abs() <= 1e-14 * z.norm().max(1.0)
}

impl AwParams {
    pub fn real(a: f64, b: f64, c: f64, d: f64, q: f64) -> Self {
        AwParams { p: [a, b, c, d].map(|x| C64::new(x, 0.0)), q }
    }

    /// `(a, b, z, conj z)`.
    pub fn with_pair(a: f64, b: f64, z: C64, q: f64) -> Self {
        AwParams { p: [C64::new(a, 0.0), C64::new(b, 0.0), z, z.conj()], q }
    }

    pub fn permuted(&self, perm: [usize; 4]) -> Self {
        AwParams { p: perm.map(|i| self.p[i]), q: self.q }
    }

    /// First product in `ac, ad, bc, bd, qac, qad, qbc, qbd, abcd, qabcd`
    /// that is real and at least 1, if any.
    pub fn restriction_violation(&self) -> Option<(String, f64)> {
        let [a, b, c, d] = self.p;
        let q = self.q;
        let prods = [
            ("ac", a * c),
            ("ad", a * d),
            ("bc", b * c),
            ("bd", b * d),
            ("qac", a * c * q),
            ("qad", a * d * q),
            ("qbc", b * c * q),
            ("qbd", b * d * q),
            ("abcd", a * b * c * d),
            ("qabcd", a * b * c * d * q),
        ];
        prods
            .iter()
            .find(|(_, z)| is_real(*z) && z.re >= 1.0)
            .map(|(name, z)| (name.to_string(), z.re))
    }

    /// Normalizing constant `(q, ab, ac, ad, bc, bd, cd; q)_inf / (abcd; q)_inf`.
    fn constant(&self) -> Result<f64> {
        let [a, b, c, d] = self.p;
        let q = self.q;
        let den = poch(a * b * c * d, q);
        if den.norm() < 1e-300 {
            return Err(Error::Singular("(abcd; q)_inf vanishes".into()));
        }
        let num = [C64::new(q, 0.0), a * b, a * c, a * d, b * c, b * d, c * d]
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, &z| acc * poch(z, q));
        Ok((num / den).re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Atoms generated by real parameters of modulus above one. Only the first
/// atom `y_0` of a single generating parameter is supported.
pub fn aw_atoms(params: &AwParams) -> Result<Vec<Atom>> {
    let gens: Vec<usize> = (0..4).filter(|&i| is_real(params.p[i]) && params.p[i].re.abs() > 1.0).collect();
    match gens.as_slice() {
        [] => Ok(Vec::new()),
        [i] => {
            let a = params.p[*i].re;
            if (a * params.q).abs() >= 1.0 {
                return Err(Error::Unsupported(format!(
                    "parameter {a} generates atoms beyond y_0 (|a q| >= 1)"
                )));
            }
            let others: Vec<C64> = (0..4).filter(|j| j != i).map(|j| params.p[j]).collect();
            let [b, c, d] = [others[0], others[1], others[2]];
            let q = params.q;
            let a_c = C64::new(a, 0.0);
            let num = poch(C64::new(1.0 / (a * a), 0.0), q) * poch(b * c, q) * poch(b * d, q) * poch(c * d, q);
            let den = poch(b / a_c, q) * poch(c / a_c, q) * poch(d / a_c, q) * poch(a_c * b * c * d, q);
            if den.norm() < 1e-300 {
                return Err(Error::Singular("atom mass denominator vanishes".into()));
            }
            Ok(vec![Atom { location: 0.5 * (a + 1.0 / a), mass: (num / den).re }])
        }
        _ => Err(Error::Unsupported("two parameters of modulus above one".into())),
    }
}

/// Askey–Wilson measure: density on `[-1, 1]` plus atoms.
#[derive(Debug, Clone)]
pub struct AwMeasure {
    pub params: AwParams,
    pub atoms: Vec<Atom>,
    constant: f64,
    polar: [(f64, f64); 4],
}

impl AwMeasure {
    /// Builds the measure, rejecting parameter sets that violate the
    /// product restriction.
    pub fn new(params: AwParams) -> Result<Self> {
        if !(0.0..1.0).contains(&params.q) {
            return Err(Error::Domain(format!("q must lie in [0,1), got {}", params.q)));
        }
        if let Some((name, v)) = params.restriction_violation() {
            return Err(Error::Unsupported(format!("product {name} = {v} lies in [1, inf)")));
        }
        let atoms = aw_atoms(&params)?;
        let constant = params.constant()?;
        let polar = params.p.map(|z| (z.norm(), z.arg()));
        Ok(AwMeasure { params, atoms, constant, polar })
    }

    /// Density with respect to `d theta` on `[0, pi]`, i.e.
    /// `f(cos theta) sin theta`. All factors are in the real form
    /// `(1 - r)^2 + 4 r sin^2(psi/2)`.
    pub fn density_theta(&self, theta: f64) -> f64 {
        let q = self.params.q;
        let s = theta.sin();
        // |(e^{2 i theta}; q)_inf|^2 = 4 sin^2 theta * prod_{k>=1} ...
        let top = 4.0 * s * s * if q > 0.0 { qpoch_abs2_polar(q, 2.0 * theta, q) } else { 1.0 };
        let bottom: f64 = self.polar.iter().map(|&(r, phi)| qpoch_abs2_polar(r, theta + phi, q)).product();
        self.constant * top / (2.0 * PI * bottom)
    }

    /// Density in `y`, zero outside `(-1, 1)`.
    pub fn density(&self, y: f64) -> f64 {
        if y.abs() >= 1.0 {
            return 0.0;
        }
        let theta = y.acos();
        self.density_theta(theta) / theta.sin()
    }

    /// Angles in `(0, pi)` where the density can peak.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        for &(r, phi) in &self.polar {
            let t = phi.abs();
            if r > 0.0 && t > 1e-12 && t < PI - 1e-12 {
                pts.push(t);
            }
        }
        pts.push(PI);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `int f dnu`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, quad: &Quad, mut f: F) -> Result<f64> {
        let est = quad.integrate_points(|t| f(t.cos()) * self.density_theta(t), &self.breakpoints());
        let cont = quad.require(est)?;
        Ok(cont + self.atoms.iter().map(|a| a.mass * f(a.location)).sum::<f64>())
    }

    pub fn mass(&self, quad: &Quad) -> Result<f64> {
        self.integrate(quad, |_| 1.0)
    }

    pub fn moment(&self, quad: &Quad, k: i32) -> Result<f64> {
        self.integrate(quad, |y| y.powi(k))
    }

    /// `(grid point, density)` rows for plotting.
    pub fn density_csv(&self, points: usize) -> String {
        let mut s = String::from("point,density\n");
        for i in 1..points {
            let y = -1.0 + 2.0 * i as f64 / points as f64;
            s += &format!("{},{}\n", y, self.density(y));
        }
        for a in &self.atoms {
            s += &format!("# atom {},{}\n", a.location, a.mass);
        }
        s
    }
}

/// `f(y; a, b, c, d, q)`.
pub fn aw_density(y: f64, params: &AwParams) -> Result<f64> {
    Ok(AwMeasure::new(*params)?.density(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perms() -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        if (0..4).all(|i| p.contains(&i)) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn permutation_invariance() {
        let sets = [
            AwParams::real(0.4, -0.3, 0.6, -0.2, 0.35),
            AwParams::with_pair(0.5, -0.4, C64::from_polar(0.7, 1.1), 0.2),
        ];
        let ps = perms();
        assert_eq!(ps.len(), 24);
        for base in sets {
            let m0 = AwMeasure::new(base).unwrap();
            for perm in &ps {
                let m = AwMeasure::new(base.permuted(*perm)).unwrap();
                for i in 1..200 {
                    let y = -1.0 + i as f64 / 100.0;
                    let (f0, f) = (m0.density(y), m.density(y));
                    assert!((f - f0).abs() < 1e-10, "{perm:?} at {y}: {f} vs {f0}");
                }
            }
        }
    }

    #[test]
    fn semicircle() {
        let m = AwMeasure::new(AwParams::real(0.0, 0.0, 0.0, 0.0, 0.0)).unwrap();
        for y in [-0.9f64, -0.3, 0.0, 0.5, 0.99] {
            let want = 2.0 / PI * (1.0 - y * y).sqrt();
            assert!((m.density(y) - want).abs() < 1e-14);
        }
        assert!((m.mass(&Quad::default()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.density(1.2), 0.0);
    }

    #[test]
    fn mass_is_one_without_atoms() {
        let quad = Quad::default();
        for params in [
            AwParams::real(0.4, -0.3, 0.6, -0.2, 0.35),
            AwParams::real(0.9, 0.0, 0.95, -0.5, 0.0),
            AwParams::with_pair(0.5, -0.4, C64::from_polar(0.7, 1.1), 0.6),
        ] {
            let m = AwMeasure::new(params).unwrap();
            assert!(m.atoms.is_empty());
            assert!((m.mass(&quad).unwrap() - 1.0).abs() < 1e-8, "{params:?}");
        }
    }

    #[test]
    fn single_atom_mass() {
        let quad = Quad::default();
        for (a, q) in [(1.05, 0.3), (1.4, 0.5), (2.0, 0.0)] {
            let m = AwMeasure::new(AwParams::real(a, -0.1, 0.2, -0.05, q)).unwrap();
            assert_eq!(m.atoms.len(), 1);
            assert!((m.atoms[0].location - 0.5 * (a + 1.0 / a)).abs() < 1e-15);
            assert!(m.atoms[0].location > 1.0);
            assert!((m.mass(&quad).unwrap() - 1.0).abs() < 1e-8, "a = {a}");
        }
    }

    #[test]
    fn unsupported_sets() {
        // ac >= 1
        let err = AwMeasure::new(AwParams::real(1.2, 0.0, 0.9, 0.0, 0.1)).unwrap_err();
        assert!(err.to_string().contains("ac"), "{err}");
        // two generating parameters
        let err = AwMeasure::new(AwParams::real(1.2, -1.1, 0.0, 0.0, 0.1)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        // second atom would be needed
        let err = AwMeasure::new(AwParams::real(3.0, 0.0, 0.1, 0.0, 0.5)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
