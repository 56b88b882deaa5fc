use openasep::limit::{
    eta_joint_density, first_passage, ln_killed_kernel, norm_const, norm_const_quadrature, sample_eta,
    LimitParams, TimeGrid,
};
use openasep::quad::{Estimate, NestFlag, Quad};
use openasep::stats::{ks_one_sample, mean_se};
use std::f64::consts::{PI, SQRT_2};

const INF: f64 = f64::INFINITY;

/// `int_{(0,inf)^k} f` by nested adaptive quadrature.
fn nested(quad: &Quad, k: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    fn go(quad: &Quad, k: usize, prefix: &mut Vec<f64>, f: &dyn Fn(&[f64]) -> f64, flag: &NestFlag) -> Estimate {
        let centre = prefix.last().copied().unwrap_or(1.0);
        quad.half_line_points(
            |y| {
                prefix.push(y);
                let v = if prefix.len() == k { f(prefix) } else { flag.value(go(quad, k, prefix, f, flag)) };
                prefix.pop();
                v
            },
            0.0,
            &[1.0, centre],
        )
    }
    let flag = NestFlag::default();
    let outer = go(quad, k, &mut Vec::new(), f, &flag);
    flag.check(quad, outer).unwrap()
}

/// `exp(ln)` with `exp(-inf + anything) = 0`.
fn ex(ln_k: f64, rest: f64) -> f64 {
    if ln_k == f64::NEG_INFINITY { 0.0 } else { (ln_k + rest).exp() }
}

#[test]
fn densities_have_unit_mass() {
    let quad = Quad::new(1e-9, 1e-9);
    let cases: Vec<(LimitParams, Vec<f64>)> = vec![
        (LimitParams::new(1.0, 2.0).unwrap(), vec![0.0, 0.5, 1.0]),
        (LimitParams::new(-0.4, 0.9).unwrap(), vec![0.0, 1.0]),
        (LimitParams::new(0.5, INF).unwrap(), vec![0.5, 1.0]),
        (LimitParams::new(-0.3, INF).unwrap(), vec![0.3, 0.6, 1.0]),
        (LimitParams::new(INF, -0.3).unwrap(), vec![0.0, 0.5]),
        (LimitParams::new(INF, INF).unwrap(), vec![0.3, 0.7]),
    ];
    for (p, times) in cases {
        let g = TimeGrid::new(times.clone()).unwrap();
        let m = nested(&quad, times.len(), &|y: &[f64]| eta_joint_density(&p, &g, y).unwrap());
        assert!((m - 1.0).abs() < 1e-6, "{p:?} {times:?}: {m}");
    }
}

#[test]
fn norm_constants_match_defining_integrals() {
    let quad = Quad::new(1e-12, 1e-12);
    for (a, c) in [(1.0, 2.0), (2.0, 1.0), (-0.5, 1.5), (0.3, 0.3), (3.0, 0.01), (0.0, INF), (-1.2, INF), (INF, 0.7)] {
        let p = LimitParams::new(a, c).unwrap();
        let closed = norm_const(&p).unwrap();
        let direct = norm_const_quadrature(&p, &quad).unwrap();
        assert!((closed - direct).abs() < 1e-8, "({a},{c}): {closed} vs {direct}");
    }
}

/// Tabulated CDF of a density on `[lo, hi]` by composite Simpson.
struct Cdf {
    lo: f64,
    h: f64,
    values: Vec<f64>,
}

impl Cdf {
    fn new(lo: f64, hi: f64, cells: usize, f: &dyn Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / cells as f64;
        let mut values = vec![0.0];
        let mut acc = 0.0;
        let mut left = f(lo);
        for i in 0..cells {
            let a = lo + i as f64 * h;
            let mid = f(a + 0.5 * h);
            let right = f(a + h);
            acc += h / 6.0 * (left + 4.0 * mid + right);
            values.push(acc);
            left = right;
        }
        Cdf { lo, h, values }
    }

    fn total(&self) -> f64 {
        *self.values.last().unwrap()
    }

    fn eval(&self, x: f64) -> f64 {
        let u = (x - self.lo) / self.h;
        if u <= 0.0 {
            return 0.0;
        }
        let i = u.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.total();
        }
        let w = u - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

fn ks_against(samples: &[f64], cdf: &Cdf) -> f64 {
    assert!((cdf.total() - 1.0).abs() < 1e-6, "oracle mass {}", cdf.total());
    ks_one_sample(samples, |x| cdf.eval(x))
}

fn g(t: f64, x: f64, y: f64) -> f64 {
    ln_killed_kernel(t, x, y).exp()
}

fn l(x: f64, y: f64) -> f64 {
    if y > 0.0 { first_passage(x, y).unwrap() } else { 0.0 }
}

const N: usize = 100_000;

#[test]
fn excursion_midpoint_marginal() {
    let p = LimitParams::new(INF, INF).unwrap();
    let paths = sample_eta(&p, &TimeGrid::new(vec![0.5]).unwrap(), N, 11).unwrap();
    let cdf = Cdf::new(0.0, 6.0, 600, &|y| (8.0 * PI).sqrt() * l(0.5, y) * l(0.5, y));
    let ks = ks_against(&paths.column(0), &cdf);
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn one_sided_marginals() {
    let quad = Quad::new(1e-11, 1e-11);
    let a = 0.5;
    let p = LimitParams::new(a, INF).unwrap();
    let k = norm_const(&p).unwrap();
    let paths = sample_eta(&p, &TimeGrid::new(vec![0.5, 1.0]).unwrap(), N, 12).unwrap();
    let end = Cdf::new(0.0, 9.0, 900, &|y| l(1.0, y) * (-a * y / SQRT_2).exp() / k);
    assert!(ks_against(&paths.column(1), &end) < 0.01);
    let mid = Cdf::new(0.0, 9.0, 900, &|y| {
        if y <= 0.0 {
            return 0.0;
        }
        let inner = quad.half_line_points(|z| ex(ln_killed_kernel(0.5, y, z), -a * z / SQRT_2), 0.0, &[y]).value;
        l(0.5, y) * inner / k
    });
    assert!(ks_against(&paths.column(0), &mid) < 0.01);
}

#[test]
fn reversed_one_sided_marginals() {
    let quad = Quad::new(1e-11, 1e-11);
    let c = 1.0;
    let p = LimitParams::new(INF, c).unwrap();
    let k = norm_const(&p).unwrap();
    let paths = sample_eta(&p, &TimeGrid::new(vec![0.5, 1.0]).unwrap(), N, 13).unwrap();
    // eta_1 = -tilde_0
    let end = Cdf::new(-9.0, 0.0, 900, &|w| l(1.0, -w) * (c * w / SQRT_2).exp() / k);
    assert!(ks_against(&paths.column(1), &end) < 0.01);
    // eta_{1/2} = tilde_{1/2} - tilde_0
    let mid = Cdf::new(-8.0, 8.0, 1600, &|w| {
        quad.half_line_points(
            |y0| {
                let y = y0 + w;
                if y <= 0.0 {
                    return 0.0;
                }
                (-c * y0 / SQRT_2).exp() * g(0.5, y0, y) * l(0.5, y) / k
            },
            (-w).max(0.0),
            &[1.0 + (-w).max(0.0)],
        )
        .value
    });
    assert!(ks_against(&paths.column(0), &mid) < 0.01);
}

#[test]
fn general_marginals() {
    let quad = Quad::new(1e-10, 1e-10);
    for (a, c, seed) in [(1.0, 2.0, 14u64), (-0.5, 1.5, 15)] {
        let p = LimitParams::new(a, c).unwrap();
        let k = norm_const(&p).unwrap();
        let paths = sample_eta(&p, &TimeGrid::new(vec![0.5, 1.0]).unwrap(), N, seed).unwrap();
        let end = Cdf::new(-9.0, 9.0, 1800, &|w| {
            quad.half_line_points(
                |y0| {
                    let y1 = y0 + w;
                    if y1 <= 0.0 {
                        return 0.0;
                    }
                    ex(ln_killed_kernel(1.0, y0, y1), -(c * y0 + a * y1) / SQRT_2) / k
                },
                (-w).max(0.0),
                &[1.0 + (-w).max(0.0)],
            )
            .value
        });
        let ks = ks_against(&paths.column(1), &end);
        assert!(ks < 0.01, "({a},{c}) end KS {ks}");
        let mid = Cdf::new(-7.0, 7.0, 280, &|w| {
            quad.half_line_points(
                |y0| {
                    let y = y0 + w;
                    // the tilted tail is far below 1e-30 beyond 200
                    if y <= 0.0 || y0 > 200.0 {
                        return 0.0;
                    }
                    let right = quad
                        .half_line_points(|z| ex(ln_killed_kernel(0.5, y, z), -a * z / SQRT_2), 0.0, &[y])
                        .value;
                    ex(ln_killed_kernel(0.5, y0, y), -c * y0 / SQRT_2 + right.ln()) / k
                },
                (-w).max(0.0),
                &[1.0 + (-w).max(0.0)],
            )
            .value
        });
        let ks = ks_against(&paths.column(0), &mid);
        assert!(ks < 0.01, "({a},{c}) mid KS {ks}");
    }
}

#[test]
fn drift_branch_mean() {
    let p = LimitParams::new(1.0, -1.0).unwrap();
    let paths = sample_eta(&p, &TimeGrid::new(vec![0.25, 1.0]).unwrap(), N, 16).unwrap();
    let m = mean_se(&paths.column(1));
    assert!(m.covers(-1.0 / SQRT_2, 3.0), "{m:?}");
}

#[test]
fn seeded_output_is_reproducible() {
    let p = LimitParams::new(1.0, 1.0).unwrap();
    let g = TimeGrid::new(vec![0.3, 1.0]).unwrap();
    let a = sample_eta(&p, &g, 500, 99).unwrap();
    let b = sample_eta(&p, &g, 500, 99).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.to_csv().lines().next(), Some("path,time,value"));
    assert!(sample_eta(&p, &TimeGrid::new(vec![0.0, 1.0]).unwrap(), 10, 1).is_err());
    assert!(sample_eta(&LimitParams::new(INF, INF).unwrap(), &g, 10, 1).is_err());
}
