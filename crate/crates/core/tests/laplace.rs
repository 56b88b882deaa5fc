use openasep::laplace::{
    bm_laplace, dual_identity_check, eta_laplace, f_hat, identity_suite, laplace_h_chain, lemma_cac_check,
    lemma_fh_check, limit_laplace, psi, DualVariant, LaplaceQuery,
};
use openasep::limit::{sample_eta, LimitParams, TimeGrid};
use openasep::quad::Quad;
use openasep::rng;
use openasep::stats::mean_se;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{PI, SQRT_2};

const INF: f64 = f64::INFINITY;

fn quad() -> Quad {
    Quad::new(1e-11, 1e-10)
}

fn query(x: &[f64], c: &[f64]) -> LaplaceQuery {
    LaplaceQuery::new(x.to_vec(), c.to_vec()).unwrap()
}

/// Admissible queries for `p` with `d` coordinates, drawn from a fixed stream.
fn queries(p: &LimitParams, d: usize, count: usize, seed: u64) -> Vec<LaplaceQuery> {
    let mut r = rng::stream(seed, d as u64);
    let mut out = Vec::new();
    while out.len() < count {
        let mut x: Vec<f64> = (0..d - 1).map(|_| r.random_range(0.1..0.9)).collect();
        x.push(1.0);
        let mut c: Vec<f64> = (0..d - 1).map(|_| r.random_range(0.05..1.2)).collect();
        c.push(r.random_range(-1.0..1.0));
        if let Ok(q) = LaplaceQuery::new(x, c) {
            if q.is_admissible(p) {
                out.push(q);
            }
        }
    }
    out
}

#[test]
fn psi_matches_eta_laplace_on_every_branch() {
    let quad = quad();
    let mut worst: f64 = 0.0;
    for (a, c) in [(INF, INF), (0.8, INF), (-0.5, INF), (INF, 0.6), (1.0, 2.0), (-0.4, 1.1), (0.7, 0.7)] {
        let p = LimitParams::new(a, c).unwrap();
        for d in [1, 2] {
            for q in queries(&p, d, 10, 11) {
                let lhs = psi(&p, &q, &quad).unwrap();
                let rhs = eta_laplace(&p, &q, &quad).unwrap();
                assert!((lhs - rhs).abs() < 1e-5, "({a},{c}) {q:?}: {lhs} vs {rhs}");
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    assert!(worst < 1e-8, "worst gap {worst}");
}

#[test]
fn reference_queries() {
    let quad = quad();
    let p = LimitParams::new(1.0, 2.0).unwrap();
    for q in [query(&[1.0], &[0.5]), query(&[0.5, 1.0], &[0.3, 0.2])] {
        let lhs = psi(&p, &q, &quad).unwrap();
        let rhs = eta_laplace(&p, &q, &quad).unwrap();
        assert!((lhs - rhs).abs() < 1e-5);
        assert!((limit_laplace(&p, &q, &quad).unwrap() - bm_laplace(&q) * lhs).abs() < 1e-15);
    }
    assert!((bm_laplace(&query(&[1.0], &[0.5])) - (0.0625f64).exp()).abs() < 1e-15);
}

#[test]
fn time_reversal_of_transforms() {
    let quad = quad();
    for (a, c) in [(1.0, 2.0), (-0.3, 0.9), (0.5, INF)] {
        let p = LimitParams::new(a, c).unwrap();
        for q in queries(&p, 2, 4, 5) {
            let r = q.reversed();
            let fwd = psi(&p, &q, &quad).unwrap();
            let back = eta_laplace(&p.swapped(), &r, &quad).unwrap();
            assert!((fwd - back).abs() < 1e-6, "({a},{c}) {q:?}: {fwd} vs {back}");
        }
    }
}

#[test]
fn normalizing_switch_is_continuous_in_psi() {
    let quad = quad();
    let q = query(&[0.4, 1.0], &[0.3, 0.1]);
    let on = psi(&LimitParams::new(0.9, 0.9).unwrap(), &q, &quad).unwrap();
    let off = psi(&LimitParams::new(0.9, 0.9 + 2e-8).unwrap(), &q, &quad).unwrap();
    assert!((on - off).abs() < 1e-7, "{on} vs {off}");
}

#[test]
fn duality_holds_for_all_variants() {
    let quad = quad();
    let ex = dual_identity_check(DualVariant::Excursion, &query(&[0.5, 1.0], &[1.0, 0.0]), 1e-6, &quad).unwrap();
    assert!(ex.pass, "{ex:?}");
    for (a, c) in [(INF, INF), (0.8, INF), (1.0, 2.0), (-0.3, 1.4)] {
        let p = LimitParams::new(a, c).unwrap();
        for d in [2, 3] {
            for q in queries(&p, d, 3, 23) {
                let v = DualVariant::for_query(&p, &q);
                let r = dual_identity_check(v, &q, 1e-6, &quad).unwrap();
                assert!(r.pass, "{r:?}");
            }
        }
    }
}

#[test]
fn transformed_first_function_is_a_first_passage_density() {
    let quad = Quad::new(1e-13, 1e-12);
    for &(x1, z) in &[(0.5, 1.0), (0.2, 0.3), (1.0, 2.0)] {
        let direct = f_hat(&|u| u.sqrt(), x1, z, &quad).unwrap();
        let ell = z / (2.0 * PI * x1 * x1 * x1).sqrt() * (-z * z / (2.0 * x1)).exp();
        assert!((direct - SQRT_2 * PI * ell).abs() < 1e-8, "{direct} vs {}", SQRT_2 * PI * ell);
    }
}

#[test]
fn closed_form_identities() {
    let quad = quad();
    assert!(lemma_fh_check(1.0, 1.0, 0.5, 1e-10, &quad).unwrap().pass);
    assert!(lemma_fh_check(1.0, 1.0, -0.2, 1e-10, &quad).unwrap().pass);
    // c = 0 is the survival probability 1 - 2 Phi(-x/sqrt t)
    let r = lemma_fh_check(1.0, 1.0, 0.0, 1e-10, &quad).unwrap();
    assert!((r.rhs - libm::erf(1.0 / SQRT_2)).abs() < 1e-14);
    assert!(lemma_cac_check(1.0, 2.0, 1.0, 1e-8, &quad).unwrap().pass);
    assert!(lemma_cac_check(1.0, 1.0, 1.0, 1e-8, &quad).unwrap().pass);
    let mut r = rng::stream(99, 0);
    for _ in 0..10 {
        let (t, x, c) = (r.random_range(0.1..2.0), r.random_range(0.05..3.0), r.random_range(-0.5..3.0));
        assert!(lemma_fh_check(t, x, c, 1e-8, &quad).unwrap().pass);
        let a: f64 = r.random_range(-0.5..3.0);
        let cc = r.random_range((0.1 - a).max(-0.5)..3.0);
        let rep = lemma_cac_check(a, cc, r.random_range(0.1..2.0), 1e-8, &quad).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
    for (a, c) in [(1.0, 2.0), (0.5, 0.5), (-0.4, 1.3)] {
        for rep in laplace_h_chain(a, c, 1e-8, &quad).unwrap() {
            assert!(rep.pass, "{rep:?}");
        }
    }
}

#[test]
fn identity_suite_passes() {
    let reports = identity_suite(3, &quad());
    assert!(reports.len() > 40);
    for r in &reports {
        assert!(r.pass, "{}", serde_json::to_string(r).unwrap());
    }
}

#[test]
fn brownian_factor_by_simulation() {
    let q = query(&[0.2, 0.6, 1.0], &[0.8, -0.5, 0.4]);
    let mut r = rng::stream(4, 0);
    let dx = q.increments();
    let vals: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let mut b = 0.0;
            let mut e = 0.0;
            for k in 0..3 {
                let z: f64 = r.sample(StandardNormal);
                b += dx[k].sqrt() * z;
                e += q.c()[k] * b;
            }
            (-e / SQRT_2).exp()
        })
        .collect();
    let m = mean_se(&vals);
    assert!(m.covers(bm_laplace(&q), 3.0), "{m:?} vs {}", bm_laplace(&q));
}

#[test]
fn sampler_agrees_with_psi() {
    let p = LimitParams::new(1.0, 2.0).unwrap();
    let paths = sample_eta(&p, &TimeGrid::new(vec![1.0]).unwrap(), 100_000, 31).unwrap();
    let eta1 = paths.at_time(1.0).unwrap();
    let vals: Vec<f64> = eta1.iter().map(|y| (-y / SQRT_2).exp()).collect();
    let target = psi(&p, &LaplaceQuery::single(1.0).unwrap(), &quad()).unwrap();
    let m = mean_se(&vals);
    assert!(m.covers(target, 3.0), "{m:?} vs {target}");

    // The slope of c -> Psi at 0 is -E eta_1 / sqrt 2.
    let h = 1e-3;
    let slope = (psi(&p, &LaplaceQuery::single(h).unwrap(), &quad()).unwrap()
        - psi(&p, &LaplaceQuery::single(-h).unwrap(), &quad()).unwrap())
        / (2.0 * h);
    let mean = mean_se(&eta1);
    assert!((slope + mean.mean / SQRT_2).abs() < 3.0 * mean.se / SQRT_2 + 1e-5, "{slope} vs {mean:?}");
}

#[test]
fn drift_sampler_agrees_with_psi() {
    let p = LimitParams::new(1.0, -1.0).unwrap();
    let q = LaplaceQuery::new(vec![0.5, 1.0], vec![0.4, -0.3]).unwrap();
    let paths = sample_eta(&p, &TimeGrid::new(vec![0.5, 1.0]).unwrap(), 100_000, 32).unwrap();
    let vals: Vec<f64> = (0..100_000)
        .map(|i| {
            let y = paths.path(i);
            (-(0.4 * y[0] - 0.3 * y[1]) / SQRT_2).exp()
        })
        .collect();
    let target = psi(&p, &q, &quad()).unwrap();
    let m = mean_se(&vals);
    assert!(m.covers(target, 3.0), "{m:?} vs {target}");
}
