mod common;

use common::fixtures::recursion_error;
use htcfm::basis::{gauss_legendre, legendre_eval_all};
use htcfm::exact::{bessel_j, bessel_y, maxwell_residual, Cavity, MaterialParams, Mie, Sine1d, Standing2d};
use htcfm::hermite::{hermite_interpolate_1d, hermite_interpolate_2d};
use htcfm::mesh::Subdomain;
use proptest::prelude::*;
use std::f64::consts::PI;

fn poly_derivs(c: &[f64], x: f64, upto: usize) -> Vec<f64> {
    (0..=upto)
        .map(|d| {
            c.iter()
                .enumerate()
                .skip(d)
                .map(|(j, a)| a * (0..d).map(|i| (j - i) as f64).product::<f64>() * x.powi((j - d) as i32))
                .sum()
        })
        .collect()
}

fn eval_scaled(coef: &[f64], xs: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * xs + c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Degree-(2m+1) polynomials are reproduced by the 1D Hermite interpolant.
    #[test]
    fn hermite_1d_exact(m in 1usize..=2, c in prop::collection::vec(-1.0f64..1.0, 6), xc in -1.0f64..1.0, dx in 0.01f64..0.5, xq in -0.5f64..0.5) {
        let c = &c[..2 * m + 2];
        let l = poly_derivs(c, xc - 0.5 * dx, m);
        let r = poly_derivs(c, xc + 0.5 * dx, m);
        let coef = hermite_interpolate_1d(&l, &r, m, dx);
        let want = poly_derivs(c, xc + xq * dx, 0)[0];
        let scale = c.iter().map(|v| v.abs()).sum::<f64>() * (1.0 + xc.abs() + dx).powi(2 * m as i32 + 1);
        prop_assert!((eval_scaled(&coef, xq) - want).abs() <= 1e-10 * scale);
    }

    /// Tensor degree-(2m+1) polynomials p(x)q(y) + r(x)s(y) in 2D.
    #[test]
    fn hermite_2d_exact(m in 1usize..=2, c in prop::collection::vec(-1.0f64..1.0, 24), ctr in prop::array::uniform2(-1.0f64..1.0), dx in 0.01f64..0.5, q in prop::array::uniform2(-0.5f64..0.5)) {
        let n = 2 * m + 2;
        let (p1, q1, p2, q2) = (&c[0..n], &c[6..6 + n], &c[12..12 + n], &c[18..18 + n]);
        let f = |x: f64, y: f64, a: usize, b: usize| {
            poly_derivs(p1, x, a)[a] * poly_derivs(q1, y, b)[b] + poly_derivs(p2, x, a)[a] * poly_derivs(q2, y, b)[b]
        };
        let corners: Vec<Vec<f64>> = [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)]
            .iter()
            .map(|&(sx, sy)| {
                let (x, y) = (ctr[0] + sx * dx, ctr[1] + sy * dx);
                let mut v = vec![0.0; (m + 1) * (m + 1)];
                for b in 0..=m {
                    for a in 0..=m {
                        v[a + (m + 1) * b] = f(x, y, a, b);
                    }
                }
                v
            })
            .collect();
        let coef = hermite_interpolate_2d([&corners[0], &corners[1], &corners[2], &corners[3]], m, dx, dx);
        let mut got = 0.0;
        for l in 0..n {
            for k in 0..n {
                got += coef[k + n * l] * q[0].powi(k as i32) * q[1].powi(l as i32);
            }
        }
        let want = f(ctr[0] + q[0] * dx, ctr[1] + q[1] * dx, 0, 0);
        let scale = 2.0 * 36.0 * (2.0f64).powi(2 * (2 * m as i32 + 1));
        prop_assert!((got - want).abs() <= 1e-10 * scale);
    }

    /// Gauss-Legendre with n points integrates degree 2n-1 exactly.
    #[test]
    fn gauss_legendre_exact(n in 1usize..=12, c in prop::collection::vec(-1.0f64..1.0, 24)) {
        let rule = gauss_legendre(n).unwrap();
        let deg = 2 * n - 1;
        let c = &c[..=deg];
        let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * eval_scaled(c, x)).sum();
        let want: f64 = c.iter().enumerate().map(|(j, a)| if j % 2 == 0 { 2.0 * a / (j + 1) as f64 } else { 0.0 }).sum();
        prop_assert!((got - want).abs() <= 1e-13 * (1.0 + c.iter().map(|v| v.abs()).sum::<f64>()));
    }

    /// Bessel Wronskian J_{n+1} Y_n - J_n Y_{n+1} = 2/(πx).
    #[test]
    fn bessel_wronskian(n in 0usize..30, x in 0.05f64..60.0) {
        let w = bessel_j(n + 1, x) * bessel_y(n, x).unwrap() - bessel_j(n, x) * bessel_y(n + 1, x).unwrap();
        let want = 2.0 / (PI * x);
        prop_assert!((w - want).abs() <= 1e-10 * want.max(1e-300) * (1.0 + n as f64), "n={} x={} w={} want={}", n, x, w, want);
    }

    /// Legendre recurrence values agree with the explicit low-order forms.
    #[test]
    fn legendre_low_orders(x in -1.0f64..1.0) {
        let (p, dp) = legendre_eval_all(3, x).unwrap();
        prop_assert!((p[2] - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
        prop_assert!((p[3] - 0.5 * (5.0 * x.powi(3) - 3.0 * x)).abs() < 1e-14);
        prop_assert!((dp[3] - 0.5 * (15.0 * x * x - 3.0)).abs() < 1e-13);
    }
}

#[test]
fn taylor_recursion_matches_closed_forms() {
    let vac = MaterialParams { mu: 1.0, eps: 1.0 };
    for m in [1, 2] {
        let sine = Sine1d { kappa: 7.0 };
        for &(x, t) in &[(0.13, 0.4), (0.71, 1.3), (0.5, 0.0)] {
            let e = recursion_error(&sine, Subdomain::Plus, vac, m, [x, 0.0], t, 0.05, 0.04);
            assert!(e < 1e-9, "sine m={m}: {e:e}");
        }
        let st = Standing2d { omega: 2.0 };
        let e = recursion_error(&st, Subdomain::Plus, vac, m, [0.31, 0.77], 0.2, 0.05, 0.03);
        assert!(e < 1e-9, "standing m={m}: {e:e}");
        let cav = Cavity::new(2, 3).unwrap();
        let e = recursion_error(&cav, Subdomain::Plus, vac, m, [0.3, -0.2], 0.35, 0.05, 0.03);
        assert!(e < 1e-9, "cavity m={m}: {e:e}");
        let inner = MaterialParams { mu: 2.0, eps: 2.25 };
        let mie = Mie::new(vac, inner, 0.6, 2.0 * PI, 40).unwrap();
        let e = recursion_error(&mie, Subdomain::Minus, inner, m, [0.2, 0.1], 0.3, 0.05, 0.03);
        assert!(e < 1e-9, "mie inside m={m}: {e:e}");
        let e = recursion_error(&mie, Subdomain::Plus, vac, m, [0.65, 0.2], 0.3, 0.05, 0.03);
        assert!(e < 1e-9, "mie outside m={m}: {e:e}");
    }
}

#[test]
fn closed_forms_solve_maxwell() {
    let vac = MaterialParams { mu: 1.0, eps: 1.0 };
    let inner = MaterialParams { mu: 2.0, eps: 2.25 };
    let mie = Mie::new(vac, inner, 0.6, 2.0 * PI, 40).unwrap();
    let cav = Cavity::new(2, 11).unwrap();
    for &(x, t) in &[([0.1, 0.2], 0.3), ([0.35, -0.4], 0.9), ([-0.7, 0.2], 0.1)] {
        let r = maxwell_residual(&cav, Subdomain::Plus, vac, x, t);
        assert!(r.iter().all(|v| v.abs() < 1e-9 * 100.0), "cavity {r:?}");
        let sub = if x[0].hypot(x[1]) < 0.6 { Subdomain::Minus } else { Subdomain::Plus };
        let mat = if sub == Subdomain::Minus { inner } else { vac };
        let r = maxwell_residual(&mie, sub, mat, x, t);
        assert!(r.iter().all(|v| v.abs() < 1e-9 * 10.0), "mie {r:?}");
    }
}
