//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance -- 4 5` runs a subset. The process
//! exits non-zero on a failed criterion only when ACCEPTANCE_STRICT=1.

mod common;

use common::fixtures::{recursion_error, reproduction_cases, spd_sweep};
use htcfm::basis::gauss_legendre;
use htcfm::config::{preset, RunConfig};
use htcfm::diagnostics::{fit_rate, ConvergencePoint, ConvergenceReport};
use htcfm::exact::{bessel_j, bessel_root, bessel_y, Cavity, MaterialParams, Mie, Sine1d, Standing2d};
use htcfm::hermite::{hermite_interpolate_1d, hermite_interpolate_2d};
use htcfm::mesh::Subdomain;
use htcfm::runner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

type Check = Result<(bool, String), String>;

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn errors(rep: &ConvergenceReport) -> String {
    rep.points.iter().map(|p| format!("{:.3e}", p.errors.combined)).collect::<Vec<_>>().join(" ")
}

/// 2D runs use CFL 0.9 for m=1 and 0.5 for m=2.
fn with_m(mut cfg: RunConfig, m: usize) -> RunConfig {
    cfg.m = m;
    if cfg.dims() == 2 {
        cfg.cfl = if m == 1 { 0.9 } else { 0.5 };
    }
    cfg
}

fn c1_sine() -> Check {
    let mut ok = true;
    let mut msg = vec![];
    for (m, target, tol) in [(1, 3.0, 0.4), (2, 5.0, 0.5)] {
        let rep = runner::converge(&with_m(preset("sine1d").map_err(|e| e.to_string())?, m)).map_err(|e| e.to_string())?;
        let rate = rep.tail_rate(3).map_err(|e| e.to_string())?;
        ok &= within(rate, target, tol);
        msg.push(format!("m={m} rate {rate:.2} (want {target}±{tol}) errors [{}]", errors(&rep)));
    }
    Ok((ok, msg.join("; ")))
}

fn rates_2d(name: &str) -> Result<Vec<(usize, ConvergenceReport, Vec<runner::RunOutcome>)>, String> {
    let mut out = vec![];
    for m in [1, 2] {
        let cfg = with_m(preset(name).map_err(|e| e.to_string())?, m);
        let mut runs = vec![];
        let mut points = vec![];
        for &n in &cfg.n {
            let r = runner::run(&cfg, n).map_err(|e| e.to_string())?;
            points.push(ConvergencePoint { h: r.solver.mesh().h, errors: r.errors.clone().ok_or("no reference")? });
            runs.push(r);
        }
        out.push((m, ConvergenceReport::from_points(points).map_err(|e| e.to_string())?, runs));
    }
    Ok(out)
}

fn rate_lines(res: &[(usize, ConvergenceReport, Vec<runner::RunOutcome>)]) -> Result<(bool, Vec<String>), String> {
    let mut ok = true;
    let mut msg = vec![];
    for (m, rep, _) in res {
        let rate = rep.tail_rate(3).map_err(|e| e.to_string())?;
        let want = if *m == 1 { 2.6 } else { 4.3 };
        ok &= rate >= want;
        msg.push(format!("m={m} rate {rate:.2} (want ≥ {want}) errors [{}]", errors(rep)));
    }
    Ok((ok, msg))
}

fn c2_cavity() -> Check {
    let res = rates_2d("cavity")?;
    let (ok, msg) = rate_lines(&res)?;
    Ok((ok, msg.join("; ")))
}

fn c3_mie() -> Check {
    let res = rates_2d("mie")?;
    let (mut ok, mut msg) = rate_lines(&res)?;
    let cfg = preset("mie").map_err(|e| e.to_string())?;
    let exact = cfg.driver().map_err(|e| e.to_string())?;
    let (_, _, runs) = res.iter().find(|(m, _, _)| *m == 1).ok_or("no m=1 runs")?;
    for r in runs {
        let h = r.solver.mesh().h;
        let j = runner::circle_jump(&r.solver, exact.as_ref(), [0.0, 0.0], 0.6, 10, 0).map_err(|e| e.to_string())?;
        let bound = 5.0 * h * h;
        ok &= j.rel_error <= bound;
        msg.push(format!("Hx jump h=1/{:.0}: rel err {:.2e} (bound {:.2e})", 1.0 / h, j.rel_error, bound));
    }
    Ok((ok, msg.join("; ")))
}

fn c4_spectrum() -> Check {
    let cfg = preset("spectrum1d").map_err(|e| e.to_string())?;
    let rows = runner::spectrum_sweep(&cfg).map_err(|e| e.to_string())?;
    let mut ok = rows.len() == cfg.n.len() * 4;
    let mut worst = f64::NEG_INFINITY;
    for r in &rows {
        let n = (cfg.geometry.length() / r.h).round() as usize;
        ok &= r.dimension == 2 * (r.m + 1) * (n + 1);
        ok &= r.rho <= 1.0 + 2e-8;
        worst = worst.max(r.rho - 1.0);
    }
    let dims: Vec<String> = rows.iter().map(|r| r.dimension.to_string()).collect();
    Ok((ok, format!("{} combinations, max rho-1 {worst:.2e}, dimensions [{}]", rows.len(), dims.join(" "))))
}

fn c5_stability() -> Check {
    let mut ok = true;
    let mut msg = vec![];
    for name in ["stability1d", "stability2d"] {
        for m in [1, 2] {
            let cfg = with_m(preset(name).map_err(|e| e.to_string())?, m);
            let runs = runner::stability(&cfg).map_err(|e| e.to_string())?;
            for r in runs {
                let n = &r.trace.norms;
                let peak = n[10..].iter().cloned().fold(0.0f64, f64::max);
                let growth = peak / n[10];
                ok &= growth <= 100.0 && n.len() == cfg.steps.unwrap() + 1;
                let rm = &r.trace.running_max;
                let half = rm.len() / 2;
                let per_k = (rm[rm.len() - 1] / rm[half]).powf(1000.0 / (rm.len() - 1 - half) as f64);
                msg.push(format!("{name} m={m} h=1/{:.0}: peak/step10 {growth:.2}, late growth x{per_k:.2}/1000 steps", 1.0 / r.h));
            }
        }
    }
    Ok((ok, msg.join("; ")))
}

fn c6_conditioning() -> Check {
    let mut ok = true;
    let mut msg = vec![];
    for (name, slope_want) in [("stability1d", -1.0), ("stability2d", -0.5)] {
        let mut cfg = preset(name).map_err(|e| e.to_string())?;
        cfg.n = vec![25, 50, 100];
        cfg.c_h = 0.1;
        cfg.c_h_list = vec![0.5, 0.1, 0.02];
        let rows = runner::cond_sweep(&cfg).map_err(|e| e.to_string())?;
        let at = |c: f64| -> Vec<f64> { rows.iter().filter(|r| r.c_h == c).map(|r| r.max_cond).collect() };
        let fixed = at(0.1);
        let spread = fixed.iter().cloned().fold(0.0f64, f64::max) / fixed.iter().cloned().fold(f64::INFINITY, f64::min);
        ok &= spread < 10.0;
        let mut slopes = vec![];
        for &n in &cfg.n {
            let h = cfg.geometry.length() / n as f64;
            let (cs, ks): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| (r.h - h).abs() < 1e-12).map(|r| (r.c_h, r.max_cond)).unzip();
            let slope = fit_rate(&cs, &ks).map_err(|e| e.to_string())?.1;
            ok &= within(slope, slope_want, 0.3);
            slopes.push(format!("{slope:.2}"));
        }
        msg.push(format!(
            "{}D: kappa at c_H=0.1 [{}] spread {spread:.2}x; slopes vs c_H [{}] (want {slope_want}±0.3)",
            cfg.dims(),
            fixed.iter().map(|k| format!("{k:.2e}")).collect::<Vec<_>>().join(" "),
            slopes.join(" ")
        ));
    }
    Ok((ok, msg.join("; ")))
}

fn poly_derivs(c: &[f64], x: f64, d: usize) -> f64 {
    c.iter().enumerate().skip(d).map(|(j, a)| a * (0..d).map(|i| (j - i) as f64).product::<f64>() * x.powi((j - d) as i32)).sum()
}

/// Σ|c_j| |x|^j, the scale against which polynomial cancellation is measured.
fn magnitude(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x.abs() + a.abs())
}

fn c7_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut msg = vec![];
    let mut ok = true;

    // (a) Hermite exactness, 200 trials per (dims, m)
    let mut worst = 0.0f64;
    for m in [1, 2] {
        let n = 2 * m + 2;
        for _ in 0..200 {
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (xc, yc, dx) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.01..0.5));
            let (sx, sy): (f64, f64) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let l: Vec<f64> = (0..=m).map(|d| poly_derivs(&p, xc - 0.5 * dx, d)).collect();
            let r: Vec<f64> = (0..=m).map(|d| poly_derivs(&p, xc + 0.5 * dx, d)).collect();
            let c1 = hermite_interpolate_1d(&l, &r, m, dx);
            let got = c1.iter().rev().fold(0.0, |acc, c| acc * sx + c);
            worst = worst.max((got - poly_derivs(&p, xc + sx * dx, 0)).abs() / magnitude(&p, xc + sx * dx));
            let corners: Vec<Vec<f64>> = [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)]
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (xc + a * dx, yc + b * dx);
                    let mut v = vec![0.0; (m + 1) * (m + 1)];
                    for j in 0..=m {
                        for i in 0..=m {
                            v[i + (m + 1) * j] = poly_derivs(&p, x, i) * poly_derivs(&q, y, j);
                        }
                    }
                    v
                })
                .collect();
            let c2 = hermite_interpolate_2d([&corners[0], &corners[1], &corners[2], &corners[3]], m, dx, dx);
            let mut got = 0.0;
            for j in 0..n {
                for i in 0..n {
                    got += c2[i + n * j] * sx.powi(i as i32) * sy.powi(j as i32);
                }
            }
            let want = poly_derivs(&p, xc + sx * dx, 0) * poly_derivs(&q, yc + sy * dx, 0);
            worst = worst.max((got - want).abs() / (magnitude(&p, xc + sx * dx) * magnitude(&q, yc + sy * dx)));
        }
    }
    ok &= worst <= 1e-10;
    msg.push(format!("(a) hermite worst {worst:.1e}"));

    // (b) Taylor recursion against closed forms
    let vac = MaterialParams { mu: 1.0, eps: 1.0 };
    let inner = MaterialParams { mu: 2.0, eps: 2.25 };
    let mie = Mie::new(vac, inner, 0.6, 2.0 * PI, 40).map_err(|e| e.to_string())?;
    let cav = Cavity::new(2, 11).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for m in [1, 2] {
        worst = worst.max(recursion_error(&Sine1d { kappa: 7.0 }, Subdomain::Plus, vac, m, [0.13, 0.0], 0.4, 0.05, 0.04));
        worst = worst.max(recursion_error(&Standing2d { omega: 2.0 }, Subdomain::Plus, vac, m, [0.31, 0.77], 0.2, 0.05, 0.03));
        worst = worst.max(recursion_error(&cav, Subdomain::Plus, vac, m, [0.3, -0.2], 0.35, 0.02, 0.01));
        worst = worst.max(recursion_error(&mie, Subdomain::Minus, inner, m, [0.2, 0.1], 0.3, 0.05, 0.03));
        worst = worst.max(recursion_error(&mie, Subdomain::Plus, vac, m, [0.65, 0.2], 0.3, 0.05, 0.03));
    }
    ok &= worst <= 1e-9;
    msg.push(format!("(b) recursion worst {worst:.1e}"));

    // (c) SPD
    match spd_sweep(&mut rng) {
        Ok(n) => msg.push(format!("(c) {n} systems SPD")),
        Err(e) => {
            ok = false;
            msg.push(format!("(c) {e}"));
        }
    }

    // (d) manufactured-solution reproduction
    let cases = reproduction_cases();
    let (label, worst) = cases.iter().cloned().fold((String::new(), 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    ok &= worst <= 1e-9;
    msg.push(format!("(d) {} cases, worst {worst:.1e} ({label})", cases.len()));

    // (e) quadrature and special functions
    let mut worst = 0.0f64;
    for n in 1..=12 {
        let rule = gauss_legendre(n).map_err(|e| e.to_string())?;
        let deg = 2 * n - 1;
        let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * x.powi(deg as i32 - 1)).sum();
        worst = worst.max((got - 2.0 / deg as f64).abs());
    }
    for _ in 0..200 {
        let n = rng.random_range(0..30);
        let x: f64 = rng.random_range(0.05..60.0);
        let w = bessel_j(n + 1, x) * bessel_y(n, x).map_err(|e| e.to_string())? - bessel_j(n, x) * bessel_y(n + 1, x).map_err(|e| e.to_string())?;
        worst = worst.max((w * PI * x / 2.0 - 1.0).abs() / (1.0 + n as f64));
    }
    for (i, j) in [(0, 1), (2, 11), (5, 3)] {
        let z = bessel_root(i, j).map_err(|e| e.to_string())?;
        worst = worst.max(bessel_j(i, z).abs());
    }
    ok &= worst <= 1e-10;
    msg.push(format!("(e) quadrature/bessel worst {worst:.1e}"));
    Ok((ok, msg.join("; ")))
}

fn c8_self_convergence() -> Check {
    let mut ok = true;
    let mut msg = vec![];
    for m in [1, 2] {
        let cfg = with_m(preset("pulse").map_err(|e| e.to_string())?, m);
        let (rep, _) = runner::self_converge(&cfg).map_err(|e| e.to_string())?;
        let rate = rep.tail_rate(3).map_err(|e| e.to_string())?;
        let want = (2 * m + 1) as f64;
        ok &= within(rate, want, 0.6);
        msg.push(format!("m={m} rate {rate:.2} (want {want}±0.6) errors [{}]", errors(&rep)));
    }
    Ok((ok, msg.join("; ")))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Check); 8] = [
        (1, "1D convergence", c1_sine),
        (2, "cavity convergence", c2_cavity),
        (3, "Mie interface convergence and H jump", c3_mie),
        (4, "one-step spectrum", c4_spectrum),
        (5, "long-run boundedness", c5_stability),
        (6, "conditioning", c6_conditioning),
        (7, "property suites", c7_properties),
        (8, "pulse self-convergence", c8_self_convergence),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).filter_map(|a| a.parse().ok()).collect();
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut passed, mut total) = (0, 0);
    for (id, name, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        total += 1;
        let t0 = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        passed += pass as usize;
        println!("criterion {id} {} {name}: {detail} [{:.0}s]", if pass { "PASS" } else { "FAIL" }, t0.elapsed().as_secs_f64());
    }
    println!("acceptance: {passed}/{total} criteria passed");
    if strict && passed < total {
        std::process::exit(1);
    }
}
