//! Integer-order Bessel functions of the first and second kind and the
//! Hankel function of the second kind, for moderate arguments.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// J_0(x)..J_nmax(x) for x ≥ 0.
pub fn bessel_j_all(nmax: usize, x: f64) -> Vec<f64> {
    let x = x.abs();
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x <= 1.0 {
        let half = 0.5 * x;
        let q = -half * half;
        let mut lead = 1.0;
        for (n, slot) in out.iter_mut().enumerate() {
            if n > 0 {
                lead *= half / n as f64;
            }
            if lead == 0.0 {
                break;
            }
            let mut term = lead;
            let mut sum = lead;
            for k in 1..60 {
                term *= q / (k as f64 * (n + k) as f64);
                sum += term;
                if term.abs() <= 1e-17 * sum.abs() {
                    break;
                }
            }
            *slot = sum;
        }
        return out;
    }
    let top = (nmax as f64).max(x);
    let mut start = (top + 30.0 + 2.0 * (40.0 * top).sqrt()) as usize;
    start += start % 2;
    let mut jp1 = 0.0;
    let mut j = 1e-30;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if k - 1 <= nmax {
            out[k - 1] = j;
        }
        if k - 1 > 0 && (k - 1) % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += j;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

pub fn bessel_j(n: usize, x: f64) -> f64 {
    bessel_j_all(n, x)[n]
}

/// Y_0(x)..Y_nmax(x) for x > 0 from the Neumann series and upward recurrence.
pub fn bessel_y_all(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("Y_n is singular at x = {x}")));
    }
    let kmax = ((x + 30.0 + 2.0 * (40.0 * x.max(1.0)).sqrt()) as usize) / 2 + 2;
    let j = bessel_j_all(2 * kmax + 1, x);
    let ec = (0.5 * x).ln() + EULER_GAMMA;
    let mut su = 0.0;
    let mut sv = 0.0;
    for k in (1..=kmax).rev() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        su += sign * j[2 * k] / kf;
        sv += sign * (2.0 * kf + 1.0) / (kf * (kf + 1.0)) * j[2 * k + 1];
    }
    let y0 = 2.0 / PI * (ec * j[0] - 2.0 * su);
    let y1 = 2.0 / PI * ((ec - 1.0) * j[1] - j[0] / x - sv);
    let mut out = vec![0.0; nmax + 1];
    out[0] = y0;
    if nmax >= 1 {
        out[1] = y1;
    }
    for n in 1..nmax {
        out[n + 1] = 2.0 * n as f64 / x * out[n] - out[n - 1];
    }
    Ok(out)
}

pub fn bessel_y(n: usize, x: f64) -> Result<f64> {
    Ok(bessel_y_all(n, x)?[n])
}

/// H^{(2)}_n(x) = J_n(x) - i Y_n(x) for n = 0..nmax.
pub fn hankel2_all(nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("Hankel function is singular at x = {x}")));
    }
    let j = bessel_j_all(nmax, x);
    let y = bessel_y_all(nmax, x)?;
    Ok(j.into_iter().zip(y).map(|(a, b)| Complex64::new(a, -b)).collect())
}

pub fn hankel2(n: i64, x: f64) -> Result<Complex64> {
    let h = hankel2_all(n.unsigned_abs() as usize, x)?[n.unsigned_abs() as usize];
    Ok(if n < 0 && n % 2 != 0 { -h } else { h })
}

/// J_n for any integer order, using J_{-n} = (-1)^n J_n.
pub fn bessel_j_signed(n: i64, x: f64) -> f64 {
    let v = bessel_j(n.unsigned_abs() as usize, x);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// j-th positive root of J_i (j ≥ 1).
pub fn bessel_root(i: usize, j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("root index starts at 1".into()));
    }
    let f = |x: f64| bessel_j(i, x);
    let step = 0.05;
    let mut a = (i as f64).max(step);
    let mut fa = f(a);
    let mut found = 0;
    loop {
        let b = a + step;
        let fb = f(b);
        if fa != 0.0 && fa.signum() != fb.signum() {
            found += 1;
            if found == j {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = f(mid);
                    if fm == 0.0 {
                        return Ok(mid);
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                let (flo, fhi) = (f(lo).abs(), f(hi).abs());
                return Ok(if flo <= fhi { lo } else { hi });
            }
        }
        a = b;
        fa = fb;
        if a > 1e4 {
            return Err(Error::Numerical(format!("root {j} of J_{i} not bracketed")));
        }
    }
}
