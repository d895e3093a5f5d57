//! Closed-form Maxwell solutions and boundary drivers used as initial data,
//! boundary data and error oracles.
//!
//! Field layout is `[H, E, 0]` in 1D and `[Hx, Hy, Ez]` in 2D TMz.

pub mod bessel;

use crate::error::{Error, Result};
use crate::mesh::Subdomain;
pub use crate::material::MaterialParams;
use num_complex::Complex64;
use std::f64::consts::PI;

pub use bessel::{bessel_j, bessel_j_all, bessel_root, bessel_y, bessel_y_all, hankel2, hankel2_all};

pub type Fields = [f64; 3];

/// A space-time field with raw derivatives, evaluated with the formula of a
/// given subdomain (so it can be continued past an interface), plus the
/// tangential electric boundary data in separated form
/// g(x, t) = Σ_j S_j(x) T_j(t).
pub trait ExactSolution: Send + Sync {
    fn dims(&self) -> usize;

    /// ∂x^a ∂y^b ∂t^s of every field component, `order = [a, b, s]`.
    fn derivative(&self, sub: Subdomain, x: [f64; 2], t: f64, order: [usize; 3]) -> Fields;

    fn fields(&self, sub: Subdomain, x: [f64; 2], t: f64) -> Fields {
        self.derivative(sub, x, t, [0, 0, 0])
    }

    fn boundary_modes(&self) -> usize {
        1
    }

    fn boundary_spatial(&self, sub: Subdomain, x: [f64; 2], out: &mut [f64]);

    fn boundary_temporal(&self, t: f64, out: &mut [f64]);

    /// g(x, t) assembled from the separated modes.
    fn boundary_value(&self, sub: Subdomain, x: [f64; 2], t: f64) -> f64 {
        let n = self.boundary_modes();
        let mut s = vec![0.0; n];
        let mut tm = vec![0.0; n];
        self.boundary_spatial(sub, x, &mut s);
        self.boundary_temporal(t, &mut tm);
        s.iter().zip(&tm).map(|(a, b)| a * b).sum()
    }

    /// True when `derivative` is a genuine solution (not only a driver).
    fn has_reference(&self) -> bool {
        true
    }
}

/// d^a/dx^a sin(κx + φ).
fn dsin(kappa: f64, x: f64, a: usize) -> f64 {
    kappa.powi(a as i32) * (kappa * x + a as f64 * 0.5 * PI).sin()
}

fn dcos(kappa: f64, x: f64, a: usize) -> f64 {
    kappa.powi(a as i32) * (kappa * x + a as f64 * 0.5 * PI).cos()
}

/// 1D: H = sin(κx) sin(κt), E = cos(κx) cos(κt).
#[derive(Clone, Debug)]
pub struct Sine1d {
    pub kappa: f64,
}

impl Default for Sine1d {
    fn default() -> Self {
        Self { kappa: 250.0 }
    }
}

impl ExactSolution for Sine1d {
    fn dims(&self) -> usize {
        1
    }

    fn derivative(&self, _sub: Subdomain, x: [f64; 2], t: f64, order: [usize; 3]) -> Fields {
        let [a, b, s] = order;
        if b > 0 {
            return [0.0; 3];
        }
        let k = self.kappa;
        [dsin(k, x[0], a) * dsin(k, t, s), dcos(k, x[0], a) * dcos(k, t, s), 0.0]
    }

    fn boundary_spatial(&self, _sub: Subdomain, x: [f64; 2], out: &mut [f64]) {
        out[0] = (self.kappa * x[0]).cos();
    }

    fn boundary_temporal(&self, t: f64, out: &mut [f64]) {
        out[0] = (self.kappa * t).cos();
    }
}

/// 2D standing mode with spatial frequency ωπ and temporal frequency √2ωπ.
#[derive(Clone, Debug)]
pub struct Standing2d {
    pub omega: f64,
}

impl Default for Standing2d {
    fn default() -> Self {
        Self { omega: 20.0 }
    }
}

impl ExactSolution for Standing2d {
    fn dims(&self) -> usize {
        2
    }

    fn derivative(&self, _sub: Subdomain, x: [f64; 2], t: f64, order: [usize; 3]) -> Fields {
        let [a, b, s] = order;
        let k = self.omega * PI;
        let w = 2f64.sqrt() * k;
        let r = 1.0 / 2f64.sqrt();
        [
            -r * dsin(k, x[0], a) * dcos(k, x[1], b) * dsin(w, t, s),
            r * dcos(k, x[0], a) * dsin(k, x[1], b) * dsin(w, t, s),
            dsin(k, x[0], a) * dsin(k, x[1], b) * dcos(w, t, s),
        ]
    }

    fn boundary_spatial(&self, _sub: Subdomain, x: [f64; 2], out: &mut [f64]) {
        let k = self.omega * PI;
        out[0] = (k * x[0]).sin() * (k * x[1]).sin();
    }

    fn boundary_temporal(&self, t: f64, out: &mut [f64]) {
        out[0] = (2f64.sqrt() * self.omega * PI * t).cos();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Radial {
    J,
    H2,
}

/// Σ_{n=-N}^{N} c_n Z_n(kr) e^{inθ} with Z = J_n or H^{(2)}_n, centred at `center`.
///
/// Cartesian derivatives use D± = ∂x ± i∂y with D+ F_n = -k F_{n+1} and
/// D- F_n = k F_{n-1}.
#[derive(Clone, Debug)]
pub struct HarmonicSum {
    pub k: f64,
    pub kind: Radial,
    pub center: [f64; 2],
    pub coeffs: Vec<Complex64>,
}

impl HarmonicSum {
    pub fn order(&self) -> i64 {
        (self.coeffs.len() as i64 - 1) / 2
    }

    /// ∂x^a ∂y^b of the sum for each requested `(a, b)`.
    pub fn derivatives(&self, x: [f64; 2], orders: &[(usize, usize)]) -> Vec<Complex64> {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let r = dx.hypot(dy);
        let theta = if r == 0.0 { 0.0 } else { dy.atan2(dx) };
        let nmax = self.order();
        let dmax = orders.iter().map(|&(a, b)| a + b).max().unwrap_or(0) as i64;
        let top = (nmax + dmax) as usize;
        let z: Vec<Complex64> = match self.kind {
            Radial::J => bessel_j_all(top, self.k * r).into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            Radial::H2 => hankel2_all(top, self.k * r).unwrap_or_else(|_| vec![Complex64::new(f64::NAN, f64::NAN); top + 1]),
        };
        let zs = |nu: i64| -> Complex64 {
            let v = z[nu.unsigned_abs() as usize];
            if nu < 0 && nu % 2 != 0 {
                -v
            } else {
                v
            }
        };
        let span = nmax + dmax;
        let phase: Vec<Complex64> = (-span..=span).map(|nu| Complex64::from_polar(1.0, nu as f64 * theta)).collect();
        let shifted = |shift: i64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, c) in self.coeffs.iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let nu = idx as i64 - nmax + shift;
                acc += c * zs(nu) * phase[(nu + span) as usize];
            }
            acc
        };
        let mut cache: std::collections::HashMap<i64, Complex64> = Default::default();
        orders
            .iter()
            .map(|&(a, b)| {
                let mut total = Complex64::new(0.0, 0.0);
                for ((p, q), c) in ladder_expansion(a, b) {
                    let f = *cache.entry(p as i64 - q as i64).or_insert_with(|| shifted(p as i64 - q as i64));
                    total += c * (-self.k).powi(p as i32) * self.k.powi(q as i32) * f;
                }
                total
            })
            .collect()
    }
}

/// Coefficients of ((D+ + D-)/2)^a ((D+ - D-)/(2i))^b as a polynomial in D+, D-.
fn ladder_expansion(a: usize, b: usize) -> Vec<((usize, usize), Complex64)> {
    let n = a + b;
    let mut poly = vec![vec![Complex64::new(0.0, 0.0); n + 1]; n + 1];
    poly[0][0] = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let y_plus = Complex64::new(0.0, -0.5);
    let y_minus = Complex64::new(0.0, 0.5);
    for step in 0..n {
        let (cp, cm) = if step < a { (half, half) } else { (y_plus, y_minus) };
        let mut next = vec![vec![Complex64::new(0.0, 0.0); n + 1]; n + 1];
        for p in 0..=step {
            for q in 0..=step - p {
                let c = poly[p][q];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                next[p + 1][q] += c * cp;
                next[p][q + 1] += c * cm;
            }
        }
        poly = next;
    }
    let mut out = vec![];
    for (p, row) in poly.iter().enumerate() {
        for (q, c) in row.iter().enumerate() {
            if p + q == n && c.norm_sqr() > 0.0 {
                out.push(((p, q), *c));
            }
        }
    }
    out
}

/// d^s/dt^s of Re[A e^{iωt}] for complex amplitude A.
fn time_harmonic(amp: Complex64, omega: f64, t: f64, s: usize) -> f64 {
    (amp * Complex64::new(0.0, omega).powi(s as i32) * Complex64::from_polar(1.0, omega * t)).re
}

/// TMz fields of E_z = Re[F(x) e^{iωt}] in a medium (μ), with
/// Hx = Re[i ∂yF/(ωμ) e^{iωt}] and Hy = Re[-i ∂xF/(ωμ) e^{iωt}].
fn tmz_from_potential(sums: &[&HarmonicSum], mu: f64, omega: f64, x: [f64; 2], t: f64, order: [usize; 3]) -> Fields {
    let [a, b, s] = order;
    let mut d = [Complex64::new(0.0, 0.0); 3];
    for sum in sums {
        let v = sum.derivatives(x, &[(a, b + 1), (a + 1, b), (a, b)]);
        for i in 0..3 {
            d[i] += v[i];
        }
    }
    let i = Complex64::new(0.0, 1.0);
    [
        time_harmonic(i * d[0] / (omega * mu), omega, t, s),
        time_harmonic(-i * d[1] / (omega * mu), omega, t, s),
        time_harmonic(d[2], omega, t, s),
    ]
}

/// Circular PEC cavity mode E_z = J_i(αρ) cos(iφ) cos(αt) in a unit disk,
/// α the j-th root of J_i.
#[derive(Clone, Debug)]
pub struct Cavity {
    pub i: usize,
    pub j: usize,
    pub alpha: f64,
    pub center: [f64; 2],
    sum: HarmonicSum,
}

impl Cavity {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        let alpha = bessel_root(i, j)?;
        let ni = i as i64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (2 * ni + 1) as usize];
        coeffs[(2 * ni) as usize] += Complex64::new(0.5, 0.0);
        coeffs[0] += Complex64::new(0.5 * if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        // J_{-i}(x) e^{-iiφ} = (-1)^i J_i e^{-iiφ}; the factor above undoes the sign
        // so the real part is J_i cos(iφ).
        let sum = HarmonicSum { k: alpha, kind: Radial::J, center: [0.0, 0.0], coeffs };
        Ok(Self { i, j, alpha, center: [0.0, 0.0], sum })
    }

    /// Cylindrical components (H_ρ, H_φ, E_z) at polar point (ρ, φ).
    pub fn cylindrical(&self, rho: f64, phi: f64, t: f64) -> Fields {
        let f = self.fields(Subdomain::Plus, [rho * phi.cos(), rho * phi.sin()], t);
        [f[0] * phi.cos() + f[1] * phi.sin(), -f[0] * phi.sin() + f[1] * phi.cos(), f[2]]
    }
}

impl ExactSolution for Cavity {
    fn dims(&self) -> usize {
        2
    }

    fn derivative(&self, _sub: Subdomain, x: [f64; 2], t: f64, order: [usize; 3]) -> Fields {
        // Re F is real so Re[F e^{iαt}] fields reduce to the cos/sin forms.
        let [a, b, s] = order;
        let v = self.sum.derivatives(x, &[(a, b + 1), (a + 1, b), (a, b)]);
        let w = self.alpha;
        let c = dcos(w, t, s);
        let sn = dsin(w, t, s);
        [-v[0].re * sn / w, v[1].re * sn / w, v[2].re * c]
    }

    fn boundary_spatial(&self, _sub: Subdomain, x: [f64; 2], out: &mut [f64]) {
        out[0] = self.sum.derivatives(x, &[(0, 0)])[0].re;
    }

    fn boundary_temporal(&self, t: f64, out: &mut [f64]) {
        out[0] = (self.alpha * t).cos();
    }
}


/// Plane wave scattered by a circular dielectric cylinder of radius r0
/// (Ω⁻ inside), real part of the e^{iωt} series solution.
#[derive(Clone, Debug)]
pub struct Mie {
    pub plus: MaterialParams,
    pub minus: MaterialParams,
    pub r0: f64,
    pub omega: f64,
    pub n_trunc: usize,
    inside: HarmonicSum,
    incident: HarmonicSum,
    scattered: HarmonicSum,
}

impl Mie {
    pub fn new(plus: MaterialParams, minus: MaterialParams, r0: f64, omega: f64, n_trunc: usize) -> Result<Self> {
        if n_trunc < 1 {
            return Err(Error::Domain("N_trunc must be at least 1".into()));
        }
        let mut n_trunc = n_trunc;
        loop {
            let mie = Self::build(plus, minus, r0, omega, n_trunc)?;
            if mie.tail_ok() || n_trunc >= 400 {
                return Ok(mie);
            }
            n_trunc *= 2;
        }
    }

    fn build(plus: MaterialParams, minus: MaterialParams, r0: f64, omega: f64, n: usize) -> Result<Self> {
        let kp = omega * (plus.mu * plus.eps).sqrt();
        let km = omega * (minus.mu * minus.eps).sqrt();
        let jp = bessel_j_all(n + 1, kp * r0);
        let jm = bessel_j_all(n + 1, km * r0);
        let hp = hankel2_all(n + 1, kp * r0)?;
        let deriv_r = |v: &[f64], m: usize| if m == 0 { -v[1] } else { 0.5 * (v[m - 1] - v[m + 1]) };
        let deriv_c = |v: &[Complex64], m: usize| if m == 0 { -v[1] } else { 0.5 * (v[m - 1] - v[m + 1]) };
        let len = 2 * n + 1;
        let mut c_tot = vec![Complex64::new(0.0, 0.0); len];
        let mut c_scat = vec![Complex64::new(0.0, 0.0); len];
        let mut c_inc = vec![Complex64::new(0.0, 0.0); len];
        let i = Complex64::new(0.0, 1.0);
        for nn in -(n as i64)..=(n as i64) {
            let m = nn.unsigned_abs() as usize;
            let sign = if nn < 0 && m % 2 == 1 { -1.0 } else { 1.0 };
            let (jpn, jpd) = (sign * jp[m], sign * deriv_r(&jp, m));
            let (jmn, jmd) = (sign * jm[m], sign * deriv_r(&jm, m));
            let (hpn, hpd) = (sign * hp[m], sign * deriv_c(&hp, m));
            let ap = kp / plus.mu;
            let am = km / minus.mu;
            let denom = am * jmd * hpn - ap * hpd * jmn;
            if denom.norm() < 1e-300 {
                return Err(Error::Resonance(nn));
            }
            let phase = i.powi(-(nn as i32));
            let idx = (nn + n as i64) as usize;
            c_tot[idx] = phase * ap * (jpd * hpn - hpd * jpn) / denom;
            c_scat[idx] = phase * (ap * jpd * jmn - am * jmd * jpn) / denom;
            c_inc[idx] = phase;
        }
        Ok(Self {
            plus,
            minus,
            r0,
            omega,
            n_trunc: n,
            inside: HarmonicSum { k: km, kind: Radial::J, center: [0.0, 0.0], coeffs: c_tot },
            incident: HarmonicSum { k: kp, kind: Radial::J, center: [0.0, 0.0], coeffs: c_inc },
            scattered: HarmonicSum { k: kp, kind: Radial::H2, center: [0.0, 0.0], coeffs: c_scat },
        })
    }

    fn tail_ok(&self) -> bool {
        // Largest |term| at the outermost orders relative to the partial sum at
        // the cylinder radius and at the corners of [-1, 1]^2.
        let n = self.n_trunc;
        let mut ok = true;
        for &r in &[self.r0, 2f64.sqrt()] {
            let (sum, k) = if r <= self.r0 { (&self.inside, self.minus_k()) } else { (&self.incident, self.plus_k()) };
            let j = bessel_j_all(n, k * r);
            let tail = (sum.coeffs[2 * n].norm() + sum.coeffs[0].norm()) * j[n].abs();
            let total: f64 = sum.coeffs.iter().enumerate().map(|(idx, c)| c.norm() * j[(idx as i64 - n as i64).unsigned_abs() as usize].abs()).sum();
            ok &= tail <= 1e-12 * total.max(1e-300);
        }
        ok
    }

    pub fn plus_k(&self) -> f64 {
        self.omega * (self.plus.mu * self.plus.eps).sqrt()
    }

    pub fn minus_k(&self) -> f64 {
        self.omega * (self.minus.mu * self.minus.eps).sqrt()
    }

    pub fn c_tot(&self, n: i64) -> Complex64 {
        self.inside.coeffs[(n + self.n_trunc as i64) as usize]
    }

    pub fn c_scat(&self, n: i64) -> Complex64 {
        self.scattered.coeffs[(n + self.n_trunc as i64) as usize]
    }

    /// Real parts of (H_r, H_θ, E_z) at polar point (r, θ).
    pub fn cylindrical(&self, sub: Subdomain, r: f64, theta: f64, t: f64) -> Fields {
        let f = self.fields(sub, [r * theta.cos(), r * theta.sin()], t);
        [f[0] * theta.cos() + f[1] * theta.sin(), -f[0] * theta.sin() + f[1] * theta.cos(), f[2]]
    }

    fn spatial_e(&self, sub: Subdomain, x: [f64; 2]) -> Complex64 {
        match sub {
            Subdomain::Minus => self.inside.derivatives(x, &[(0, 0)])[0],
            Subdomain::Plus => self.incident.derivatives(x, &[(0, 0)])[0] + self.scattered.derivatives(x, &[(0, 0)])[0],
        }
    }
}

impl ExactSolution for Mie {
    fn dims(&self) -> usize {
        2
    }

    fn derivative(&self, sub: Subdomain, x: [f64; 2], t: f64, order: [usize; 3]) -> Fields {
        match sub {
            Subdomain::Minus => tmz_from_potential(&[&self.inside], self.minus.mu, self.omega, x, t, order),
            Subdomain::Plus => tmz_from_potential(&[&self.incident, &self.scattered], self.plus.mu, self.omega, x, t, order),
        }
    }

    fn boundary_modes(&self) -> usize {
        2
    }

    fn boundary_spatial(&self, sub: Subdomain, x: [f64; 2], out: &mut [f64]) {
        let e = self.spatial_e(sub, x);
        out[0] = e.re;
        out[1] = -e.im;
    }

    fn boundary_temporal(&self, t: f64, out: &mut [f64]) {
        out[0] = (self.omega * t).cos();
        out[1] = (self.omega * t).sin();
    }
}

/// Spatially uniform Gaussian pulse in time, E_z = exp(-(t-t0)^2/(2σ^2)) on
/// the boundary; trivial initial fields.
#[derive(Clone, Debug)]
pub struct BoundaryPulse {
    pub dims: usize,
    pub sigma: f64,
    pub t0: f64,
}

impl ExactSolution for BoundaryPulse {
    fn dims(&self) -> usize {
        self.dims
    }

    fn derivative(&self, _sub: Subdomain, _x: [f64; 2], _t: f64, _order: [usize; 3]) -> Fields {
        [0.0; 3]
    }

    fn boundary_spatial(&self, _sub: Subdomain, _x: [f64; 2], out: &mut [f64]) {
        out[0] = 1.0;
    }

    fn boundary_temporal(&self, t: f64, out: &mut [f64]) {
        let d = t - self.t0;
        out[0] = (-d * d / (2.0 * self.sigma * self.sigma)).exp();
    }

    fn has_reference(&self) -> bool {
        false
    }
}

/// Initial Gaussian E_z bump exp(-|x-c|^2/(2σ^2)), H = 0, homogeneous boundary
/// data. Only the initial state is meaningful.
#[derive(Clone, Debug)]
pub struct InitialPulse {
    pub dims: usize,
    pub sigma: f64,
    pub center: [f64; 2],
}

impl ExactSolution for InitialPulse {
    fn dims(&self) -> usize {
        self.dims
    }

    fn derivative(&self, _sub: Subdomain, x: [f64; 2], _t: f64, order: [usize; 3]) -> Fields {
        if order != [0, 0, 0] {
            return [0.0; 3];
        }
        let mut r2 = (x[0] - self.center[0]).powi(2);
        if self.dims == 2 {
            r2 += (x[1] - self.center[1]).powi(2);
        }
        let e = (-r2 / (2.0 * self.sigma * self.sigma)).exp();
        if self.dims == 1 {
            [0.0, e, 0.0]
        } else {
            [0.0, 0.0, e]
        }
    }

    fn boundary_modes(&self) -> usize {
        0
    }

    fn boundary_spatial(&self, _sub: Subdomain, _x: [f64; 2], _out: &mut [f64]) {}

    fn boundary_temporal(&self, _t: f64, _out: &mut [f64]) {}

    fn has_reference(&self) -> bool {
        false
    }
}

/// Identically zero fields and boundary data.
#[derive(Clone, Debug)]
pub struct Zero {
    pub dims: usize,
}

impl ExactSolution for Zero {
    fn dims(&self) -> usize {
        self.dims
    }

    fn derivative(&self, _sub: Subdomain, _x: [f64; 2], _t: f64, _order: [usize; 3]) -> Fields {
        [0.0; 3]
    }

    fn boundary_modes(&self) -> usize {
        0
    }

    fn boundary_spatial(&self, _sub: Subdomain, _x: [f64; 2], _out: &mut [f64]) {}

    fn boundary_temporal(&self, _t: f64, _out: &mut [f64]) {}
}

/// Maxwell residuals of an exact solution at (x, t) for medium (μ, ε):
/// 1D `[μH_t + E_x, εE_t + H_x]`, 2D `[μ∂tHx + ∂yEz, μ∂tHy - ∂xEz, ε∂tEz - ∂xHy + ∂yHx]`.
pub fn maxwell_residual(sol: &dyn ExactSolution, sub: Subdomain, medium: MaterialParams, x: [f64; 2], t: f64) -> Vec<f64> {
    let dt = sol.derivative(sub, x, t, [0, 0, 1]);
    let dx = sol.derivative(sub, x, t, [1, 0, 0]);
    if sol.dims() == 1 {
        vec![medium.mu * dt[0] + dx[1], medium.eps * dt[1] + dx[0]]
    } else {
        let dy = sol.derivative(sub, x, t, [0, 1, 0]);
        vec![
            medium.mu * dt[0] + dy[2],
            medium.mu * dt[1] - dx[2],
            medium.eps * dt[2] - dx[1] + dy[0],
        ]
    }
}
