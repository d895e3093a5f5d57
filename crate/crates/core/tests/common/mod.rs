#![allow(dead_code)]

pub mod fixtures;

use htcfm::exact::{ExactSolution, Fields, MaterialParams};
use htcfm::material::Materials;
use htcfm::mesh::Subdomain;

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Plane wave p(n·x - ct) with polynomial profile p. 1D: H = p, E = Z p.
/// 2D TMz: Ez = p, Hx = n_y p / Z, Hy = -n_x p / Z.
#[derive(Clone, Debug)]
pub struct PolyWave {
    pub dims: usize,
    pub coeffs: Vec<f64>,
    pub dir: [f64; 2],
    pub mat: MaterialParams,
}

impl PolyWave {
    fn s(&self, x: [f64; 2], t: f64) -> f64 {
        self.dir[0] * x[0] + self.dir[1] * x[1] - self.mat.c() * t
    }

    fn dp(&self, s: f64, d: usize) -> f64 {
        let mut v = 0.0;
        for (j, a) in self.coeffs.iter().enumerate().skip(d) {
            let fall: f64 = (0..d).map(|i| (j - i) as f64).product();
            v += a * fall * s.powi((j - d) as i32);
        }
        v
    }
}

impl ExactSolution for PolyWave {
    fn dims(&self) -> usize {
        self.dims
    }

    fn derivative(&self, _sub: Subdomain, x: [f64; 2], t: f64, order: [usize; 3]) -> Fields {
        let [a, b, s] = order;
        if self.dims == 1 && b > 0 {
            return [0.0; 3];
        }
        let f = self.dir[0].powi(a as i32) * self.dir[1].powi(b as i32) * (-self.mat.c()).powi(s as i32) * self.dp(self.s(x, t), a + b + s);
        let z = self.mat.z();
        if self.dims == 1 {
            [f, z * f, 0.0]
        } else {
            [self.dir[1] * f / z, -self.dir[0] * f / z, f]
        }
    }

    fn boundary_modes(&self) -> usize {
        self.coeffs.len()
    }

    fn boundary_spatial(&self, _sub: Subdomain, x: [f64; 2], out: &mut [f64]) {
        let u = self.dir[0] * x[0] + self.dir[1] * x[1];
        let scale = if self.dims == 1 { self.mat.z() } else { 1.0 };
        for (i, o) in out.iter_mut().enumerate() {
            *o = scale * self.coeffs.iter().enumerate().skip(i).map(|(j, a)| a * binom(j, i) * u.powi((j - i) as i32)).sum::<f64>();
        }
    }

    fn boundary_temporal(&self, t: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (-self.mat.c() * t).powi(i as i32);
        }
    }
}

/// Piecewise solution across the half-space interface x = x0 between two
/// media: E (Ez) = a t + e0, H (Hy) = -/+ ε_s a x + b_s with the tangential
/// magnetic field continuous at x0.
#[derive(Clone, Debug)]
pub struct LayeredStatic {
    pub dims: usize,
    pub mats: Materials,
    pub x0: f64,
    pub a: f64,
    pub e0: f64,
    pub b_plus: f64,
}

impl LayeredStatic {
    fn slope(&self, sub: Subdomain) -> f64 {
        let eps = match sub {
            Subdomain::Plus => self.mats.plus.eps,
            Subdomain::Minus => self.mats.minus.eps,
        };
        // 1D: εE_t + H_x = 0; 2D: εE_t - ∂xHy = 0
        if self.dims == 1 {
            -eps * self.a
        } else {
            eps * self.a
        }
    }

    fn offset(&self, sub: Subdomain) -> f64 {
        let at = self.slope(Subdomain::Plus) * self.x0 + self.b_plus;
        at - self.slope(sub) * self.x0
    }
}

impl ExactSolution for LayeredStatic {
    fn dims(&self) -> usize {
        self.dims
    }

    fn derivative(&self, sub: Subdomain, x: [f64; 2], t: f64, order: [usize; 3]) -> Fields {
        let e = match order {
            [0, 0, 0] => self.a * t + self.e0,
            [0, 0, 1] => self.a,
            _ => 0.0,
        };
        let h = match order {
            [0, 0, 0] => self.slope(sub) * x[0] + self.offset(sub),
            [1, 0, 0] => self.slope(sub),
            _ => 0.0,
        };
        if self.dims == 1 {
            [h, e, 0.0]
        } else {
            [0.0, h, e]
        }
    }

    fn boundary_modes(&self) -> usize {
        2
    }

    fn boundary_spatial(&self, _sub: Subdomain, _x: [f64; 2], out: &mut [f64]) {
        out[0] = self.e0;
        out[1] = self.a;
    }

    fn boundary_temporal(&self, t: f64, out: &mut [f64]) {
        out[0] = 1.0;
        out[1] = t;
    }
}

pub fn rel_close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}
