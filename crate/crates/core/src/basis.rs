//! Legendre polynomials, Gauss-Legendre rules and tensor space-time bases.

use crate::error::{Error, Result};

/// Legendre family P_0..P_k with the natural normalization P_n(1) = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Basis1D {
    pub max_degree: usize,
}

impl Basis1D {
    pub fn new(max_degree: usize) -> Self {
        Self { max_degree }
    }

    pub fn eval(&self, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        legendre_eval_all(self.max_degree, x)
    }
}

/// Values and first derivatives of P_0..P_k at `x`.
pub fn legendre_eval_all(k: usize, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&x) {
        return Err(Error::Domain(format!("legendre argument {x} outside [-1, 1]")));
    }
    let d = legendre_derivs(k, x, 1);
    Ok((d[0].clone(), d[1].clone()))
}

/// `out[d][n]` = d-th derivative of P_n at `x`, for d ≤ dmax and n ≤ k.
///
/// Uses P_{n+1}^{(d)} = P_{n-1}^{(d)} + (2n+1) P_n^{(d-1)}.
pub fn legendre_derivs(k: usize, x: f64, dmax: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; k + 1]; dmax + 1];
    legendre_derivs_into(k, x, dmax, &mut out);
    out
}

pub fn legendre_derivs_into(k: usize, x: f64, dmax: usize, out: &mut [Vec<f64>]) {
    let p = &mut out[0];
    p[0] = 1.0;
    if k >= 1 {
        p[1] = x;
    }
    for n in 1..k {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
    }
    for d in 1..=dmax {
        let (lo, hi) = out.split_at_mut(d);
        let prev = &lo[d - 1];
        let cur = &mut hi[0];
        cur[0] = 0.0;
        if k >= 1 {
            cur[1] = if d == 1 { 1.0 } else { 0.0 };
        }
        for n in 1..k {
            cur[n + 1] = cur[n - 1] + (2 * n + 1) as f64 * prev[n];
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        (
            self.nodes.iter().map(|&x| c + r * x).collect(),
            self.weights.iter().map(|&w| r * w).collect(),
        )
    }
}

/// n-point Gauss-Legendre rule on [-1, 1], nodes in increasing order.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Domain("gauss_legendre needs n >= 1".into()));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                dp = legendre_pair(n, x).1;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Tensor Legendre basis Q^k on an axis-aligned space-time box.
///
/// Variables are ordered (x, t) in 1D and (x, y, t) in 2D; member
/// multi-indices are flattened with x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeBasis {
    pub k: usize,
    pub dims: usize,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl SpaceTimeBasis {
    pub fn new(k: usize, dims: usize, lo: &[f64], hi: &[f64]) -> Result<Self> {
        if !(1..=2).contains(&dims) || lo.len() != dims + 1 || hi.len() != dims + 1 {
            return Err(Error::Domain("space-time basis needs 1 or 2 space dimensions".into()));
        }
        let mut b = Self { k, dims, lo: [0.0; 3], hi: [0.0; 3] };
        for v in 0..=dims {
            if hi[v] <= lo[v] {
                return Err(Error::Domain(format!("degenerate box in variable {v}")));
            }
            b.lo[v] = lo[v];
            b.hi[v] = hi[v];
        }
        Ok(b)
    }

    pub fn n_vars(&self) -> usize {
        self.dims + 1
    }

    pub fn member_count(&self) -> usize {
        (self.k + 1).pow(self.n_vars() as u32)
    }

    pub fn flat(&self, index: &[usize]) -> usize {
        index.iter().rev().fold(0, |acc, &i| acc * (self.k + 1) + i)
    }

    pub fn unflat(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for slot in idx.iter_mut().take(self.n_vars()) {
            *slot = flat % (self.k + 1);
            flat /= self.k + 1;
        }
        idx
    }

    /// Reference coordinate of physical coordinate `x` in variable `v`.
    pub fn to_ref(&self, v: usize, x: f64) -> f64 {
        (2.0 * x - self.lo[v] - self.hi[v]) / (self.hi[v] - self.lo[v])
    }

    /// d/dx of the reference coordinate in variable `v`.
    pub fn jacobian(&self, v: usize) -> f64 {
        2.0 / (self.hi[v] - self.lo[v])
    }

    pub fn eval_member(&self, index: &[usize], point: &[f64], deriv: &[usize]) -> Result<f64> {
        let nv = self.n_vars();
        if index.len() != nv || point.len() != nv || deriv.len() != nv {
            return Err(Error::Domain("multi-index length does not match basis".into()));
        }
        let mut val = 1.0;
        for v in 0..nv {
            if index[v] > self.k {
                return Err(Error::Domain(format!("member index {} exceeds degree {}", index[v], self.k)));
            }
            if deriv[v] > index[v] {
                return Ok(0.0);
            }
            let xi = self.to_ref(v, point[v]);
            let d = legendre_derivs(index[v], xi, deriv[v]);
            val *= d[deriv[v]][index[v]] * self.jacobian(v).powi(deriv[v] as i32);
        }
        Ok(val)
    }
}

/// Spec-style free function form of [`SpaceTimeBasis::eval_member`].
pub fn eval_space_time_member(
    basis: &SpaceTimeBasis,
    index: &[usize],
    point: &[f64],
    deriv: &[usize],
) -> Result<f64> {
    basis.eval_member(index, point, deriv)
}
