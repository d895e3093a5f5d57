//! Node data, initial projection, Hermite interpolation, Taylor recursion and
//! the staggered half-step update.

use crate::basis::{gauss_legendre, legendre_derivs};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::linalg::{lu_factor, Mat};
use crate::material::{MaterialParams, Materials};
use crate::mesh::{NodeClassification, NodeId, NodeKind, Parity, StaggeredMesh, Subdomain};

pub fn n_fields(dims: usize) -> usize {
    if dims == 1 {
        2
    } else {
        3
    }
}

pub fn n_derivs(dims: usize, m: usize) -> usize {
    (m + 1).pow(dims as u32)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Raw derivatives ∂x^a ∂y^b f through order m per coordinate, index a + b(m+1).
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeTensor {
    pub dims: usize,
    pub m: usize,
    pub data: Vec<f64>,
}

impl DerivativeTensor {
    pub fn zeros(dims: usize, m: usize) -> Self {
        Self { dims, m, data: vec![0.0; n_derivs(dims, m)] }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a + b * (self.m + 1)]
    }
}

/// Degrees of freedom of one mesh parity at one time level, stored
/// `[node][field][derivative]`. Inactive nodes hold zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub dims: usize,
    pub m: usize,
    pub parity: Parity,
    pub time: f64,
    pub nodes: usize,
    pub data: Vec<f64>,
}

impl FieldState {
    pub(crate) fn empty() -> Self {
        Self { dims: 1, m: 0, parity: Parity::Primal, time: 0.0, nodes: 0, data: vec![] }
    }

    pub fn zeros(mesh: &StaggeredMesh, m: usize, parity: Parity, time: f64) -> Self {
        let nodes = mesh.node_count(parity);
        let block = n_fields(mesh.dims) * n_derivs(mesh.dims, m);
        Self { dims: mesh.dims, m, parity, time, nodes, data: vec![0.0; nodes * block] }
    }

    pub fn n_fields(&self) -> usize {
        n_fields(self.dims)
    }

    pub fn n_derivs(&self) -> usize {
        n_derivs(self.dims, self.m)
    }

    pub fn block(&self) -> usize {
        self.n_fields() * self.n_derivs()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let b = self.block();
        &self.data[i * b..(i + 1) * b]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        let b = self.block();
        &mut self.data[i * b..(i + 1) * b]
    }

    pub fn tensor(&self, node: usize, field: usize) -> DerivativeTensor {
        let nd = self.n_derivs();
        let s = &self.node(node)[field * nd..(field + 1) * nd];
        DerivativeTensor { dims: self.dims, m: self.m, data: s.to_vec() }
    }

    pub fn value(&self, node: usize, field: usize) -> f64 {
        self.node(node)[field * self.n_derivs()]
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Max-norm over node values only (derivative entries skipped).
    pub fn max_value_norm(&self) -> f64 {
        let nd = self.n_derivs();
        self.data.iter().step_by(nd).fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Projects `f` (all field components and the subdomain of each node) onto
/// degree-(2m+2) tensor Legendre polynomials on each node's box and stores
/// the raw derivatives of the projection at the node.
pub fn project_with(
    mesh: &StaggeredMesh,
    class: &NodeClassification,
    m: usize,
    parity: Parity,
    time: f64,
    f: impl Fn(Subdomain, [f64; 2]) -> [f64; 3],
) -> Result<FieldState> {
    let dims = mesh.dims;
    let p = 2 * m + 2;
    let rule = gauss_legendre(2 * m + 5)?;
    let ng = rule.len();
    // P_i^{(a)}(0) and P_i at the Gauss points
    let at0 = legendre_derivs(p, 0.0, m);
    let vals: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| legendre_derivs(p, x, 0).remove(0)).collect();
    let nf = n_fields(dims);
    let nd = n_derivs(dims, m);
    let mut st = FieldState::zeros(mesh, m, parity, time);
    let h = mesh.h;
    let ny = if dims == 2 { ng } else { 1 };
    let py = if dims == 2 { p + 1 } else { 1 };
    let my = if dims == 2 { m + 1 } else { 1 };
    let mut samples = vec![[0.0; 3]; ng * ny];
    let mut coef = vec![0.0; (p + 1) * py];
    for (node, kind) in class.kinds(parity).iter().enumerate() {
        let Some(sub) = kind.subdomain() else { continue };
        let c = mesh.coord(parity, node);
        for gy in 0..ny {
            for gx in 0..ng {
                let mut x = [c[0] + 0.5 * h * rule.nodes[gx], 0.0];
                if dims == 2 {
                    x[1] = c[1] + 0.5 * h * rule.nodes[gy];
                }
                samples[gx + ng * gy] = f(sub, x);
            }
        }
        let out = st.node_mut(node);
        for fi in 0..nf {
            for j in 0..py {
                for i in 0..=p {
                    let mut s = 0.0;
                    for gy in 0..ny {
                        let wy = if dims == 2 { rule.weights[gy] * vals[gy][j] } else { 1.0 };
                        for gx in 0..ng {
                            s += rule.weights[gx] * vals[gx][i] * wy * samples[gx + ng * gy][fi];
                        }
                    }
                    let norm = (2 * i + 1) as f64 / 2.0 * if dims == 2 { (2 * j + 1) as f64 / 2.0 } else { 1.0 };
                    coef[i + (p + 1) * j] = norm * s;
                }
            }
            for b in 0..my {
                for a in 0..=m {
                    let mut s = 0.0;
                    for j in 0..py {
                        let dy = if dims == 2 { at0[b][j] } else { 1.0 };
                        for i in 0..=p {
                            s += coef[i + (p + 1) * j] * at0[a][i] * dy;
                        }
                    }
                    out[fi * nd + a + (m + 1) * b] = s * (2.0 / h).powi((a + b) as i32);
                }
            }
        }
    }
    Ok(st)
}

pub fn project_initial_data(
    exact: &dyn ExactSolution,
    mesh: &StaggeredMesh,
    class: &NodeClassification,
    m: usize,
    time: f64,
) -> Result<FieldState> {
    project_with(mesh, class, m, Parity::Primal, time, |s, x| exact.fields(s, x, time))
}

/// Inverse confluent Vandermonde matrix on X = ±1/2: maps scaled endpoint data
/// [d⁻_0..d⁻_m, d⁺_0..d⁺_m] (d_j = f^{(j)}Δx^j/j!) to the 2m+2 coefficients of
/// the interpolant in powers of X = (x - x_c)/Δx.
pub fn hermite_matrix(m: usize) -> Mat {
    let n = 2 * m + 2;
    let binom = |k: usize, j: usize| factorial(k) / (factorial(j) * factorial(k - j));
    let v = Mat::from_fn(n, n, |r, k| {
        let (side, j) = (r / (m + 1), r % (m + 1));
        let x: f64 = if side == 0 { -0.5 } else { 0.5 };
        if k < j {
            0.0
        } else {
            binom(k, j) * x.powi((k - j) as i32)
        }
    });
    lu_factor(&v).expect("confluent Vandermonde is nonsingular").inverse()
}

pub fn hermite_interpolate_1d(left: &[f64], right: &[f64], m: usize, dx: f64) -> Vec<f64> {
    let a = hermite_matrix(m);
    let mut d = vec![0.0; 2 * m + 2];
    for j in 0..=m {
        let s = dx.powi(j as i32) / factorial(j);
        d[j] = left[j] * s;
        d[m + 1 + j] = right[j] * s;
    }
    a.matvec(&d)
}

/// Two-stage sweep: I_y along the two vertical edges for every x-derivative
/// order, then I_x for every y-coefficient. Corners ordered (-,-), (+,-),
/// (-,+), (+,+); output index k + (2m+2)l.
pub fn hermite_interpolate_2d(corners: [&[f64]; 4], m: usize, dx: f64, dy: f64) -> Vec<f64> {
    let a = hermite_matrix(m);
    let n = 2 * m + 2;
    let mp = m + 1;
    // edge[side][a][l]: y-coefficients of the a-th scaled x-derivative on edge `side`
    let mut edge = vec![vec![vec![0.0; n]; mp]; 2];
    for (side, e) in edge.iter_mut().enumerate() {
        for (ax, el) in e.iter_mut().enumerate() {
            let mut d = vec![0.0; n];
            for b in 0..mp {
                let sx = dx.powi(ax as i32) / factorial(ax);
                let sy = dy.powi(b as i32) / factorial(b);
                d[b] = corners[side][ax + mp * b] * sx * sy;
                d[mp + b] = corners[side + 2][ax + mp * b] * sx * sy;
            }
            *el = a.matvec(&d);
        }
    }
    let mut out = vec![0.0; n * n];
    for l in 0..n {
        let mut d = vec![0.0; n];
        for ax in 0..mp {
            d[ax] = edge[0][ax][l];
            d[mp + ax] = edge[1][ax][l];
        }
        let c = a.matvec(&d);
        for k in 0..n {
            out[k + n * l] = c[k];
        }
    }
    out
}

/// Space-time expansion of one cell in scaled monomials
/// X^k Y^l T^s with X = (x - x_c)/Δx, Y = (y - y_c)/Δx, T = (t - t_launch)/Δt.
#[derive(Clone, Debug, PartialEq)]
pub struct HTPolynomial {
    pub dims: usize,
    pub m: usize,
    pub q: usize,
    pub center: [f64; 2],
    pub launch: f64,
    pub dx: f64,
    pub dt: f64,
    /// `[field][s][l][k]`, k fastest.
    pub coeffs: Vec<f64>,
}

pub fn recursion_depth(dims: usize, m: usize) -> usize {
    dims * (2 * m + 1)
}

fn coeff_len(dims: usize, m: usize) -> usize {
    let n = 2 * m + 2;
    let ny = if dims == 2 { n } else { 1 };
    n_fields(dims) * (recursion_depth(dims, m) + 1) * n * ny
}

impl HTPolynomial {
    fn stride(&self) -> (usize, usize, usize) {
        let n = 2 * self.m + 2;
        let ny = if self.dims == 2 { n } else { 1 };
        (n, n * ny, n * ny * (self.q + 1))
    }

    pub fn coeff(&self, f: usize, k: usize, l: usize, s: usize) -> f64 {
        let (n, sl, sf) = self.stride();
        self.coeffs[f * sf + s * sl + l * n + k]
    }

    /// Raw derivative ∂x^a ∂y^b ∂t^σ of field `f` at (x, t).
    pub fn eval(&self, f: usize, x: [f64; 2], t: f64, order: [usize; 3]) -> f64 {
        let (n, sl, sf) = self.stride();
        let ny = if self.dims == 2 { n } else { 1 };
        let xs = (x[0] - self.center[0]) / self.dx;
        let ys = if self.dims == 2 { (x[1] - self.center[1]) / self.dx } else { 0.0 };
        let ts = (t - self.launch) / self.dt;
        let px = falling_powers(xs, n, order[0]);
        let py = falling_powers(ys, ny, order[1]);
        let pt = falling_powers(ts, self.q + 1, order[2]);
        let mut sum = 0.0;
        for (s, &wt) in pt.iter().enumerate() {
            if wt == 0.0 {
                continue;
            }
            for (l, &wy) in py.iter().enumerate() {
                if wy == 0.0 {
                    continue;
                }
                let row = &self.coeffs[f * sf + s * sl + l * n..f * sf + s * sl + l * n + n];
                let mut acc = 0.0;
                for (c, w) in row.iter().zip(&px) {
                    acc += c * w;
                }
                sum += acc * wy * wt;
            }
        }
        let dy = if self.dims == 2 { self.dx.powi(order[1] as i32) } else { 1.0 };
        sum / (self.dx.powi(order[0] as i32) * dy * self.dt.powi(order[2] as i32))
    }
}

/// d^a/dX^a X^k for k < n.
fn falling_powers(x: f64, n: usize, a: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k < a {
                0.0
            } else {
                let f: f64 = ((k - a + 1)..=k).map(|v| v as f64).product();
                f * x.powi((k - a) as i32)
            }
        })
        .collect()
}

pub fn evaluate_ht(poly: &HTPolynomial, field: usize, x: [f64; 2], t: f64, order: [usize; 3]) -> f64 {
    poly.eval(field, x, t, order)
}

/// Fills s = 1..q from the s = 0 layer, in place, for `[field][s][l][k]` storage.
pub fn taylor_recursion(dims: usize, m: usize, dx: f64, dt: f64, mat: MaterialParams, c: &mut [f64]) -> Result<()> {
    let n = 2 * m + 2;
    let q = recursion_depth(dims, m);
    if c.len() != coeff_len(dims, m) {
        return Err(Error::Contract(format!("coefficient array of length {} (want {})", c.len(), coeff_len(dims, m))));
    }
    let (mu, eps) = (mat.mu, mat.eps);
    if dims == 1 {
        let sf = n * (q + 1);
        for s in 1..=q {
            let sf64 = s as f64;
            for k in 0..n - 1 {
                let r = (k + 1) as f64 * dt / (sf64 * dx);
                c[s * n + k] = -r / mu * c[sf + (s - 1) * n + k + 1];
                c[sf + s * n + k] = -r / eps * c[(s - 1) * n + k + 1];
            }
        }
    } else {
        let sl = n * n;
        let sf = sl * (q + 1);
        let (hx, hy, ez) = (0, sf, 2 * sf);
        for s in 1..=q {
            let sf64 = s as f64;
            let (prev, cur) = ((s - 1) * sl, s * sl);
            for l in 0..n {
                for k in 0..n {
                    let at = |kk: usize, ll: usize| ll * n + kk;
                    let e_l = if l + 1 < n { c[ez + prev + at(k, l + 1)] } else { 0.0 };
                    let e_k = if k + 1 < n { c[ez + prev + at(k + 1, l)] } else { 0.0 };
                    let hy_k = if k + 1 < n { c[hy + prev + at(k + 1, l)] } else { 0.0 };
                    let hx_l = if l + 1 < n { c[hx + prev + at(k, l + 1)] } else { 0.0 };
                    let i = cur + at(k, l);
                    c[hx + i] = -((l + 1) as f64) * dt / (mu * sf64 * dx) * e_l;
                    c[hy + i] = (k + 1) as f64 * dt / (mu * sf64 * dx) * e_k;
                    c[ez + i] = dt / (eps * sf64) * ((k + 1) as f64 / dx * hy_k - (l + 1) as f64 / dx * hx_l);
                }
            }
        }
    }
    Ok(())
}

/// 1D recursion from s = 0 coefficients of H and E (length 2m+2 each).
pub fn taylor_recursion_1d(h0: &[f64], e0: &[f64], m: usize, dx: f64, dt: f64, mat: MaterialParams) -> Result<Vec<f64>> {
    let n = 2 * m + 2;
    if h0.len() != n || e0.len() != n {
        return Err(Error::Contract("s = 0 layer must hold 2m+2 coefficients per field".into()));
    }
    let mut c = vec![0.0; coeff_len(1, m)];
    let sf = n * (recursion_depth(1, m) + 1);
    c[..n].copy_from_slice(h0);
    c[sf..sf + n].copy_from_slice(e0);
    taylor_recursion(1, m, dx, dt, mat, &mut c)?;
    Ok(c)
}

/// 2D recursion from s = 0 coefficients of Hx, Hy, Ez ((2m+2)² each).
pub fn taylor_recursion_2d(s0: [&[f64]; 3], m: usize, dx: f64, dt: f64, mat: MaterialParams) -> Result<Vec<f64>> {
    let n = 2 * m + 2;
    let sl = n * n;
    if s0.iter().any(|c| c.len() != sl) {
        return Err(Error::Contract("s = 0 layer must hold (2m+2)^2 coefficients per field".into()));
    }
    let mut c = vec![0.0; coeff_len(2, m)];
    let sf = sl * (recursion_depth(2, m) + 1);
    for (f, s) in s0.iter().enumerate() {
        c[f * sf..f * sf + sl].copy_from_slice(s);
    }
    taylor_recursion(2, m, dx, dt, mat, &mut c)?;
    Ok(c)
}

/// Hermite-Taylor polynomial of one cell from its stencil data
/// (`[corner][field][deriv]`, raw derivatives).
pub fn cell_polynomial(
    dims: usize,
    m: usize,
    h: f64,
    dt: f64,
    mat: MaterialParams,
    center: [f64; 2],
    launch: f64,
    corners: &[f64],
) -> Result<HTPolynomial> {
    let nf = n_fields(dims);
    let nd = n_derivs(dims, m);
    let n = 2 * m + 2;
    let mut c = vec![0.0; coeff_len(dims, m)];
    let q = recursion_depth(dims, m);
    if dims == 1 {
        let sf = n * (q + 1);
        for f in 0..nf {
            let l = &corners[f * nd..(f + 1) * nd];
            let r = &corners[(nf + f) * nd..(nf + f + 1) * nd];
            let s0 = hermite_interpolate_1d(l, r, m, h);
            c[f * sf..f * sf + n].copy_from_slice(&s0);
        }
    } else {
        let sl = n * n;
        let sf = sl * (q + 1);
        for f in 0..nf {
            let cs: [&[f64]; 4] = std::array::from_fn(|ci| &corners[(ci * nf + f) * nd..(ci * nf + f + 1) * nd]);
            let s0 = hermite_interpolate_2d(cs, m, h, h);
            c[f * sf..f * sf + sl].copy_from_slice(&s0);
        }
    }
    taylor_recursion(dims, m, h, dt, mat, &mut c)?;
    Ok(HTPolynomial { dims, m, q, center, launch, dx: h, dt, coeffs: c })
}

/// Gathers the stencil data of the cell centred at `cell` from `source`.
pub fn gather_corners(mesh: &StaggeredMesh, source: &FieldState, cell: NodeId, out: &mut Vec<f64>) -> Result<()> {
    out.clear();
    for q in mesh.stencil(cell.parity, cell.index) {
        let q = q.ok_or_else(|| Error::Stencil { node: format!("{:?} stencil of node {}", cell.parity, cell.index) })?;
        out.extend_from_slice(source.node(q));
    }
    Ok(())
}

/// Linear map from a cell's stencil data (`[corner][field][deriv]`, raw) to
/// its space-time coefficients.
pub fn cell_coefficient_map(dims: usize, m: usize, h: f64, dt: f64, mat: MaterialParams) -> Result<Mat> {
    let nin = (1 << dims) * n_fields(dims) * n_derivs(dims, m);
    let nout = coeff_len(dims, m);
    let mut out = Mat::zeros(nout, nin);
    let mut e = vec![0.0; nin];
    for j in 0..nin {
        e[j] = 1.0;
        let p = cell_polynomial(dims, m, h, dt, mat, [0.0; 2], 0.0, &e)?;
        for (i, v) in p.coeffs.iter().enumerate() {
            out[(i, j)] = *v;
        }
        e[j] = 0.0;
    }
    Ok(out)
}

/// Precomputed half-step stencil operators, one per subdomain: stencil data
/// at t to raw derivatives at the cell centre at t + Δt/2.
#[derive(Clone, Debug)]
pub struct HalfStepOperator {
    pub dims: usize,
    pub m: usize,
    pub ops: [Mat; 2],
}

impl HalfStepOperator {
    pub fn new(mesh: &StaggeredMesh, m: usize, mats: &Materials) -> Result<Self> {
        let dims = mesh.dims;
        let build = |mat: MaterialParams| -> Result<Mat> {
            let nin = (1 << dims) * n_fields(dims) * n_derivs(dims, m);
            let nf = n_fields(dims);
            let nd = n_derivs(dims, m);
            let mut op = Mat::zeros(nf * nd, nin);
            let mut e = vec![0.0; nin];
            for j in 0..nin {
                e[j] = 1.0;
                let p = cell_polynomial(dims, m, mesh.h, mesh.dt, mat, [0.0; 2], 0.0, &e)?;
                for f in 0..nf {
                    for d in 0..nd {
                        let (a, b) = (d % (m + 1), d / (m + 1));
                        op[(f * nd + d, j)] = p.eval(f, [0.0; 2], 0.5 * mesh.dt, [a, b, 0]);
                    }
                }
                e[j] = 0.0;
            }
            Ok(op)
        };
        Ok(Self { dims, m, ops: [build(mats.plus)?, build(mats.minus)?] })
    }

    /// Fills every Hermite node of `target` (whose parity is opposite to the
    /// source's) and stamps its time; CF nodes are left as they are.
    pub fn apply(&self, mesh: &StaggeredMesh, class: &NodeClassification, source: &FieldState, target: &mut FieldState) -> Result<()> {
        if source.parity == target.parity {
            return Err(Error::Contract("half step must change parity".into()));
        }
        let block = source.block();
        let nin = (1 << self.dims) * block;
        for sub in [Subdomain::Plus, Subdomain::Minus] {
            let op = &self.ops[sub.index()];
            let targets: Vec<usize> = class
                .kinds(target.parity)
                .iter()
                .enumerate()
                .filter(|(_, k)| **k == NodeKind::Hermite(sub))
                .map(|(i, _)| i)
                .collect();
            if targets.is_empty() {
                continue;
            }
            const CHUNK: usize = 512;
            let mut x = vec![0.0; CHUNK * nin];
            let mut y = vec![0.0; CHUNK * block];
            for chunk in targets.chunks(CHUNK) {
                for (r, &t) in chunk.iter().enumerate() {
                    let row = &mut x[r * nin..(r + 1) * nin];
                    for (c, q) in mesh.stencil(target.parity, t).into_iter().enumerate() {
                        let q = q.ok_or_else(|| Error::Stencil { node: format!("stencil of {:?} node {t}", target.parity) })?;
                        row[c * block..(c + 1) * block].copy_from_slice(source.node(q));
                    }
                }
                let rows = chunk.len();
                // y (rows × block) = x (rows × nin) · opᵀ
                // SAFETY: x, y and op are distinct buffers sized for the strides below.
                unsafe {
                    matrixmultiply::dgemm(
                        rows,
                        nin,
                        block,
                        1.0,
                        x.as_ptr(),
                        nin as isize,
                        1,
                        op.data.as_ptr(),
                        1,
                        nin as isize,
                        0.0,
                        y.as_mut_ptr(),
                        block as isize,
                        1,
                    );
                }
                for (r, &t) in chunk.iter().enumerate() {
                    target.node_mut(t).copy_from_slice(&y[r * block..(r + 1) * block]);
                }
            }
        }
        target.time = source.time + 0.5 * mesh.dt;
        Ok(())
    }
}

/// One half step computed cell by cell from explicit polynomials. Returns the
/// polynomials of the cells listed in `retain`.
pub fn half_step(
    mesh: &StaggeredMesh,
    class: &NodeClassification,
    mats: &Materials,
    source: &FieldState,
    target: &mut FieldState,
    retain: &[NodeId],
) -> Result<Vec<HTPolynomial>> {
    let tp = target.parity;
    let mut buf = vec![];
    let nd = target.n_derivs();
    let m = target.m;
    let t_new = source.time + 0.5 * mesh.dt;
    let poly = |cell: NodeId, buf: &mut Vec<f64>| -> Result<HTPolynomial> {
        gather_corners(mesh, source, cell, buf)?;
        let sub = class.kind(cell).subdomain().unwrap_or(Subdomain::Plus);
        cell_polynomial(mesh.dims, m, mesh.h, mesh.dt, mats.get(sub), mesh.coord(cell.parity, cell.index), source.time, buf)
    };
    for (i, kind) in class.kinds(tp).iter().enumerate() {
        if !matches!(kind, NodeKind::Hermite(_)) {
            continue;
        }
        let id = NodeId { parity: tp, index: i };
        let p = poly(id, &mut buf)?;
        let x = p.center;
        let out = target.node_mut(i);
        for f in 0..n_fields(mesh.dims) {
            for d in 0..nd {
                out[f * nd + d] = p.eval(f, x, t_new, [d % (m + 1), d / (m + 1), 0]);
            }
        }
    }
    target.time = t_new;
    retain
        .iter()
        .map(|&c| {
            if c.parity != tp {
                return Err(Error::Contract("retained cells must be centred on target nodes".into()));
            }
            poly(c, &mut buf)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Domain, StaggeredMesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interpolate_1d_examples() {
        for m in 1..=2 {
            let mut l = vec![0.0; m + 1];
            let mut r = vec![0.0; m + 1];
            l[0] = 1.0;
            r[0] = 1.0;
            let c = hermite_interpolate_1d(&l, &r, m, 0.3);
            assert!((c[0] - 1.0).abs() < 1e-14 && c[1..].iter().all(|v| v.abs() < 1e-14));
            // f(x) = x on [0, 1]
            l[0] = 0.0;
            l[1] = 1.0;
            r[1] = 1.0;
            let c = hermite_interpolate_1d(&l, &r, m, 1.0);
            assert!((c[0] - 0.5).abs() < 1e-14 && (c[1] - 1.0).abs() < 1e-14);
            assert!(c[2..].iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn interpolate_2d_xy() {
        let m = 1;
        // f = xy on [0, h]², corner data [f, fx, fy, fxy]
        let h = 0.25;
        let corner = |x: f64, y: f64| vec![x * y, y, x, 1.0];
        let c: Vec<Vec<f64>> = vec![corner(0.0, 0.0), corner(h, 0.0), corner(0.0, h), corner(h, h)];
        let out = hermite_interpolate_2d([&c[0], &c[1], &c[2], &c[3]], m, h, h);
        let n = 4;
        assert!((out[1 + n] / (h * h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recursion_single_step() {
        let m = 1;
        let (dx, dt) = (0.1, 0.05);
        let mat = MaterialParams { mu: 2.0, eps: 3.0 };
        let h0 = vec![0.0; 4];
        let e0 = vec![0.0, 1.0, 0.0, 0.0];
        let c = taylor_recursion_1d(&h0, &e0, m, dx, dt, mat).unwrap();
        assert!((c[4] - (-dt / (mat.mu * dx))).abs() < 1e-15);
        assert!(c.iter().enumerate().all(|(i, v)| i == 4 || i == 16 + 1 || *v == 0.0));
    }

    #[test]
    fn traveling_wave_is_reproduced() {
        // H = E = f(x - t), f cubic: exact for m = 1
        let m = 1;
        let f = |x: f64| [x.powi(3) - 0.5 * x, 3.0 * x * x - 0.5];
        let (h, dt) = (0.2, 0.15);
        let mat = MaterialParams::default();
        let (xl, xr) = (0.3, 0.5);
        let mut corners = vec![];
        for x in [xl, xr] {
            let d = f(x);
            corners.extend_from_slice(&d);
            corners.extend_from_slice(&d);
        }
        let p = cell_polynomial(1, m, h, dt, mat, [0.4, 0.0], 0.0, &corners).unwrap();
        for &(x, t) in &[(0.35, 0.05), (0.42, 0.1), (0.4, 0.075)] {
            let want = f(x - t)[0];
            assert!((p.eval(0, [x, 0.0], t, [0, 0, 0]) - want).abs() < 1e-13);
            assert!((p.eval(1, [x, 0.0], t, [0, 0, 0]) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn evaluate_examples() {
        let mut p = HTPolynomial { dims: 2, m: 1, q: 6, center: [1.0, 2.0], launch: 0.5, dx: 0.1, dt: 0.05, coeffs: vec![0.0; coeff_len(2, 1)] };
        p.coeffs[0] = 3.0;
        assert_eq!(p.eval(0, [1.0, 2.0], 0.5, [0, 0, 0]), 3.0);
        p.coeffs[0] = 0.0;
        p.coeffs[1] = 1.0;
        assert!((p.eval(0, [1.1, 2.0], 0.5, [0, 0, 0]) - 1.0).abs() < 1e-14);
        assert!((p.eval(0, [1.0, 2.0], 0.5, [1, 0, 0]) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn projection_exact_for_polynomials() {
        let mesh = StaggeredMesh::new(2, &[0.0, 0.0], &[1.0, 1.0], &[8, 8], 0.5, true).unwrap();
        let class = crate::mesh::classify_nodes(&mesh, &Domain::default()).unwrap();
        let m = 2;
        let st = project_with(&mesh, &class, m, Parity::Primal, 0.0, |_, x| {
            [x[0].powi(6) * x[1].powi(3), 2.0, (x[0] * x[1]).sin()]
        })
        .unwrap();
        let node = 3 + 8 * 5;
        let x = mesh.coord(Parity::Primal, node);
        let t = st.tensor(node, 0);
        assert!((t.get(2, 1) - 30.0 * x[0].powi(4) * 3.0 * x[1].powi(2)).abs() < 1e-10);
        let c = st.tensor(node, 1);
        assert!((c.get(0, 0) - 2.0).abs() < 1e-13 && c.data[1..].iter().all(|v| v.abs() < 1e-9));
        let s = st.tensor(node, 2);
        let (a, b) = (x[0], x[1]);
        let want = (a * b).cos() - a * b * (a * b).sin();
        assert!((s.get(1, 1) - want).abs() < 1e-8);
    }

    #[test]
    fn interpolation_exactness_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 1..=2 {
            let n = 2 * m + 2;
            let h = 0.125;
            for _ in 0..20 {
                let c: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let eval = |x: f64, y: f64, a: usize, b: usize| {
                    let px = falling_powers(x / h, n, a);
                    let py = falling_powers(y / h, n, b);
                    let mut s = 0.0;
                    for l in 0..n {
                        for k in 0..n {
                            s += c[k + n * l] * px[k] * py[l];
                        }
                    }
                    s / h.powi((a + b) as i32)
                };
                let corner = |x: f64, y: f64| -> Vec<f64> {
                    (0..(m + 1) * (m + 1)).map(|d| eval(x, y, d % (m + 1), d / (m + 1))).collect()
                };
                let cs = [corner(-h / 2.0, -h / 2.0), corner(h / 2.0, -h / 2.0), corner(-h / 2.0, h / 2.0), corner(h / 2.0, h / 2.0)];
                let out = hermite_interpolate_2d([&cs[0], &cs[1], &cs[2], &cs[3]], m, h, h);
                for (i, (a, b)) in out.iter().zip(&c).enumerate() {
                    assert!((a - b).abs() < 1e-10, "m={m} coef {i}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn batched_matches_direct() {
        let mesh = StaggeredMesh::new(2, &[0.0, 0.0], &[1.0, 1.0], &[10, 10], 0.5, true).unwrap();
        let class = crate::mesh::classify_nodes(&mesh, &Domain::default()).unwrap();
        let mats = Materials::default();
        let m = 2;
        let src = project_with(&mesh, &class, m, Parity::Primal, 0.0, |_, x| {
            [(3.0 * x[0]).sin(), (2.0 * x[1]).cos(), (x[0] + x[1]).sin()]
        })
        .unwrap();
        let mut a = FieldState::zeros(&mesh, m, Parity::Dual, 0.0);
        let mut b = a.clone();
        let op = HalfStepOperator::new(&mesh, m, &mats).unwrap();
        op.apply(&mesh, &class, &src, &mut a).unwrap();
        half_step(&mesh, &class, &mats, &src, &mut b, &[]).unwrap();
        let diff = a.data.iter().zip(&b.data).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
        assert!(diff < 1e-10 * b.max_norm(), "{diff}");
        assert_eq!(a.time, b.time);
    }
}
