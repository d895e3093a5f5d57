//! Least-squares correction functions on local space-time patches.
//!
//! Unknowns are tensor Legendre coefficients of degree k = 2m per variable,
//! laid out `((block·F + field)·Nb + member)` with members flattened x fastest
//! and time last.

use crate::basis::{gauss_legendre, legendre_derivs, SpaceTimeBasis};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::hermite::{n_derivs, n_fields, recursion_depth, FieldState, HTPolynomial};
use crate::linalg::{condition_estimate, lu_factor, Lu, Mat};
use crate::material::Materials;
use crate::mesh::{LocalPatch, NodeId, StaggeredMesh};

pub use crate::material::MaterialParams;

/// Constants entering the functional of one patch.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalWeights {
    pub ell: f64,
    pub hermite: f64,
    pub mu: [f64; 2],
    pub eps: [f64; 2],
    pub z2: [f64; 2],
    pub c2: [f64; 2],
    pub zbar2: f64,
    pub cbar2: f64,
}

impl FunctionalWeights {
    /// `unit_weights` sets Z = c = 1 in the functional on both sides.
    pub fn new(mats: &Materials, unit_weights: bool, ell: f64, c_h: f64, h: f64) -> Self {
        let p = mats.plus;
        let q = mats.minus;
        let (z2, c2) = if unit_weights {
            ([1.0; 2], [1.0; 2])
        } else {
            ([p.z().powi(2), q.z().powi(2)], [p.c().powi(2), q.c().powi(2)])
        };
        let (zbar2, cbar2) = if unit_weights {
            (1.0, 1.0)
        } else {
            ((0.5 * (p.z() + q.z())).powi(2), (0.5 * (p.c() + q.c())).powi(2))
        };
        Self { ell, hermite: c_h / h, mu: [p.mu, q.mu], eps: [p.eps, q.eps], z2, c2, zbar2, cbar2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfmOptions {
    pub m: usize,
    pub c_h: f64,
    pub unit_weights: bool,
    /// Gauss points per trace sub-arc.
    pub n_trace: usize,
}

impl CfmOptions {
    pub fn new(m: usize, c_h: f64) -> Self {
        Self { m, c_h, unit_weights: true, n_trace: 2 * m + 4 }
    }

    pub fn k(&self) -> usize {
        2 * self.m
    }
}

/// Assembled (and optionally factorized) system of one CF node.
#[derive(Clone, Debug)]
pub struct CfmSystem {
    pub patch: LocalPatch,
    pub dims: usize,
    pub m: usize,
    pub k: usize,
    pub c_h: f64,
    pub target_time_offset: f64,
    pub basis: SpaceTimeBasis,
    pub weights: FunctionalWeights,
    pub matrix: Mat,
    /// D^{-1/2} with D = diag(M).
    pub scale: Vec<f64>,
    pub lu: Option<Lu>,
    pub cond: f64,
}

impl CfmSystem {
    pub fn n_fields(&self) -> usize {
        n_fields(self.dims)
    }

    pub fn members(&self) -> usize {
        self.basis.member_count()
    }

    pub fn unknowns(&self) -> usize {
        self.matrix.rows
    }

    pub fn offset(&self, block: usize, field: usize) -> usize {
        (block * self.n_fields() + field) * self.members()
    }
}

pub fn unknown_count(dims: usize, k: usize, interface: bool) -> usize {
    let blocks = if interface { 2 } else { 1 };
    blocks * n_fields(dims) * (k + 1).pow(dims as u32 + 1)
}

/// Gauss table on [a, b] for the Legendre family of `basis` variable `v`:
/// (points, weights, values[q][i], derivatives[q][i]).
struct Table {
    x: Vec<f64>,
    w: Vec<f64>,
    p: Vec<Vec<f64>>,
    dp: Vec<Vec<f64>>,
}

fn table(basis: &SpaceTimeBasis, v: usize, a: f64, b: f64, n: usize) -> Result<Table> {
    let (x, w) = gauss_legendre(n)?.mapped(a, b);
    let jac = basis.jacobian(v);
    let mut p = vec![];
    let mut dp = vec![];
    for &xi in &x {
        let d = legendre_derivs(basis.k, basis.to_ref(v, xi), 1);
        p.push(d[0].clone());
        dp.push(d[1].iter().map(|v| v * jac).collect());
    }
    Ok(Table { x, w, p, dp })
}

fn point_values(basis: &SpaceTimeBasis, v: usize, x: f64, dmax: usize) -> Vec<Vec<f64>> {
    let jac = basis.jacobian(v);
    let mut d = legendre_derivs(basis.k, basis.to_ref(v, x), dmax);
    for (o, row) in d.iter_mut().enumerate() {
        let s = jac.powi(o as i32);
        row.iter_mut().for_each(|r| *r *= s);
    }
    d
}

/// (k+1)² moment matrices ∫ P_i^{(d1)} P_j^{(d2)} on [a, b].
fn moments(t: &Table, k: usize, d1: usize, d2: usize) -> Vec<f64> {
    let n = k + 1;
    let mut out = vec![0.0; n * n];
    for q in 0..t.x.len() {
        let a = if d1 == 0 { &t.p[q] } else { &t.dp[q] };
        let b = if d2 == 0 { &t.p[q] } else { &t.dp[q] };
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] += t.w[q] * a[i] * b[j];
            }
        }
    }
    out
}

/// Adds `alpha · ⊗_v mats[v]` (each (k+1)², variable 0 fastest) into the
/// (row0, col0) block of `m`.
fn add_kron(m: &mut Mat, row0: usize, col0: usize, alpha: f64, mats: &[&[f64]], k: usize) {
    let n = k + 1;
    let nv = mats.len();
    let nb = n.pow(nv as u32);
    for a in 0..nb {
        let mut ai = [0; 3];
        let mut r = a;
        for slot in ai.iter_mut().take(nv) {
            *slot = r % n;
            r /= n;
        }
        let row = &mut m.data[(row0 + a) * m.cols + col0..(row0 + a) * m.cols + col0 + nb];
        for (b, out) in row.iter_mut().enumerate() {
            let mut bi = b;
            let mut v = alpha;
            for (d, mt) in mats.iter().enumerate() {
                v *= mt[ai[d] * n + bi % n];
                bi /= n;
            }
            *out += v;
        }
    }
}

/// A residual term: field, differentiated variable (None = value), coefficient.
type Term = (usize, Option<usize>, f64);

fn residuals(dims: usize, w: &FunctionalWeights, s: usize) -> Vec<(f64, Vec<Term>)> {
    let (mu, eps) = (w.mu[s], w.eps[s]);
    if dims == 1 {
        let t = Some(1);
        let x = Some(0);
        vec![(1.0, vec![(0, t, mu), (1, x, 1.0)]), (w.z2[s], vec![(1, t, eps), (0, x, 1.0)])]
    } else {
        let (x, y, t) = (Some(0), Some(1), Some(2));
        vec![
            (1.0, vec![(0, t, mu), (2, y, 1.0)]),
            (1.0, vec![(1, t, mu), (2, x, -1.0)]),
            (w.z2[s], vec![(2, t, eps), (1, x, -1.0), (0, y, 1.0)]),
            (w.c2[s], vec![(0, x, mu), (1, y, mu)]),
        ]
    }
}

/// Interface residual combinations at a trace point: (weight, [(block, field, coef)]).
fn jumps(dims: usize, w: &FunctionalWeights, n: [f64; 2]) -> Vec<(f64, Vec<(usize, usize, f64)>)> {
    if dims == 1 {
        vec![(1.0, vec![(0, 1, 1.0), (1, 1, -1.0)]), (w.zbar2, vec![(0, 0, 1.0), (1, 0, -1.0)])]
    } else {
        let [nx, ny] = n;
        vec![
            (1.0, vec![(0, 2, 1.0), (1, 2, -1.0)]),
            (w.zbar2, vec![(0, 1, nx), (1, 1, -nx), (0, 0, -ny), (1, 0, ny)]),
            (
                w.cbar2,
                vec![(0, 0, nx * w.mu[0]), (1, 0, -nx * w.mu[1]), (0, 1, ny * w.mu[0]), (1, 1, -ny * w.mu[1])],
            ),
        ]
    }
}

/// Spatial basis values (k+1)^d at a trace point.
fn spatial_values(basis: &SpaceTimeBasis, x: [f64; 2]) -> Vec<f64> {
    let n = basis.k + 1;
    let vx = point_values(basis, 0, x[0], 0).remove(0);
    if basis.dims == 1 {
        return vx;
    }
    let vy = point_values(basis, 1, x[1], 0).remove(0);
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            out[i + n * j] = vx[i] * vy[j];
        }
    }
    out
}

/// Builds M for a patch. The patch's block list decides boundary vs interface.
pub fn assemble_matrix(patch: &LocalPatch, mesh: &StaggeredMesh, mats: &Materials, opts: &CfmOptions) -> Result<CfmSystem> {
    if !(opts.c_h > 0.0) {
        return Err(Error::Config(format!("c_H must be positive, got {}", opts.c_h)));
    }
    if patch.boundary_trace.is_empty() && patch.interface_trace.is_empty() {
        return Err(Error::Patch { node: format!("{:?}", patch.node), reason: "empty trace".into() });
    }
    let dims = mesh.dims;
    let k = opts.k();
    let mut lo = vec![];
    let mut hi = vec![];
    for d in 0..dims {
        lo.push(patch.lo[d]);
        hi.push(patch.hi[d]);
    }
    lo.push(patch.t0);
    hi.push(patch.t1);
    let basis = SpaceTimeBasis::new(k, dims, &lo, &hi)?;
    let nv = dims + 1;
    let nf = n_fields(dims);
    let nb = basis.member_count();
    let nblk = patch.blocks.len();
    let n = nblk * nf * nb;
    let w = FunctionalWeights::new(mats, opts.unit_weights, patch.ell, opts.c_h, mesh.h);
    let mut m = Mat::zeros(n, n);
    let off = |blk: usize, f: usize| (blk * nf + f) * nb;

    // full-box moment matrices per variable: mom[v][d1][d2]
    let mut mom: Vec<[[Vec<f64>; 2]; 2]> = vec![];
    for v in 0..nv {
        let t = table(&basis, v, basis.lo[v], basis.hi[v], k + 2)?;
        mom.push([[moments(&t, k, 0, 0), moments(&t, k, 0, 1)], [moments(&t, k, 1, 0), moments(&t, k, 1, 1)]]);
    }

    for (blk, &sub) in patch.blocks.iter().enumerate() {
        let s = sub.index();
        for (wr, terms) in residuals(dims, &w, s) {
            for &(f1, v1, a1) in &terms {
                for &(f2, v2, a2) in &terms {
                    let mats: Vec<&[f64]> = (0..nv)
                        .map(|v| mom[v][(v1 == Some(v)) as usize][(v2 == Some(v)) as usize].as_slice())
                        .collect();
                    add_kron(&mut m, off(blk, f1), off(blk, f2), w.ell * wr * a1 * a2, &mats, k);
                }
            }
        }
    }

    for r in &patch.regions {
        let Some(blk) = patch.block_of(r.subdomain) else { continue };
        let s = r.subdomain.index();
        let mut mats = vec![];
        for v in 0..dims {
            let t = table(&basis, v, r.lo[v], r.hi[v], k + 2)?;
            mats.push(moments(&t, k, 0, 0));
        }
        let t = table(&basis, dims, r.t0, r.t1, k + 2)?;
        mats.push(moments(&t, k, 0, 0));
        let refs: Vec<&[f64]> = mats.iter().map(|v| v.as_slice()).collect();
        for f in 0..nf {
            let wf = if f + 1 < nf { w.z2[s] } else { 1.0 };
            add_kron(&mut m, off(blk, f), off(blk, f), w.hermite * wf, &refs, k);
        }
    }

    // Trace terms: Σ_points (coefficient · outer(vs, vs)) per field pair, then ⊗ time mass.
    let ns = (k + 1).pow(dims as u32);
    let nslot = nblk * nf;
    let mut acc = vec![vec![0.0; ns * ns]; nslot * nslot];
    let mut used = vec![false; nslot * nslot];
    let mut add_point = |terms: &[(usize, usize, f64)], alpha: f64, vs: &[f64]| {
        for &(b1, f1, a1) in terms {
            for &(b2, f2, a2) in terms {
                let idx = (b1 * nf + f1) * nslot + b2 * nf + f2;
                used[idx] = true;
                let c = alpha * a1 * a2;
                let dst = &mut acc[idx];
                for a in 0..ns {
                    let ca = c * vs[a];
                    for (o, vb) in dst[a * ns..(a + 1) * ns].iter_mut().zip(vs) {
                        *o += ca * vb;
                    }
                }
            }
        }
    };
    if let Some(bsub) = patch.boundary_block {
        let blk = patch.block_of(bsub).expect("boundary block present");
        for tp in &patch.boundary_trace {
            let vs = spatial_values(&basis, tp.x);
            add_point(&[(blk, nf - 1, 1.0)], tp.weight, &vs);
        }
    }
    if patch.is_interface() {
        for tp in &patch.interface_trace {
            let vs = spatial_values(&basis, tp.x);
            for (wj, terms) in jumps(dims, &w, tp.normal) {
                add_point(&terms, tp.weight * wj, &vs);
            }
        }
    }
    let tm = {
        let t = table(&basis, dims, patch.t0, patch.t1, k + 2)?;
        moments(&t, k, 0, 0)
    };
    let n1 = k + 1;
    for (idx, outer) in acc.iter().enumerate() {
        if !used[idx] {
            continue;
        }
        let (r0, c0) = ((idx / nslot) * nb, (idx % nslot) * nb);
        for at in 0..n1 {
            for bt in 0..n1 {
                let tv = tm[at * n1 + bt];
                if tv == 0.0 {
                    continue;
                }
                for a in 0..ns {
                    let row = (r0 + a + ns * at) * m.cols + c0 + ns * bt;
                    for (o, v) in m.data[row..row + ns].iter_mut().zip(&outer[a * ns..(a + 1) * ns]) {
                        *o += tv * v;
                    }
                }
            }
        }
    }

    Ok(CfmSystem {
        patch: patch.clone(),
        dims,
        m: opts.m,
        k,
        c_h: opts.c_h,
        target_time_offset: 0.0,
        basis,
        weights: w,
        matrix: m,
        scale: vec![],
        lu: None,
        cond: f64::NAN,
    })
}

/// Symmetric diagonal scaling, LU with partial pivoting and a 1-norm
/// condition estimate of the scaled matrix.
pub fn factorize(sys: &mut CfmSystem) -> Result<()> {
    let (scaled, s) = sys.matrix.symmetric_scaling()?;
    let lu = lu_factor(&scaled)?;
    sys.cond = condition_estimate(&scaled, &lu);
    sys.scale = s;
    sys.lu = Some(lu);
    Ok(())
}

impl CfmSystem {
    fn lu(&self) -> Result<&Lu> {
        self.lu.as_ref().ok_or_else(|| Error::Contract("system used before factorization".into()))
    }

    /// Solves M c = b through the scaled factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = self.lu()?;
        let mut y: Vec<f64> = b.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        lu.solve_in_place(&mut y);
        let mut c: Vec<f64> = y.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        if self.cond > 1e10 {
            let mc = self.matrix.matvec(&c);
            let mut r: Vec<f64> = b.iter().zip(&mc).zip(&self.scale).map(|((bv, mv), s)| (bv - mv) * s).collect();
            lu.solve_in_place(&mut r);
            for ((ci, ri), s) in c.iter_mut().zip(&r).zip(&self.scale) {
                *ci += ri * s;
            }
        }
        Ok(c)
    }

    /// Rows: (field, derivative) of the CF node's own block at the node and
    /// target time; columns: unknowns.
    pub fn output_matrix(&self) -> Mat {
        let dims = self.dims;
        let m = self.m;
        let nf = self.n_fields();
        let nd = n_derivs(dims, m);
        let nb = self.members();
        let n1 = self.k + 1;
        let blk = self.patch.block_of(self.patch.subdomain).expect("own block present");
        let p = self.patch.position;
        let vx = point_values(&self.basis, 0, p[0], m);
        let vy = if dims == 2 { point_values(&self.basis, 1, p[1], m) } else { vec![vec![1.0]] };
        let vt = point_values(&self.basis, dims, self.target_time_offset, 0).remove(0);
        let mut e = Mat::zeros(nf * nd, self.unknowns());
        for f in 0..nf {
            for d in 0..nd {
                let (a, b) = (d % (m + 1), d / (m + 1));
                let row = e.row_mut(f * nd + d);
                for al in 0..nb {
                    let ix = al % n1;
                    let rest = al / n1;
                    let (iy, it) = if dims == 2 { (rest % n1, rest / n1) } else { (0, rest) };
                    row[self.offset(blk, f) + al] = vx[a][ix] * vy[b.min(vy.len() - 1)][iy] * vt[it];
                }
            }
        }
        e
    }
}

/// Reference right-hand side from explicit polynomials, one per patch region
/// (in region order), and the boundary driver. `t_target` is the absolute
/// target time.
pub fn assemble_rhs(sys: &CfmSystem, polys: &[HTPolynomial], driver: Option<&dyn ExactSolution>, t_target: f64) -> Result<Vec<f64>> {
    let patch = &sys.patch;
    if polys.len() != patch.regions.len() {
        return Err(Error::Contract(format!(
            "{} retained polynomials for {} Hermite regions",
            polys.len(),
            patch.regions.len()
        )));
    }
    let dims = sys.dims;
    let nf = sys.n_fields();
    let nb = sys.members();
    let n1 = sys.k + 1;
    let basis = &sys.basis;
    let mut b = vec![0.0; sys.unknowns()];
    let m = sys.m;
    let q = recursion_depth(dims, m);
    let ns = 2 * m + 2;
    let nt = (sys.k + q) / 2 + 1;
    for (r, poly) in patch.regions.iter().zip(polys) {
        let blk = patch.block_of(r.subdomain).expect("region block present");
        let s = r.subdomain.index();
        let tx = table(basis, 0, r.lo[0], r.hi[0], ns)?;
        let ty = if dims == 2 { Some(table(basis, 1, r.lo[1], r.hi[1], ns)?) } else { None };
        let tt = table(basis, dims, r.t0, r.t1, nt)?;
        let nyq = ty.as_ref().map_or(1, |t| t.x.len());
        for f in 0..nf {
            let wf = sys.weights.hermite * if f + 1 < nf { sys.weights.z2[s] } else { 1.0 };
            let o = sys.offset(blk, f);
            for (qt, &tau) in tt.x.iter().enumerate() {
                for qy in 0..nyq {
                    for (qx, &x) in tx.x.iter().enumerate() {
                        let y = ty.as_ref().map_or(0.0, |t| t.x[qy]);
                        let wy = ty.as_ref().map_or(1.0, |t| t.w[qy]);
                        let val = poly.eval(f, [x, y], t_target + tau, [0, 0, 0]);
                        let wt = wf * val * tx.w[qx] * wy * tt.w[qt];
                        for al in 0..nb {
                            let ix = al % n1;
                            let rest = al / n1;
                            let (iy, it) = if dims == 2 { (rest % n1, rest / n1) } else { (0, rest) };
                            let py = ty.as_ref().map_or(1.0, |t| t.p[qy][iy]);
                            b[o + al] += wt * tx.p[qx][ix] * py * tt.p[qt][it];
                        }
                    }
                }
            }
        }
    }
    if let (Some(bsub), Some(g)) = (patch.boundary_block, driver) {
        let blk = patch.block_of(bsub).expect("boundary block present");
        let o = sys.offset(blk, nf - 1);
        let tt = table(basis, dims, patch.t0, patch.t1, sys.k + 4)?;
        for tp in &patch.boundary_trace {
            let vs = spatial_values(basis, tp.x);
            let nsb = vs.len();
            for (qt, &tau) in tt.x.iter().enumerate() {
                let gv = g.boundary_value(bsub, tp.x, t_target + tau) * tp.weight * tt.w[qt];
                for al in 0..nb {
                    b[o + al] += gv * vs[al % nsb] * tt.p[qt][al / nsb];
                }
            }
        }
    }
    Ok(b)
}

/// Solves for the correction functions and writes the own-subdomain values
/// and derivatives at the CF node into `target`.
pub fn solve_and_apply(sys: &CfmSystem, b: &[f64], target: &mut FieldState) -> Result<()> {
    let c = sys.solve(b)?;
    let e = sys.output_matrix();
    let out = e.matvec(&c);
    let node = sys.patch.node;
    if node.parity != target.parity {
        return Err(Error::Contract("target state has the wrong parity".into()));
    }
    target.node_mut(node.index).copy_from_slice(&out);
    Ok(())
}

/// Which source buffer a map block reads: the opposite parity at T - Δt/2
/// (`Recent`) or the node's own parity at T - Δt (`Old`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Recent,
    Old,
}

/// Precomputed affine map from source node data and boundary modes to the
/// corrected data of one CF node.
#[derive(Clone, Debug)]
pub struct CfMap {
    pub node: NodeId,
    /// (slot, source node, out × block matrix, row-major).
    pub blocks: Vec<(Slot, usize, Vec<f64>)>,
    /// Time offsets of the boundary quadrature.
    pub taus: Vec<f64>,
    /// `[mode][tau][out]`.
    pub modes: Vec<f64>,
    pub n_modes: usize,
    pub out: usize,
}

/// Builds the correction map: W = E M⁻¹ contracted with the region moment
/// tensors and composed with the per-subdomain cell coefficient maps.
pub fn precompute_map(
    sys: &CfmSystem,
    mesh: &StaggeredMesh,
    cell_maps: &[Mat; 2],
    driver: Option<&dyn ExactSolution>,
) -> Result<CfMap> {
    let lu = sys.lu()?;
    let dims = sys.dims;
    let m = sys.m;
    let nf = sys.n_fields();
    let nd = n_derivs(dims, m);
    let nout = nf * nd;
    let nb = sys.members();
    let n1 = sys.k + 1;
    let nunk = sys.unknowns();
    let patch = &sys.patch;
    let e = sys.output_matrix();

    // Wᵀ = S Ms⁻¹ S Eᵀ
    let mut wt = Mat::from_fn(nunk, nout, |i, o| e[(o, i)] * sys.scale[i]);
    lu.solve_columns(&mut wt);
    for i in 0..nunk {
        let s = sys.scale[i];
        wt.row_mut(i).iter_mut().for_each(|v| *v *= s);
    }
    if sys.cond > 1e10 {
        // one refinement step on M Wᵀ = Eᵀ
        let r = sys.matrix.matmul(&wt);
        let mut corr = Mat::from_fn(nunk, nout, |i, o| (e[(o, i)] - r[(i, o)]) * sys.scale[i]);
        lu.solve_columns(&mut corr);
        for i in 0..nunk {
            let s = sys.scale[i];
            for o in 0..nout {
                wt[(i, o)] += corr[(i, o)] * s;
            }
        }
    }
    let w = |o: usize, i: usize| wt[(i, o)];

    let q = recursion_depth(dims, m);
    let ns = 2 * m + 2;
    let nsy = if dims == 2 { ns } else { 1 };
    let nt = (sys.k + q) / 2 + 1;
    let ncoef = nf * (q + 1) * ns * nsy;
    let nin = (1 << dims) * nf * nd;
    let block = nf * nd;
    let mut acc: std::collections::BTreeMap<(Slot, usize), Vec<f64>> = Default::default();

    // Drop coefficient rows that the Taylor recursion never fills.
    let mut keep = vec![usize::MAX; ncoef];
    let mut kept = 0;
    for (i, slot) in keep.iter_mut().enumerate() {
        if cell_maps.iter().any(|cm| cm.row(i).iter().any(|v| *v != 0.0)) {
            *slot = kept;
            kept += 1;
        }
    }
    let compress = |cm: &Mat| {
        let mut out = Mat::zeros(kept, nin);
        for i in 0..ncoef {
            if keep[i] != usize::MAX {
                out.row_mut(keep[i]).copy_from_slice(cm.row(i));
            }
        }
        out
    };
    let cms = [compress(&cell_maps[0]), compress(&cell_maps[1])];
    // local row block of each region inside its subdomain's stacked matrix
    let mut counts = [0usize; 2];
    let local: Vec<usize> = patch
        .regions
        .iter()
        .map(|r| {
            let c = &mut counts[r.subdomain.index()];
            *c += 1;
            *c - 1
        })
        .collect();
    let mut vs = [Mat::zeros(counts[0] * nout, kept), Mat::zeros(counts[1] * nout, kept)];

    for (ri, r) in patch.regions.iter().enumerate() {
        let blk = patch.block_of(r.subdomain).expect("region block present");
        let s = r.subdomain.index();
        // Bx[α][k] = ∫ P_α X^k
        let mono = |t: &Table, center: f64, scale: f64, npow: usize| -> Vec<f64> {
            let mut out = vec![0.0; n1 * npow];
            for (qi, &x) in t.x.iter().enumerate() {
                let xs = (x - center) / scale;
                let mut pw = 1.0;
                for kk in 0..npow {
                    for a in 0..n1 {
                        out[a * npow + kk] += t.w[qi] * t.p[qi][a] * pw;
                    }
                    pw *= xs;
                }
            }
            out
        };
        let tx = table(&sys.basis, 0, r.lo[0], r.hi[0], ns)?;
        let bx = mono(&tx, r.center[0], mesh.h, ns);
        let by = if dims == 2 {
            let ty = table(&sys.basis, 1, r.lo[1], r.hi[1], ns)?;
            mono(&ty, r.center[1], mesh.h, ns)
        } else {
            vec![1.0]
        };
        let tt = table(&sys.basis, dims, r.t0, r.t1, nt)?;
        let bt = mono(&tt, r.launch, mesh.dt, q + 1);
        let (ny1, nyb) = if dims == 2 { (n1, ns) } else { (1, 1) };

        // V[o][f][s][l][k], rows of region ri in the stacked matrix of its subdomain
        let v = &mut vs[s];
        let mut t1 = vec![0.0; ns * ny1 * n1];
        let mut t2 = vec![0.0; ns * nyb * n1];
        for f in 0..nf {
            let wf = sys.weights.hermite * if f + 1 < nf { sys.weights.z2[s] } else { 1.0 };
            let o0 = sys.offset(blk, f);
            for o in 0..nout {
                // contract x: t1[kx][αy][αt]
                t1.iter_mut().for_each(|x| *x = 0.0);
                for al in 0..nb {
                    let wv = w(o, o0 + al);
                    if wv == 0.0 {
                        continue;
                    }
                    let ax = al % n1;
                    let rest = al / n1;
                    for kx in 0..ns {
                        t1[kx + ns * rest] += wv * bx[ax * ns + kx];
                    }
                }
                // contract y: t2[kx][ly][αt]
                t2.iter_mut().for_each(|x| *x = 0.0);
                for at in 0..n1 {
                    for ay in 0..ny1 {
                        for ly in 0..nyb {
                            let c = by[ay * nyb + ly];
                            if c == 0.0 {
                                continue;
                            }
                            for kx in 0..ns {
                                t2[kx + ns * (ly + nyb * at)] += c * t1[kx + ns * (ay + ny1 * at)];
                            }
                        }
                    }
                }
                // contract t into V
                let row = v.row_mut(local[ri] * nout + o);
                let base = f * (q + 1) * ns * nyb;
                for at in 0..n1 {
                    for sidx in 0..=q {
                        let c = wf * bt[at * (q + 1) + sidx];
                        if c == 0.0 {
                            continue;
                        }
                        for ly in 0..nyb {
                            for kx in 0..ns {
                                let col = keep[base + (sidx * nyb + ly) * ns + kx];
                                if col != usize::MAX {
                                    row[col] += c * t2[kx + ns * (ly + nyb * at)];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut krs = [Mat::zeros(0, 0), Mat::zeros(0, 0)];
    for s in 0..2 {
        if counts[s] > 0 {
            krs[s] = Mat::zeros(counts[s] * nout, nin);
            crate::linalg::gemm_acc(1.0, &vs[s], &cms[s], 0.0, &mut krs[s]);
        }
    }
    for (ri, r) in patch.regions.iter().enumerate() {
        let kr = &krs[r.subdomain.index()];
        let slot = if r.cell.parity == patch.node.parity { Slot::Recent } else { Slot::Old };
        for (c, src) in mesh.stencil(r.cell.parity, r.cell.index).into_iter().enumerate() {
            let src = src.ok_or_else(|| Error::Stencil { node: format!("stencil of {:?}", r.cell) })?;
            let entry = acc.entry((slot, src)).or_insert_with(|| vec![0.0; nout * block]);
            for o in 0..nout {
                let row = &kr.row(local[ri] * nout + o)[c * block..(c + 1) * block];
                for (e, v) in entry[o * block..(o + 1) * block].iter_mut().zip(row) {
                    *e += v;
                }
            }
        }
    }

    let mut taus = vec![];
    let mut modes = vec![];
    let mut n_modes = 0;
    if let (Some(bsub), Some(g)) = (patch.boundary_block, driver) {
        n_modes = g.boundary_modes();
        let blk = patch.block_of(bsub).expect("boundary block present");
        let o0 = sys.offset(blk, nf - 1);
        let tt = table(&sys.basis, dims, patch.t0, patch.t1, sys.k + 4)?;
        taus = tt.x.clone();
        modes = vec![0.0; n_modes * taus.len() * nout];
        let mut sj = vec![0.0; n_modes];
        for tp in &patch.boundary_trace {
            let vs = spatial_values(&sys.basis, tp.x);
            let nsb = vs.len();
            g.boundary_spatial(bsub, tp.x, &mut sj);
            for (qt, _) in tt.x.iter().enumerate() {
                for o in 0..nout {
                    let mut sum = 0.0;
                    for al in 0..nb {
                        sum += w(o, o0 + al) * vs[al % nsb] * tt.p[qt][al / nsb];
                    }
                    let sum = sum * tp.weight * tt.w[qt];
                    for j in 0..n_modes {
                        modes[(j * taus.len() + qt) * nout + o] += sj[j] * sum;
                    }
                }
            }
        }
    }
    Ok(CfMap {
        node: patch.node,
        blocks: acc.into_iter().map(|((s, n), m)| (s, n, m)).collect(),
        taus,
        modes,
        n_modes,
        out: nout,
    })
}

impl CfMap {
    /// Corrected data of the node at absolute time `t`.
    pub fn apply(&self, recent: &FieldState, old: &FieldState, driver: Option<&dyn ExactSolution>, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let block = recent.block();
        for (slot, src, mat) in &self.blocks {
            let x = match slot {
                Slot::Recent => recent.node(*src),
                Slot::Old => old.node(*src),
            };
            for (o, row) in mat.chunks_exact(block).enumerate() {
                let mut s = 0.0;
                for (a, b) in row.iter().zip(x) {
                    s += a * b;
                }
                out[o] += s;
            }
        }
        if let (Some(g), true) = (driver, self.n_modes > 0) {
            let mut tj = vec![0.0; self.n_modes];
            let nt = self.taus.len();
            for (qt, tau) in self.taus.iter().enumerate() {
                g.boundary_temporal(t + tau, &mut tj);
                for (j, &tv) in tj.iter().enumerate() {
                    let row = &self.modes[(j * nt + qt) * self.out..(j * nt + qt + 1) * self.out];
                    for (o, r) in out.iter_mut().zip(row) {
                        *o += tv * r;
                    }
                }
            }
        }
    }
}
