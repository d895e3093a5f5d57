use super::{LayeredStatic, PolyWave};
use htcfm::cfm::{assemble_matrix, CfmOptions, CfmSystem};
use htcfm::exact::{ExactSolution, MaterialParams};
use htcfm::hermite::{factorial, project_with, recursion_depth, taylor_recursion, FieldState};
use htcfm::linalg::cholesky;
use htcfm::material::Materials;
use htcfm::mesh::{build_local_patch, Domain, Subdomain, NodeClassification, NodeId, Parity, RegionRule, Shape, StaggeredMesh};
use htcfm::solver::{Setup, Solver};
use rand::Rng;
use std::sync::Arc;

pub fn mesh(dims: usize, n: usize, cfl: f64) -> StaggeredMesh {
    StaggeredMesh::new(dims, &vec![0.0; dims], &vec![1.0; dims], &vec![n; dims], cfl, false).unwrap()
}

pub fn setup(dims: usize, n: usize, m: usize, domain: Domain, mats: Materials) -> Setup {
    Setup { mesh: mesh(dims, n, 0.5), domain, mats, cfm: CfmOptions::new(m, 0.1), beta: 5.0, rule: RegionRule::default() }
}

pub fn dielectric() -> Materials {
    Materials { plus: MaterialParams { mu: 1.0, eps: 1.0 }, minus: MaterialParams { mu: 2.0, eps: 2.25 } }
}

pub fn boundary_1d() -> Domain {
    Domain { boundary: Some(Shape::Interval { lo: 0.0731, hi: 0.9137 }), interface: None }
}

pub fn interface_1d() -> Domain {
    Domain { boundary: Some(Shape::Interval { lo: 0.0731, hi: 0.9137 }), interface: Some(Shape::HalfSpace { point: [0.5123, 0.0], normal: [1.0, 0.0] }) }
}

pub fn boundary_2d() -> Domain {
    Domain { boundary: Some(Shape::circle([0.51, 0.49], 0.37)), interface: None }
}

pub fn interface_2d_circle() -> Domain {
    Domain { boundary: Some(Shape::circle([0.51, 0.49], 0.42)), interface: Some(Shape::circle([0.5, 0.5], 0.21)) }
}

/// Vertical strip (periodic in y) split by the line x = 0.4871.
pub fn interface_2d_line() -> Domain {
    Domain {
        boundary: Some(Shape::BoxUnion { boxes: vec![([0.1337, -1.0], [0.8713, 2.0])] }),
        interface: Some(Shape::HalfSpace { point: [0.4871, 0.0], normal: [1.0, 0.0] }),
    }
}

pub fn all_jobs(s: &Setup) -> (NodeClassification, Vec<(NodeId, bool)>) {
    let class = s.classify().unwrap();
    let mut jobs = vec![];
    for parity in [Parity::Primal, Parity::Dual] {
        for i in class.cf_nodes(parity) {
            jobs.push((NodeId { parity, index: i }, false));
            if parity == Parity::Dual {
                jobs.push((NodeId { parity, index: i }, true));
            }
        }
    }
    (class, jobs)
}

pub fn system(s: &Setup, class: &NodeClassification, id: NodeId, boot: bool) -> CfmSystem {
    let patch = build_local_patch(&s.mesh, class, &s.domain, id, s.beta, s.rule, s.cfm.n_trace, boot).unwrap();
    assemble_matrix(&patch, &s.mesh, &s.mats, &s.cfm).unwrap()
}
/// Exact node data at every parity/time the step reads, then one full step.
pub fn pipeline_error(s: Setup, sol: Arc<dyn ExactSolution>, t_n: f64, first: bool) -> f64 {
    let solver = Solver::new(s, sol.clone()).unwrap();
    let mesh = solver.mesh().clone();
    let m = solver.setup.cfm.m;
    let proj = |parity, t: f64| project_with(&mesh, &solver.class, m, parity, t, |sub, x| sol.fields(sub, x, t)).unwrap();
    let p = proj(Parity::Primal, t_n);
    let d = if first { FieldState::zeros(&mesh, m, Parity::Dual, t_n - 0.5 * mesh.dt) } else { proj(Parity::Dual, t_n - 0.5 * mesh.dt) };
    let mut out_p = p.clone();
    let mut out_d = d.clone();
    solver.advance(&p, &d, first, &mut out_p, &mut out_d).unwrap();
    let want_p = proj(Parity::Primal, t_n + mesh.dt);
    let want_d = proj(Parity::Dual, t_n + 0.5 * mesh.dt);
    // derivative DOFs compared in the dimensionless form f^(a,b) h^(a+b)
    let nd = want_p.n_derivs();
    let w: Vec<f64> = (0..want_p.block()).map(|j| {
        let d = j % nd;
        mesh.h.powi((d % (m + 1) + d / (m + 1)) as i32)
    }).collect();
    let scale = want_p.data.chunks(want_p.block()).flat_map(|c| c.iter().zip(&w).map(|(v, s)| (v * s).abs())).fold(1.0f64, f64::max);
    let mut err = 0.0f64;
    for (got, want, kinds) in [(&out_p, &want_p, &solver.class.primal), (&out_d, &want_d, &solver.class.dual)] {
        for (i, k) in kinds.iter().enumerate() {
            if k.is_active() {
                for ((a, b), s) in got.node(i).iter().zip(want.node(i)).zip(&w) {
                    err = err.max((a - b).abs() * s / scale);
                }
            }
        }
    }
    err
}

/// 20 random CF systems per (configuration, m, weighting): symmetric, and the
/// diagonally scaled matrix admits a Cholesky factorization. Returns the
/// number of systems checked.
pub fn spd_sweep(rng: &mut impl Rng) -> Result<usize, String> {
    let configs: Vec<(usize, usize, Domain, Materials)> = vec![
        (1, 40, boundary_1d(), Materials::default()),
        (1, 40, interface_1d(), dielectric()),
        (2, 24, boundary_2d(), Materials::default()),
        (2, 24, interface_2d_circle(), dielectric()),
    ];
    let mut count = 0;
    for (dims, n, domain, mats) in configs {
        for m in [1, 2] {
            for unit in [true, false] {
                let mut s = setup(dims, n, m, domain.clone(), mats);
                s.cfm.unit_weights = unit;
                let (class, jobs) = all_jobs(&s);
                for _ in 0..20 {
                    let (id, boot) = jobs[rng.random_range(0..jobs.len())];
                    s.cfm.c_h = rng.random_range(0.01..0.9);
                    let sys = system(&s, &class, id, boot);
                    let a = &sys.matrix;
                    if a.asymmetry() > 1e-12 * a.norm_max() {
                        return Err(format!("dims {dims} m {m} {id:?}: asymmetry {:e}", a.asymmetry()));
                    }
                    let (scaled, _) = a.symmetric_scaling().map_err(|e| e.to_string())?;
                    cholesky(&scaled).map_err(|e| format!("dims {dims} m {m} {id:?}: {e}"))?;
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Worst full-step reproduction error over polynomial plane waves and layered
/// piecewise-linear solutions, with a label for each case.
pub fn reproduction_cases() -> Vec<(String, f64)> {
    let mut out = vec![];
    let vac = MaterialParams { mu: 1.0, eps: 1.0 };
    for m in [1, 2] {
        let coeffs: Vec<f64> = (0..=2 * m).map(|j| [0.3, -1.1, 0.7, 0.4, -0.25][j]).collect();
        let w1 = PolyWave { dims: 1, coeffs: coeffs.clone(), dir: [1.0, 0.0], mat: vac };
        let th: f64 = 0.6;
        let w2 = PolyWave { dims: 2, coeffs, dir: [th.cos(), th.sin()], mat: vac };
        for first in [false, true] {
            let tag = if first { " first step" } else { "" };
            out.push((format!("wave 1D boundary m={m}{tag}"), pipeline_error(setup(1, 40, m, boundary_1d(), Materials::default()), Arc::new(w1.clone()), 0.3, first)));
            out.push((format!("wave 1D interface m={m}{tag}"), pipeline_error(setup(1, 40, m, interface_1d(), Materials::default()), Arc::new(w1.clone()), 0.3, first)));
            out.push((format!("wave 2D boundary m={m}{tag}"), pipeline_error(setup(2, 20, m, boundary_2d(), Materials::default()), Arc::new(w2.clone()), 0.3, first)));
        }
        out.push((format!("wave 2D interface m={m}"), pipeline_error(setup(2, 20, m, interface_2d_circle(), Materials::default()), Arc::new(w2.clone()), 0.3, false)));

        let sol1 = LayeredStatic { dims: 1, mats: dielectric(), x0: 0.5123, a: 0.8, e0: -0.3, b_plus: 0.45 };
        out.push((format!("layered 1D m={m}"), pipeline_error(setup(1, 40, m, interface_1d(), dielectric()), Arc::new(sol1), 0.2, false)));
        let sol2 = LayeredStatic { dims: 2, mats: dielectric(), x0: 0.4871, a: 0.8, e0: -0.3, b_plus: 0.45 };
        let mut s = setup(2, 20, m, interface_2d_line(), dielectric());
        s.mesh = StaggeredMesh::new(2, &[0.0, 0.0], &[1.0, 1.0], &[20, 20], 0.5, true).unwrap();
        out.push((format!("layered 2D m={m}"), pipeline_error(s, Arc::new(sol2), 0.2, false)));
    }
    out
}

/// Scaled Taylor coefficient c[k,l,s] = ∂x^k ∂y^l ∂t^s f Δx^(k+l) Δt^s / (k! l! s!).
pub fn scaled(sol: &dyn ExactSolution, sub: Subdomain, x: [f64; 2], t: f64, k: usize, l: usize, s: usize, dx: f64, dt: f64) -> [f64; 3] {
    let d = sol.derivative(sub, x, t, [k, l, s]);
    let f = dx.powi((k + l) as i32) * dt.powi(s as i32) / (factorial(k) * factorial(l) * factorial(s));
    [d[0] * f, d[1] * f, d[2] * f]
}

/// Runs the recursion from exact spatial coefficients and compares every
/// coefficient that the truncated spatial data determines exactly.
pub fn recursion_error(sol: &dyn ExactSolution, sub: Subdomain, mat: MaterialParams, m: usize, x: [f64; 2], t: f64, dx: f64, dt: f64) -> f64 {
    let dims = sol.dims();
    let n = 2 * m + 2;
    let q = recursion_depth(dims, m);
    let ny = if dims == 2 { n } else { 1 };
    let nf = if dims == 1 { 2 } else { 3 };
    let sl = n * ny;
    let sf = sl * (q + 1);
    let mut c = vec![0.0; nf * sf];
    for l in 0..ny {
        for k in 0..n {
            let v = scaled(sol, sub, x, t, k, l, 0, dx, dt);
            for f in 0..nf {
                c[f * sf + l * n + k] = v[f];
            }
        }
    }
    taylor_recursion(dims, m, dx, dt, mat, &mut c).unwrap();
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for s in 1..=q {
        for l in 0..ny {
            for k in 0..n {
                if k + s >= n || (dims == 2 && l + s >= n) {
                    continue;
                }
                let v = scaled(sol, sub, x, t, k, l, s, dx, dt);
                for f in 0..nf {
                    let got = c[f * sf + s * sl + l * n + k];
                    err = err.max((got - v[f]).abs());
                    scale = scale.max(v[f].abs());
                }
            }
        }
    }
    err / scale.max(f64::MIN_POSITIVE)
}
