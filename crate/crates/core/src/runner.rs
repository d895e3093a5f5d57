//! Experiment drivers behind the command line: run, converge, self-converge,
//! stability, spectrum and cond, plus CSV and snapshot output.

use crate::cfm::CfmOptions;
use crate::config::RunConfig;
use crate::diagnostics::{
    condition_sweep, l2_error, long_run_stability, spectrum, ConvergencePoint, ConvergenceReport, CondRow, ErrorNorms, SpectrumReport,
    StabilityTrace,
};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::hermite::{cell_polynomial, gather_corners, n_fields, FieldState};
use crate::mesh::{NodeClassification, NodeId, NodeKind, Parity, StaggeredMesh, Subdomain};
use crate::solver::{Setup, Solver};
use std::io::Write;
use std::path::Path;

/// Float format with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Mesh with `n` cells per direction and a time step that lands exactly on
/// `t_final` (Δt = t_final / ceil(t_final / (CFL h))).
pub fn mesh_for(cfg: &RunConfig, n: usize, cfl: f64, hit_final: bool) -> Result<StaggeredMesh> {
    let d = cfg.dims();
    let g = &cfg.geometry;
    let ns = vec![n; d];
    let h = g.length() / n as f64;
    let cfl_eff = if hit_final && cfg.t_final > 0.0 {
        let steps = (cfg.t_final / (cfl * h)).ceil();
        cfg.t_final / steps / h
    } else {
        cfl
    };
    StaggeredMesh::new(d, &g.lo, &g.hi, &ns, cfl_eff, g.periodic)
}

pub fn setup_for(cfg: &RunConfig, n: usize, cfl: f64, c_h: f64, hit_final: bool) -> Result<Setup> {
    cfg.validate()?;
    let mut cfm = CfmOptions::new(cfg.m, c_h);
    cfm.unit_weights = cfg.unit_weights;
    Ok(Setup {
        mesh: mesh_for(cfg, n, cfl, hit_final)?,
        domain: cfg.geometry.domain(),
        mats: cfg.materials,
        cfm,
        beta: cfg.beta,
        rule: cfg.region_rule,
    })
}

pub struct RunOutcome {
    pub solver: Solver,
    pub errors: Option<ErrorNorms>,
}

/// Projects the driver's fields at t = 0 and steps to the final time.
pub fn run(cfg: &RunConfig, n: usize) -> Result<RunOutcome> {
    let setup = setup_for(cfg, n, cfg.cfl, cfg.c_h, true)?;
    let driver = cfg.driver()?;
    let mut solver = Solver::new(setup, driver.clone())?;
    solver.initialize_exact(0.0)?;
    solver.run_to(cfg.t_final)?;
    let errors = driver
        .has_reference()
        .then(|| l2_error(solver.primal(), driver.as_ref(), solver.mesh(), &solver.class, solver.time()));
    Ok(RunOutcome { solver, errors })
}

pub fn converge(cfg: &RunConfig) -> Result<ConvergenceReport> {
    if !cfg.driver()?.has_reference() {
        return Err(Error::Config("converge needs a driver with a closed-form solution; use self-converge".into()));
    }
    let mut points = vec![];
    for &n in &cfg.n {
        let out = run(cfg, n)?;
        points.push(ConvergencePoint { h: out.solver.mesh().h, errors: out.errors.expect("reference exists") });
    }
    ConvergenceReport::from_points(points)
}

/// Errors of `coarse` against `reference` at the shared primal nodes active in
/// the same subdomain on both meshes.
pub fn compare_to_reference(
    coarse: &FieldState,
    coarse_mesh: &StaggeredMesh,
    coarse_class: &NodeClassification,
    reference: &FieldState,
    ref_mesh: &StaggeredMesh,
    ref_class: &NodeClassification,
) -> Result<ErrorNorms> {
    let d = coarse_mesh.dims;
    let ratio = ref_mesh.n[0] / coarse_mesh.n[0];
    let aligned = (0..d).all(|k| {
        ref_mesh.n[k] == ratio * coarse_mesh.n[k] && (ref_mesh.lo[k] - coarse_mesh.lo[k]).abs() < 1e-12 && (ref_mesh.hi[k] - coarse_mesh.hi[k]).abs() < 1e-12
    });
    if ratio == 0 || !aligned {
        return Err(Error::Contract("coarse primal nodes are not a subset of the reference mesh".into()));
    }
    if (coarse.time - reference.time).abs() > 1e-9 * (1.0 + reference.time.abs()) {
        return Err(Error::Contract(format!("time mismatch: {} vs reference {}", coarse.time, reference.time)));
    }
    let nf = n_fields(d);
    let mut sums = vec![0.0; nf];
    for (i, k) in coarse_class.primal.iter().enumerate() {
        let Some(sub) = k.subdomain() else { continue };
        let ij = coarse_mesh.ij(Parity::Primal, i);
        let rij = [(ij[0] * ratio) as isize, if d == 2 { (ij[1] * ratio) as isize } else { 0 }];
        let r = ref_mesh.index(Parity::Primal, rij).expect("aligned index");
        if ref_class.primal[r].subdomain() != Some(sub) {
            continue;
        }
        for (f, s) in sums.iter_mut().enumerate() {
            *s += (coarse.value(i, f) - reference.value(r, f)).powi(2);
        }
    }
    let vol = coarse_mesh.h.powi(d as i32);
    let fields: Vec<f64> = sums.iter().map(|s| (vol * s).sqrt()).collect();
    let combined = fields.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(ErrorNorms { fields, combined })
}

/// Runs the reference mesh, then every mesh of `n`, measuring against the
/// reference at shared nodes. Returns the report and the reference solver.
pub fn self_converge(cfg: &RunConfig) -> Result<(ConvergenceReport, Solver)> {
    let nref = cfg.reference_n.ok_or_else(|| Error::Config("self-converge needs reference_n".into()))?;
    if let Some(&n) = cfg.n.iter().find(|&&n| n == 0 || nref % n != 0) {
        return Err(Error::Contract(format!("mesh {n} does not divide the reference mesh {nref}")));
    }
    // Same Δt/h ratio on every mesh so all runs share the final time exactly.
    let reference = run(cfg, nref)?.solver;
    let mut points = vec![];
    for &n in &cfg.n {
        let s = run(cfg, n)?.solver;
        let e = compare_to_reference(s.primal(), s.mesh(), &s.class, reference.primal(), reference.mesh(), &reference.class)?;
        points.push(ConvergencePoint { h: s.mesh().h, errors: e });
    }
    Ok((ConvergenceReport::from_points(points)?, reference))
}

#[derive(Clone, Debug)]
pub struct StabilityRun {
    pub h: f64,
    pub c_h: f64,
    pub trace: StabilityTrace,
}

pub fn stability(cfg: &RunConfig) -> Result<Vec<StabilityRun>> {
    let steps = cfg.steps.unwrap_or(5000);
    let mut out = vec![];
    for &n in &cfg.n {
        for c_h in cfg.c_h_values() {
            let setup = setup_for(cfg, n, cfg.cfl, c_h, false)?;
            let trace = long_run_stability(&setup, steps, cfg.seed)?;
            out.push(StabilityRun { h: setup.mesh.h, c_h, trace });
        }
    }
    Ok(out)
}

pub fn spectrum_sweep(cfg: &RunConfig) -> Result<Vec<SpectrumReport>> {
    let mut out = vec![];
    for &n in &cfg.n {
        for c_h in cfg.c_h_values() {
            for cfl in cfg.cfl_values() {
                out.push(spectrum(&setup_for(cfg, n, cfl, c_h, false)?)?);
            }
        }
    }
    Ok(out)
}

pub fn cond_sweep(cfg: &RunConfig) -> Result<Vec<CondRow>> {
    let len = cfg.geometry.length();
    let hs: Vec<f64> = cfg.n.iter().map(|&n| len / n as f64).collect();
    let make = |h: f64| setup_for(cfg, (len / h).round() as usize, cfg.cfl, cfg.c_h, false);
    condition_sweep(&make, &hs, &cfg.c_h_values())
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(csv::Writer::from_path(path)?)
}

/// `h, err_Hx, err_Hy, err_Ez, err_U, pair_rate`. 1D (H, E) map to
/// (err_Hx, err_Ez) with err_Hy = 0.
pub fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["h", "err_Hx", "err_Hy", "err_Ez", "err_U", "pair_rate"])?;
    for (p, r) in report.points.iter().zip(&report.pair_rates) {
        let f = &p.errors.fields;
        let (hx, hy, ez) = if f.len() == 2 { (f[0], 0.0, f[1]) } else { (f[0], f[1], f[2]) };
        let rate = r.map(fmt_f64).unwrap_or_default();
        w.write_record([fmt_f64(p.h), fmt_f64(hx), fmt_f64(hy), fmt_f64(ez), fmt_f64(p.errors.combined), rate])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_stability_csv(path: &Path, runs: &[StabilityRun]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["h", "c_h", "step", "max_norm", "running_max"])?;
    for r in runs {
        for (step, (n, mx)) in r.trace.norms.iter().zip(&r.trace.running_max).enumerate() {
            w.write_record([fmt_f64(r.h), fmt_f64(r.c_h), step.to_string(), fmt_f64(*n), fmt_f64(*mx)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum_csv(path: &Path, rows: &[SpectrumReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["h", "cfl", "c_h", "m", "dimension", "rho", "abs_rho_minus_1"])?;
    for r in rows {
        w.write_record([fmt_f64(r.h), fmt_f64(r.cfl), fmt_f64(r.c_h), r.m.to_string(), r.dimension.to_string(), fmt_f64(r.rho), fmt_f64(r.distance)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cond_csv(path: &Path, rows: &[CondRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["h", "c_h", "max_cond"])?;
    for r in rows {
        w.write_record([fmt_f64(r.h), fmt_f64(r.c_h), fmt_f64(r.max_cond)])?;
    }
    w.flush()?;
    Ok(())
}

/// Node coordinates, subdomain and field values of every active primal node,
/// after `# key=value` metadata lines.
pub fn write_snapshot(path: &Path, solver: &Solver, meta: &[(&str, String)]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mesh = solver.mesh();
    let st = solver.primal();
    writeln!(file, "# dims={}", mesh.dims)?;
    writeln!(file, "# n={}", mesh.n[0])?;
    writeln!(file, "# h={}", fmt_f64(mesh.h))?;
    writeln!(file, "# dt={}", fmt_f64(mesh.dt))?;
    writeln!(file, "# time={}", fmt_f64(st.time))?;
    writeln!(file, "# m={}", st.m)?;
    for (k, v) in meta {
        writeln!(file, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    if mesh.dims == 1 {
        w.write_record(["i", "x", "subdomain", "H", "E"])?;
    } else {
        w.write_record(["i", "j", "x", "y", "subdomain", "Hx", "Hy", "Ez"])?;
    }
    let nf = n_fields(mesh.dims);
    for (i, k) in solver.class.primal.iter().enumerate() {
        let Some(sub) = k.subdomain() else { continue };
        let ij = mesh.ij(Parity::Primal, i);
        let x = mesh.coord(Parity::Primal, i);
        let tag = if sub == Subdomain::Plus { "plus" } else { "minus" };
        let mut rec = vec![ij[0].to_string()];
        if mesh.dims == 2 {
            rec.push(ij[1].to_string());
        }
        rec.push(fmt_f64(x[0]));
        if mesh.dims == 2 {
            rec.push(fmt_f64(x[1]));
        }
        rec.push(tag.into());
        for f in 0..nf {
            rec.push(fmt_f64(st.value(i, f)));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Number of CF and inactive nodes, for run summaries.
pub fn node_counts(class: &NodeClassification) -> [usize; 3] {
    let mut c = [0; 3];
    for k in class.primal.iter().chain(&class.dual) {
        match k {
            NodeKind::Hermite(_) => c[0] += 1,
            NodeKind::Cf(_) => c[1] += 1,
            NodeKind::Inactive => c[2] += 1,
        }
    }
    c
}

/// Field `field` at `x` (time of the primal state) from the Hermite
/// interpolant of the nearest dual-centred cell whose four primal corners are
/// active in subdomain `sub`.
pub fn one_sided_value(solver: &Solver, sub: Subdomain, x: [f64; 2], field: usize) -> Result<f64> {
    let mesh = solver.mesh();
    if mesh.dims != 2 {
        return Err(Error::Contract("one-sided traces are implemented for 2D meshes".into()));
    }
    let st = solver.primal();
    let base = [((x[0] - mesh.lo[0]) / mesh.h - 0.5).round() as isize, ((x[1] - mesh.lo[1]) / mesh.h - 0.5).round() as isize];
    let mut best: Option<(f64, usize)> = None;
    for dj in -3..=3 {
        for di in -3..=3 {
            let Some(idx) = mesh.index(Parity::Dual, [base[0] + di, base[1] + dj]) else { continue };
            let corners = mesh.stencil(Parity::Dual, idx);
            let same = corners.iter().all(|c| c.is_some_and(|q| solver.class.primal[q].subdomain() == Some(sub)));
            if !same {
                continue;
            }
            let c = mesh.coord(Parity::Dual, idx);
            let d = (c[0] - x[0]).hypot(c[1] - x[1]);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, idx));
            }
        }
    }
    let (_, idx) = best.ok_or_else(|| Error::Contract(format!("no {sub:?} cell near ({:.4}, {:.4})", x[0], x[1])))?;
    let mut corners = vec![];
    gather_corners(mesh, st, NodeId { parity: Parity::Dual, index: idx }, &mut corners)?;
    let mat = match sub {
        Subdomain::Plus => solver.setup.mats.plus,
        Subdomain::Minus => solver.setup.mats.minus,
    };
    let poly = cell_polynomial(2, st.m, mesh.h, mesh.dt, mat, mesh.coord(Parity::Dual, idx), st.time, &corners)?;
    Ok(poly.eval(field, x, st.time, [0, 0, 0]))
}

#[derive(Clone, Debug)]
pub struct JumpCheck {
    pub points: Vec<[f64; 2]>,
    pub numeric: Vec<f64>,
    pub exact: Vec<f64>,
    /// max |numeric - exact| / max |exact|.
    pub rel_error: f64,
}

/// Jump (+ minus −) of `field` across a circular interface at `n` equally
/// spaced points, numeric from one-sided interpolants against `exact`.
pub fn circle_jump(solver: &Solver, exact: &dyn ExactSolution, center: [f64; 2], radius: f64, n: usize, field: usize) -> Result<JumpCheck> {
    let t = solver.time();
    let mut out = JumpCheck { points: vec![], numeric: vec![], exact: vec![], rel_error: 0.0 };
    for k in 0..n {
        let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64;
        let x = [center[0] + radius * th.cos(), center[1] + radius * th.sin()];
        let num = one_sided_value(solver, Subdomain::Plus, x, field)? - one_sided_value(solver, Subdomain::Minus, x, field)?;
        let ex = exact.fields(Subdomain::Plus, x, t)[field] - exact.fields(Subdomain::Minus, x, t)[field];
        out.points.push(x);
        out.numeric.push(num);
        out.exact.push(ex);
    }
    let scale = out.exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = out.numeric.iter().zip(&out.exact).fold(0.0f64, |a, (n, e)| a.max((n - e).abs()));
    out.rel_error = err / scale.max(f64::MIN_POSITIVE);
    Ok(out)
}
