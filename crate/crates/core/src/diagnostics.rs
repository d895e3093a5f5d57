//! Error norms, rate fitting, one-step operator spectra, long-run stability
//! traces and condition sweeps.

use crate::error::{Error, Result};
use crate::exact::{ExactSolution, Zero};
use crate::hermite::{n_fields, FieldState};
use crate::linalg::{eigenvalues, eigenvector, Mat};
use crate::mesh::{NodeClassification, Parity, StaggeredMesh};
use crate::solver::{Setup, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Per-field discrete L² errors and their root-sum-square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub fields: Vec<f64>,
    pub combined: f64,
}

/// sqrt(h^d Σ (u - u_exact)²) over active primal nodes, node values only.
pub fn l2_error(state: &FieldState, exact: &dyn ExactSolution, mesh: &StaggeredMesh, class: &NodeClassification, t: f64) -> ErrorNorms {
    let nf = n_fields(mesh.dims);
    let mut sums = vec![0.0; nf];
    for (i, k) in class.kinds(state.parity).iter().enumerate() {
        let Some(sub) = k.subdomain() else { continue };
        let e = exact.fields(sub, mesh.coord(state.parity, i), t);
        for (f, s) in sums.iter_mut().enumerate() {
            *s += (state.value(i, f) - e[f]).powi(2);
        }
    }
    let vol = mesh.h.powi(mesh.dims as i32);
    let fields: Vec<f64> = sums.iter().map(|s| (vol * s).sqrt()).collect();
    let combined = fields.iter().map(|e| e * e).sum::<f64>().sqrt();
    ErrorNorms { fields, combined }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub h: f64,
    pub errors: ErrorNorms,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// Rate between point i-1 and i (first entry `None`).
    pub pair_rates: Vec<Option<f64>>,
    /// Least-squares slope of log e vs log h over all points.
    pub rate: f64,
}

impl ConvergenceReport {
    pub fn from_points(points: Vec<ConvergencePoint>) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[1].h < w[0].h) {
                return Err(Error::Contract("mesh sizes must be strictly decreasing".into()));
            }
        }
        let hs: Vec<f64> = points.iter().map(|p| p.h).collect();
        let es: Vec<f64> = points.iter().map(|p| p.errors.combined).collect();
        let (pairs, rate) = fit_rate(&hs, &es)?;
        let mut pair_rates = vec![None];
        pair_rates.extend(pairs.into_iter().map(Some));
        Ok(Self { points, pair_rates, rate })
    }

    /// Least-squares rate over the last `n` points.
    pub fn tail_rate(&self, n: usize) -> Result<f64> {
        let tail = &self.points[self.points.len().saturating_sub(n)..];
        let hs: Vec<f64> = tail.iter().map(|p| p.h).collect();
        let es: Vec<f64> = tail.iter().map(|p| p.errors.combined).collect();
        Ok(fit_rate(&hs, &es)?.1)
    }
}

/// Pairwise rates log(e1/e2)/log(h1/h2) and the least-squares slope.
pub fn fit_rate(h: &[f64], e: &[f64]) -> Result<(Vec<f64>, f64)> {
    if h.len() != e.len() || h.len() < 2 {
        return Err(Error::RateUndefined("need at least two (h, error) pairs".into()));
    }
    if let Some(v) = e.iter().chain(h).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::RateUndefined(format!("non-positive or non-finite value {v}")));
    }
    let lh: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let le: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mut pairs = vec![];
    for i in 1..h.len() {
        let dh = lh[i - 1] - lh[i];
        if dh == 0.0 {
            return Err(Error::RateUndefined("repeated mesh size".into()));
        }
        pairs.push((le[i - 1] - le[i]) / dh);
    }
    let n = h.len() as f64;
    let mx = lh.iter().sum::<f64>() / n;
    let my = le.iter().sum::<f64>() / n;
    let sxy: f64 = lh.iter().zip(&le).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lh.iter().map(|x| (x - mx).powi(2)).sum();
    Ok((pairs, sxy / sxx))
}

/// Dense matrix of one full step acting on every primal DOF (inactive nodes
/// included), with homogeneous boundary data. Requires that no dual node is a
/// CF node.
pub fn one_step_operator(setup: &Setup) -> Result<Mat> {
    let solver = Solver::new(setup.clone(), Arc::new(Zero { dims: setup.mesh.dims }))?;
    one_step_operator_of(&solver)
}

pub fn one_step_operator_of(solver: &Solver) -> Result<Mat> {
    if solver.has_dual_cf() {
        return Err(Error::Contract("one-step operator needs every CF node on the primal mesh".into()));
    }
    let mesh = solver.mesh();
    let m = solver.setup.cfm.m;
    let proto = FieldState::zeros(mesh, m, Parity::Primal, 0.0);
    let dual0 = FieldState::zeros(mesh, m, Parity::Dual, 0.0);
    let n = proto.data.len();
    let cols: Result<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map_init(
            || (proto.clone(), proto.clone(), dual0.clone()),
            |(input, out_p, out_d), j| {
                input.data.iter_mut().for_each(|v| *v = 0.0);
                input.data[j] = 1.0;
                out_p.data.iter_mut().for_each(|v| *v = 0.0);
                solver.advance(input, &dual0, false, out_p, out_d)?;
                Ok(out_p.data.clone())
            },
        )
        .collect();
    let cols = cols?;
    Ok(Mat::from_fn(n, n, |i, j| cols[j][i]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRadius {
    pub rho: f64,
    /// ||Av - λv|| / ||A|| for the extremal pair.
    pub residual: f64,
}

pub fn spectral_radius(a: &Mat) -> Result<SpectralRadius> {
    let ev = eigenvalues(a)?;
    let lambda = ev.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).ok_or_else(|| Error::Domain("empty matrix".into()))?;
    let scale = a.norm_max().max(f64::MIN_POSITIVE);
    let (_, res) = eigenvector(a, lambda)?;
    let residual = res / scale;
    if residual > 1e-8 {
        return Err(Error::Numerical(format!("eigenpair residual {residual:e} for |λ| = {}", lambda.norm())));
    }
    Ok(SpectralRadius { rho: lambda.norm(), residual })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub dimension: usize,
    pub rho: f64,
    pub distance: f64,
    pub h: f64,
    pub cfl: f64,
    pub c_h: f64,
    pub m: usize,
}

pub fn spectrum(setup: &Setup) -> Result<SpectrumReport> {
    let a = one_step_operator(setup)?;
    let sr = spectral_radius(&a)?;
    Ok(SpectrumReport {
        dimension: a.rows,
        rho: sr.rho,
        distance: (sr.rho - 1.0).abs(),
        h: setup.mesh.h,
        cfl: setup.mesh.cfl,
        c_h: setup.cfm.c_h,
        m: setup.cfm.m,
    })
}

/// Max-norm of the primal node values after each step (entry 0 is the initial data)
/// and its running maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityTrace {
    pub norms: Vec<f64>,
    pub running_max: Vec<f64>,
}

/// Random initial DOFs uniform in (-10ε, 10ε) on active primal nodes, zero
/// boundary data, `steps` full steps.
pub fn long_run_stability(setup: &Setup, steps: usize, seed: u64) -> Result<StabilityTrace> {
    let mut solver = Solver::new(setup.clone(), Arc::new(Zero { dims: setup.mesh.dims }))?;
    let mut p0 = FieldState::zeros(solver.mesh(), setup.cfm.m, Parity::Primal, 0.0);
    seed_random(&mut p0, &solver.class, seed, 10.0 * f64::EPSILON);
    solver.initialize(p0)?;
    let mut norms = vec![solver.primal().max_value_norm()];
    for step in 1..=steps {
        match solver.step() {
            Ok(()) => {}
            Err(Error::Instability { .. }) => return Err(Error::Instability { step, norm: f64::INFINITY }),
            Err(e) => return Err(e),
        }
        let n = solver.primal().max_value_norm();
        if !n.is_finite() {
            return Err(Error::Instability { step, norm: n });
        }
        norms.push(n);
    }
    let mut running_max = Vec::with_capacity(norms.len());
    let mut acc = 0.0f64;
    for &n in &norms {
        acc = acc.max(n);
        running_max.push(acc);
    }
    Ok(StabilityTrace { norms, running_max })
}

/// Fills every DOF of every active node with U(-amp, amp) from a ChaCha8 stream.
pub fn seed_random(state: &mut FieldState, class: &NodeClassification, seed: u64, amp: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = state.block();
    for (i, k) in class.kinds(state.parity).iter().enumerate() {
        if k.is_active() {
            for v in &mut state.data[i * block..(i + 1) * block] {
                *v = rng.random_range(-amp..amp);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondRow {
    pub h: f64,
    pub c_h: f64,
    pub max_cond: f64,
}

/// Max condition estimate over the regular CF systems (first-step dual
/// systems excluded) for each (h, c_H). `make` builds the setup for a mesh size.
pub fn condition_sweep(make: &(dyn Fn(f64) -> Result<Setup> + Sync), hs: &[f64], c_hs: &[f64]) -> Result<Vec<CondRow>> {
    let combos: Vec<(f64, f64)> = hs.iter().flat_map(|&h| c_hs.iter().map(move |&c| (h, c))).collect();
    combos
        .par_iter()
        .map(|&(h, c_h)| {
            let mut setup = make(h)?;
            setup.cfm.c_h = c_h;
            Ok(CondRow { h, c_h, max_cond: setup.max_condition(false)? })
        })
        .collect()
}
