//! Time stepping: Hermite-Taylor half steps on interior nodes and
//! precomputed correction maps on CF nodes.

use crate::cfm::{assemble_matrix, factorize, precompute_map, CfMap, CfmOptions, CfmSystem};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::hermite::{cell_coefficient_map, project_initial_data, FieldState, HalfStepOperator};
use crate::linalg::Mat;
use crate::material::Materials;
use crate::mesh::{build_local_patch, classify_nodes, Domain, NodeClassification, NodeId, Parity, RegionRule, StaggeredMesh};
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct Setup {
    pub mesh: StaggeredMesh,
    pub domain: Domain,
    pub mats: Materials,
    pub cfm: CfmOptions,
    pub beta: f64,
    pub rule: RegionRule,
}

impl Setup {
    pub fn classify(&self) -> Result<NodeClassification> {
        classify_nodes(&self.mesh, &self.domain)
    }

    /// Assembled and factorized system of one CF node.
    pub fn system(&self, class: &NodeClassification, node: NodeId, bootstrap: bool) -> Result<CfmSystem> {
        let patch = build_local_patch(&self.mesh, class, &self.domain, node, self.beta, self.rule, self.cfm.n_trace, bootstrap)?;
        let mut sys = assemble_matrix(&patch, &self.mesh, &self.mats, &self.cfm)?;
        factorize(&mut sys)?;
        Ok(sys)
    }

    pub fn cell_maps(&self) -> Result<[Mat; 2]> {
        let d = self.mesh.dims;
        let m = self.cfm.m;
        Ok([
            cell_coefficient_map(d, m, self.mesh.h, self.mesh.dt, self.mats.plus)?,
            cell_coefficient_map(d, m, self.mesh.h, self.mesh.dt, self.mats.minus)?,
        ])
    }

    /// Largest condition estimate over the CF systems, optionally including
    /// the first-step dual systems.
    pub fn max_condition(&self, include_first_step: bool) -> Result<f64> {
        let class = self.classify()?;
        let jobs: Vec<(NodeId, bool)> = cf_jobs(&class).into_iter().filter(|j| include_first_step || !j.1).collect();
        let conds: Result<Vec<f64>> = jobs.par_iter().map(|&(id, boot)| Ok(self.system(&class, id, boot)?.cond)).collect();
        Ok(conds?.into_iter().fold(0.0, f64::max))
    }
}

fn cf_jobs(class: &NodeClassification) -> Vec<(NodeId, bool)> {
    let mut jobs = vec![];
    for parity in [Parity::Primal, Parity::Dual] {
        for i in class.cf_nodes(parity) {
            jobs.push((NodeId { parity, index: i }, false));
            if parity == Parity::Dual {
                jobs.push((NodeId { parity, index: i }, true));
            }
        }
    }
    jobs
}

#[derive(Clone, Debug, Default)]
pub struct SetupStats {
    pub cf_primal: usize,
    pub cf_dual: usize,
    pub max_cond: f64,
}

pub struct Solver {
    pub setup: Setup,
    pub class: NodeClassification,
    pub driver: Arc<dyn ExactSolution>,
    pub stats: SetupStats,
    op: HalfStepOperator,
    primal_maps: Vec<CfMap>,
    dual_maps: Vec<CfMap>,
    boot_maps: Vec<CfMap>,
    primal: FieldState,
    dual: FieldState,
    scratch_p: FieldState,
    scratch_d: FieldState,
    step: usize,
}

impl Solver {
    pub fn new(setup: Setup, driver: Arc<dyn ExactSolution>) -> Result<Self> {
        setup.mats.validate()?;
        if !(1..=2).contains(&setup.cfm.m) {
            return Err(Error::Config(format!("m must be 1 or 2, got {}", setup.cfm.m)));
        }
        if driver.dims() != setup.mesh.dims {
            return Err(Error::Config("driver and mesh dimensions differ".into()));
        }
        let class = setup.classify()?;
        let cell_maps = setup.cell_maps()?;
        let jobs = cf_jobs(&class);
        let built: Result<Vec<(NodeId, bool, f64, CfMap)>> = jobs
            .par_iter()
            .map(|&(id, boot)| {
                let sys = setup.system(&class, id, boot)?;
                let map = precompute_map(&sys, &setup.mesh, &cell_maps, Some(driver.as_ref()))?;
                Ok((id, boot, sys.cond, map))
            })
            .collect();
        let mut stats = SetupStats::default();
        let (mut pm, mut dm, mut bm) = (vec![], vec![], vec![]);
        for (id, boot, cond, map) in built? {
            stats.max_cond = stats.max_cond.max(cond);
            match (id.parity, boot) {
                (Parity::Primal, _) => {
                    stats.cf_primal += 1;
                    pm.push(map)
                }
                (Parity::Dual, false) => {
                    stats.cf_dual += 1;
                    dm.push(map)
                }
                (Parity::Dual, true) => bm.push(map),
            }
        }
        let m = setup.cfm.m;
        let mesh = &setup.mesh;
        let op = HalfStepOperator::new(mesh, m, &setup.mats)?;
        let primal = FieldState::zeros(mesh, m, Parity::Primal, 0.0);
        let dual = FieldState::zeros(mesh, m, Parity::Dual, 0.0);
        Ok(Self {
            scratch_p: primal.clone(),
            scratch_d: dual.clone(),
            primal,
            dual,
            op,
            primal_maps: pm,
            dual_maps: dm,
            boot_maps: bm,
            class,
            driver,
            stats,
            setup,
            step: 0,
        })
    }

    pub fn mesh(&self) -> &StaggeredMesh {
        &self.setup.mesh
    }

    /// Sets the primal data at t_0 (the dual level is produced by the first step).
    pub fn initialize(&mut self, p0: FieldState) -> Result<()> {
        if p0.parity != Parity::Primal || p0.data.len() != self.primal.data.len() {
            return Err(Error::Contract("initial state must be primal data of this mesh".into()));
        }
        self.primal = p0;
        let block = self.primal.block();
        for (i, k) in self.class.primal.iter().enumerate() {
            if !k.is_active() {
                self.primal.data[i * block..(i + 1) * block].iter_mut().for_each(|v| *v = 0.0);
            }
        }
        self.dual.data.iter_mut().for_each(|v| *v = 0.0);
        self.step = 0;
        Ok(())
    }

    /// Projects the driver's fields at time `t0` and initializes.
    pub fn initialize_exact(&mut self, t0: f64) -> Result<()> {
        let p = project_initial_data(self.driver.as_ref(), &self.setup.mesh, &self.class, self.setup.cfm.m, t0)?;
        self.initialize(p)
    }

    pub fn primal(&self) -> &FieldState {
        &self.primal
    }

    pub fn dual(&self) -> &FieldState {
        &self.dual
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.primal.time
    }

    fn apply_maps(maps: &[CfMap], recent: &FieldState, old: &FieldState, driver: &dyn ExactSolution, t: f64, target: &mut FieldState) {
        let block = target.block();
        let outs: Vec<(usize, Vec<f64>)> = maps
            .par_iter()
            .map(|map| {
                let mut out = vec![0.0; block];
                map.apply(recent, old, Some(driver), t, &mut out);
                (map.node.index, out)
            })
            .collect();
        for (i, v) in outs {
            target.node_mut(i).copy_from_slice(&v);
        }
    }

    /// One full step from (P_n, D_{n-1/2}) into (`out_p`, `out_d`) =
    /// (P_{n+1}, D_{n+1/2}). `first` selects the start-up dual maps.
    pub fn advance(&self, primal: &FieldState, dual: &FieldState, first: bool, out_p: &mut FieldState, out_d: &mut FieldState) -> Result<()> {
        let mesh = &self.setup.mesh;
        let driver = self.driver.as_ref();
        let t_half = primal.time + 0.5 * mesh.dt;
        self.op.apply(mesh, &self.class, primal, out_d)?;
        let dual_maps = if first { &self.boot_maps } else { &self.dual_maps };
        Self::apply_maps(dual_maps, primal, dual, driver, t_half, out_d);
        out_d.time = t_half;
        self.op.apply(mesh, &self.class, out_d, out_p)?;
        let t_new = primal.time + mesh.dt;
        Self::apply_maps(&self.primal_maps, out_d, primal, driver, t_new, out_p);
        out_p.time = t_new;
        Ok(())
    }

    /// One full step t_n → t_{n+1} through the dual level t_{n+1/2}.
    pub fn step(&mut self) -> Result<()> {
        let mut sp = std::mem::replace(&mut self.scratch_p, FieldState::empty());
        let mut sd = std::mem::replace(&mut self.scratch_d, FieldState::empty());
        let res = self.advance(&self.primal, &self.dual, self.step == 0, &mut sp, &mut sd);
        self.scratch_p = std::mem::replace(&mut self.primal, sp);
        self.scratch_d = std::mem::replace(&mut self.dual, sd);
        res?;
        self.step += 1;
        if !self.primal.data.iter().all(|v| v.is_finite()) {
            return Err(Error::Instability { step: self.step, norm: f64::INFINITY });
        }
        Ok(())
    }

    /// Steps until t ≥ t_final - Δt/100; returns the number of steps taken.
    pub fn run_to(&mut self, t_final: f64) -> Result<usize> {
        let n = steps_for(t_final, self.setup.mesh.dt);
        for _ in 0..n.saturating_sub(self.step) {
            self.step()?;
        }
        Ok(n)
    }

    pub fn has_dual_cf(&self) -> bool {
        !self.dual_maps.is_empty()
    }
}

pub fn steps_for(t_final: f64, dt: f64) -> usize {
    (t_final / dt - 1e-2).ceil().max(0.0) as usize
}
