//! Library-level setup without a preset: a standing wave inside a rounded
//! square given only by its signed distance, with tangential E on the
//! boundary taken from the closed form.

use htcfm::cfm::CfmOptions;
use htcfm::exact::{ExactSolution, Standing2d};
use htcfm::material::Materials;
use htcfm::mesh::{Domain, RegionRule, Shape, StaggeredMesh};
use htcfm::solver::{Setup, Solver};
use std::sync::Arc;

fn main() -> htcfm::Result<()> {
    let sdf = Arc::new(|x: [f64; 2]| {
        let q = [(x[0] - 0.5).abs() - 0.3, (x[1] - 0.5).abs() - 0.3];
        let out = q[0].max(0.0).hypot(q[1].max(0.0));
        out + q[0].max(q[1]).min(0.0) - 0.1
    });
    let setup = Setup {
        mesh: StaggeredMesh::new(2, &[0.0, 0.0], &[1.0, 1.0], &[40, 40], 0.9, false)?,
        domain: Domain { boundary: Some(Shape::Custom(sdf)), interface: None },
        mats: Materials::default(),
        cfm: CfmOptions::new(1, 0.02),
        beta: 5.0,
        rule: RegionRule::default(),
    };
    let driver: Arc<dyn ExactSolution> = Arc::new(Standing2d { omega: 2.0 });
    let mut solver = Solver::new(setup, driver.clone())?;
    println!("{} CF nodes", solver.class.cf_nodes(htcfm::mesh::Parity::Primal).len());
    solver.initialize_exact(0.0)?;
    solver.run_to(0.5)?;
    let e = htcfm::diagnostics::l2_error(solver.primal(), driver.as_ref(), solver.mesh(), &solver.class, solver.time());
    println!("t = {:.3}  combined L2 error {:.3e}", solver.time(), e.combined);
    Ok(())
}
