//! Self-convergence against a fine-mesh reference for the boundary pulse
//! scattering off a dielectric disk (coarse version).

use htcfm::config::preset;
use htcfm::runner;

fn main() -> htcfm::Result<()> {
    let mut cfg = preset("pulse")?;
    cfg.t_final = 0.6;
    cfg.n = vec![25, 50];
    cfg.reference_n = Some(100);
    let (rep, reference) = runner::self_converge(&cfg)?;
    println!("reference h = {:.4e}", reference.mesh().h);
    for p in &rep.points {
        println!("h = {:.4e}  err = {:.4e}", p.h, p.errors.combined);
    }
    println!("observed rate {:.2}", rep.rate);
    Ok(())
}
