//! Scattering by a magnetic dielectric cylinder: field error and the jump of
//! Hx across the material interface against the series solution.

use htcfm::config::preset;
use htcfm::runner;

fn main() -> htcfm::Result<()> {
    let mut cfg = preset("mie")?;
    cfg.t_final = 0.5;
    let n = std::env::args().nth(1).map_or(60, |s| s.parse().expect("cells"));
    let out = runner::run(&cfg, n)?;
    let exact = cfg.driver()?;
    println!("h = {:.4e}  combined error {:.4e}", out.solver.mesh().h, out.errors.map_or(f64::NAN, |e| e.combined));
    let j = runner::circle_jump(&out.solver, exact.as_ref(), [0.0, 0.0], 0.6, 10, 0)?;
    for ((x, a), b) in j.points.iter().zip(&j.numeric).zip(&j.exact) {
        println!("({:+.3}, {:+.3})  [Hx] numeric {a:+.5e}  exact {b:+.5e}", x[0], x[1]);
    }
    println!("relative jump error {:.3e}", j.rel_error);
    Ok(())
}
