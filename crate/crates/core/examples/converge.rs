//! Convergence study of the 1D sine problem on short time.

use htcfm::config::preset;
use htcfm::runner;

fn main() -> htcfm::Result<()> {
    let mut cfg = preset("sine1d")?;
    cfg.m = std::env::args().nth(1).map_or(1, |s| s.parse().expect("m"));
    cfg.t_final = 1.0;
    let rep = runner::converge(&cfg)?;
    for (p, r) in rep.points.iter().zip(&rep.pair_rates) {
        println!("h = {:.4e}  err = {:.4e}  rate = {}", p.h, p.errors.combined, r.map_or("-".into(), |r| format!("{r:.2}")));
    }
    println!("least-squares rate over the three finest meshes: {:.2}", rep.tail_rate(3)?);
    Ok(())
}
