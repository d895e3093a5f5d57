//! Long run from random round-off sized data; prints the max-norm every 500 steps.

use htcfm::config::preset;
use htcfm::runner;

fn main() -> htcfm::Result<()> {
    let mut cfg = preset("stability1d")?;
    cfg.n = vec![50];
    cfg.m = std::env::args().nth(1).map_or(1, |s| s.parse().expect("m"));
    for run in runner::stability(&cfg)? {
        for (k, v) in run.trace.norms.iter().enumerate().step_by(500) {
            println!("step {k:5}  max norm {v:.3e}");
        }
    }
    Ok(())
}
