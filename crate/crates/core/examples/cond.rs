//! Largest condition number of the correction-function systems against c_H.

use htcfm::config::preset;
use htcfm::runner;

fn main() -> htcfm::Result<()> {
    for name in ["stability1d", "stability2d"] {
        let mut cfg = preset(name)?;
        cfg.n = vec![25, 50];
        cfg.c_h_list = vec![0.5, 0.1, 0.02];
        for r in runner::cond_sweep(&cfg)? {
            println!("{name}  h = {:.4e}  c_H = {:<5} kappa = {:.3e}", r.h, r.c_h, r.max_cond);
        }
    }
    Ok(())
}
