//! Spectral radius of the one-step operator for a few (h, c_H, CFL).

use htcfm::config::preset;
use htcfm::runner;

fn main() -> htcfm::Result<()> {
    let cfg = preset("spectrum1d")?;
    for r in runner::spectrum_sweep(&cfg)? {
        println!("h = {:.4e}  c_H = {:<5} CFL = {:<4} dim = {:4}  |rho - 1| = {:.2e}", r.h, r.c_h, r.cfl, r.dimension, r.distance);
    }
    Ok(())
}
