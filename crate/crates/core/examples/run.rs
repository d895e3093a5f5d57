//! One forward solve of a preset, printing the error against the closed form.
//!
//! cargo run --release --example run -- [preset] [cells]

use htcfm::config::preset;
use htcfm::runner;

fn main() -> htcfm::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = preset(args.first().map_or("sine1d", String::as_str))?;
    cfg.t_final = cfg.t_final.min(1.0);
    let n = args.get(1).map_or(Ok(cfg.n[0]), |s| s.parse()).expect("cells must be an integer");
    let out = runner::run(&cfg, n)?;
    let s = &out.solver;
    println!("h = {:.4e}, dt = {:.4e}, {} steps to t = {:.4}", s.mesh().h, s.mesh().dt, s.steps_taken(), s.time());
    if let Some(e) = out.errors {
        println!("L2 errors per field {:?}, combined {:.4e}", e.fields, e.combined);
    }
    Ok(())
}
