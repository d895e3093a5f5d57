use clap::{Args, Parser, Subcommand};
use htcfm::config::{preset, RunConfig};
use htcfm::runner::{self, fmt_f64};
use htcfm::Result;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "htcfm", version, about = "Hermite-Taylor correction function solver for 1D and 2D TMz Maxwell problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single run on the first mesh of `n`; writes a snapshot of the final primal fields.
    Run(Common),
    /// Errors against the closed-form solution on every mesh of `n`.
    Converge(Common),
    /// Errors against a fine reference run (`reference_n`).
    SelfConverge(Common),
    /// Long runs from random initial data with zero boundary data.
    Stability(Common),
    /// Spectral radius of the one-step operator.
    Spectrum(Common),
    /// Condition numbers of the correction systems.
    Cond(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (sine1d, cavity, mie, stability1d, stability2d, spectrum1d, pulse).
    #[arg(long)]
    preset: Option<String>,
    /// Output file (CSV). Defaults to the config's `output`, else `<subcommand>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override the polynomial degree m.
    #[arg(long)]
    m: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => return Err(htcfm::Error::Config("pass --config <file> or --preset <name>".into())),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out(&self, cfg: &RunConfig, default: &str) -> PathBuf {
        self.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| default.into())
    }
}

fn execute(cmd: Cmd) -> Result<()> {
    let (c, name) = match &cmd {
        Cmd::Run(c) => (c, "run"),
        Cmd::Converge(c) => (c, "converge"),
        Cmd::SelfConverge(c) => (c, "self-converge"),
        Cmd::Stability(c) => (c, "stability"),
        Cmd::Spectrum(c) => (c, "spectrum"),
        Cmd::Cond(c) => (c, "cond"),
    };
    if c.threads > 0 {
        // Only fails if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(c.threads).build_global();
    }
    let cfg = c.load()?;
    let out = c.out(&cfg, &format!("{name}.csv"));
    match cmd {
        Cmd::Run(_) => {
            let n = cfg.n[0];
            let r = runner::run(&cfg, n)?;
            let s = &r.solver;
            let mut meta = vec![("problem", format!("{:?}", cfg.problem)), ("max_cond", fmt_f64(s.stats.max_cond))];
            if let Some(e) = &r.errors {
                meta.push(("err_U", fmt_f64(e.combined)));
                println!("n={n} h={:.6e} t={:.6} steps={} err_U={:.6e} max_cond={:.3e}", s.mesh().h, s.time(), s.steps_taken(), e.combined, s.stats.max_cond);
            } else {
                println!("n={n} h={:.6e} t={:.6} steps={} max_cond={:.3e}", s.mesh().h, s.time(), s.steps_taken(), s.stats.max_cond);
            }
            runner::write_snapshot(&out, s, &meta)?;
        }
        Cmd::Converge(_) => {
            let rep = runner::converge(&cfg)?;
            runner::write_convergence_csv(&out, &rep)?;
            print_report(&rep);
        }
        Cmd::SelfConverge(_) => {
            let (rep, _) = runner::self_converge(&cfg)?;
            runner::write_convergence_csv(&out, &rep)?;
            print_report(&rep);
        }
        Cmd::Stability(_) => {
            let runs = runner::stability(&cfg)?;
            runner::write_stability_csv(&out, &runs)?;
            for r in &runs {
                let first = r.trace.norms[0];
                let last = *r.trace.running_max.last().unwrap_or(&first);
                println!("h={:.6e} c_h={} steps={} initial={:.3e} max={:.3e} growth={:.3}", r.h, r.c_h, r.trace.norms.len() - 1, first, last, last / first);
            }
        }
        Cmd::Spectrum(_) => {
            let rows = runner::spectrum_sweep(&cfg)?;
            runner::write_spectrum_csv(&out, &rows)?;
            for r in &rows {
                println!("h={:.6e} cfl={:.4} c_h={} m={} dim={} rho={:.16} |rho-1|={:.3e}", r.h, r.cfl, r.c_h, r.m, r.dimension, r.rho, r.distance);
            }
        }
        Cmd::Cond(_) => {
            let rows = runner::cond_sweep(&cfg)?;
            runner::write_cond_csv(&out, &rows)?;
            for r in &rows {
                println!("h={:.6e} c_h={} max_cond={:.3e}", r.h, r.c_h, r.max_cond);
            }
        }
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn print_report(rep: &htcfm::diagnostics::ConvergenceReport) {
    for (p, r) in rep.points.iter().zip(&rep.pair_rates) {
        let rate = r.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        println!("h={:.6e} err_U={:.6e} rate={rate}", p.h, p.errors.combined);
    }
    println!("least-squares rate {:.3}", rep.rate);
}

fn main() -> ExitCode {
    match execute(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
