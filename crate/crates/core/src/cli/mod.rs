//! Configuration-driven experiment runner.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::ExperimentConfig;
pub use run::{
    exit_code, run, Command, Outcome, Provenance, SeedEntry, Status, EXIT_NUMERICAL, EXIT_OK, EXIT_PARTIAL,
    EXIT_VALIDATION, FAILURE_MARKER, PROVENANCE,
};

#[derive(Debug, Parser)]
#[command(name = "pulsesync", version, about = "Phase reduction and noise-induced synchronization of traveling pulses")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML experiment config; built-in defaults when absent.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output`).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Noise amplitude (`sync-scan` uses `sync.sigmas`).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Time step for the reduced simulation and the stochastic PDE.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Reduced simulation horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed for every stochastic command.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl Args {
    /// Effective config: file (or defaults) with flag overrides applied.
    pub fn config(&self) -> crate::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        if let Some(s) = self.sigma {
            cfg.noise.sigma = s;
        }
        if let Some(dt) = self.dt {
            cfg.sim.dt = Some(dt);
            cfg.spde.dt = dt;
        }
        if let Some(h) = self.horizon {
            cfg.sim.horizon = h;
        }
        if let Some(r) = self.reps {
            cfg.sync.reps = r;
        }
        if let Some(s) = self.seed {
            cfg.sim.seed = s;
            cfg.lyapunov.seed = s;
            cfg.sync.seed = s;
            cfg.spde.seed = s;
        }
        if let Some(t) = self.threshold {
            cfg.sync.threshold = t;
        }
        Ok(cfg)
    }
}

/// Parses the command line, runs, and returns the process exit code.
pub fn main() -> i32 {
    let args = Args::parse();
    let cfg = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("pulsesync: {e}");
            return exit_code(&e);
        }
    };
    if args.print_config {
        return match cfg.to_toml() {
            Ok(t) => {
                print!("{t}");
                EXIT_OK
            }
            Err(e) => {
                eprintln!("pulsesync: {e}");
                EXIT_VALIDATION
            }
        };
    }
    let dir = cfg.output.clone();
    match run(args.command, &cfg, &dir) {
        Ok(p) => {
            match &p.message {
                Some(m) => eprintln!("pulsesync {}: {m}", p.command),
                None => eprintln!(
                    "pulsesync {}: {:?} in {:.1} s, artifacts in {}",
                    p.command,
                    p.status,
                    p.wall_time_seconds,
                    dir.display()
                ),
            }
            p.exit_code
        }
        Err(e) => {
            eprintln!("pulsesync: cannot write artifacts: {e}");
            EXIT_NUMERICAL
        }
    }
}
