//! Command-line front end: one command per process, artifacts to `--out` or stdout, logs to stderr.
//!
//! Exit status: 0 success, 2 bad arguments or config, 3 invariant violation, 4 resource cap, 1 otherwise.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cantor_scenery::SystemConfig;
use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "cantor-scenery", version, about = "Hyperbolic Cantor sets, their scaling function and scenery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the contraction pair and report its distortion certificates (JSON).
    Validate,
    /// Cylinder intervals of one level (CSV: word, left, right, length).
    Levels,
    /// Scaling table (CSV: dual_word, l, g, r, err_bound; JSON table if --out ends in .json).
    Scaling,
    /// Ratio Cantor set endpoints for a past (CSV).
    Ratioset,
    /// Hausdorff dimension (JSON: d, bracket, depth).
    Dimension,
    /// Rescaled cylinder sets against limit sets along a Gibbs point (CSV: n, d_C, d_H, d_M, bound).
    Scenery,
    /// C¹ convergence of the renormalized maps along a past (CSV: n, d_C, bound, logs).
    Converge,
    /// Conjugacy between a conjugated system and its base, built gap by gap (CSV: x, value, dvalue).
    Rigidity,
    /// Time averages of a set functional along the scenery process (CSV).
    Simulate,
    /// Print the merged configuration as JSON.
    Config,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Levels => "levels",
            Command::Scaling => "scaling",
            Command::Ratioset => "ratioset",
            Command::Dimension => "dimension",
            Command::Scenery => "scenery",
            Command::Converge => "converge",
            Command::Rigidity => "rigidity",
            Command::Simulate => "simulate",
            Command::Config => "config",
        }
    }
}

/// Flags override the values read from `--config`.
#[derive(Args)]
struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// System family: middle-third, linear, perturbed, conjugated.
    #[arg(long, global = true)]
    system: Option<String>,
    /// Comma-separated family parameters.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    params: Option<Vec<f64>>,
    /// Base family of a conjugated system (default middle-third).
    #[arg(long, global = true)]
    base: Option<String>,
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    base_params: Option<Vec<f64>>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    est_depth: Option<usize>,
    #[arg(long, global = true)]
    table_depth: Option<usize>,
    #[arg(long, global = true)]
    max_n: Option<usize>,
    #[arg(long, global = true)]
    depth_cap: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Past symbols y_{-n} ... y_{-1}, most recent last.
    #[arg(long, global = true)]
    past: Option<String>,
    /// Persisted scaling table (JSON) for `ratioset`.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Gap seed for `rigidity`: form or affine.
    #[arg(long, global = true)]
    gap_seed: Option<String>,
    /// Set functional for `simulate`.
    #[arg(long, global = true)]
    functional: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Plot-ready CSV with a subset of the columns.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
}

fn family(name: &str, params: Option<Vec<f64>>) -> SystemConfig {
    let mut c = SystemConfig::new(name, &[]);
    if let Some(p) = params {
        c.params = p;
    }
    c
}

fn merge(flags: Flags) -> anyhow::Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(name) = flags.system.as_deref() {
        let mut sys = family(name, flags.params.clone());
        if name == "conjugated" {
            let base = family(flags.base.as_deref().unwrap_or("middle-third"), flags.base_params.clone());
            sys = SystemConfig::conjugated(base, sys.params.first().copied().unwrap_or(0.0));
        }
        cfg.system = sys;
    } else if let Some(p) = flags.params {
        cfg.system.params = p;
    }
    if flags.system.is_none() && (flags.base.is_some() || flags.base_params.is_some()) {
        anyhow::bail!(ConfigError("--base needs --system conjugated".into()));
    }
    if let Some(bits) = flags.precision_bits {
        cfg.system = cfg.system.clone().with_precision(bits);
    }
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = flags.$f { cfg.$f = v; } )* };
    }
    set!(depth, est_depth, table_depth, max_n, depth_cap, tol, seed, steps, gap_seed);
    macro_rules! set_opt {
        ($($f:ident),*) => { $( if flags.$f.is_some() { cfg.$f = flags.$f; } )* };
    }
    set_opt!(past, table, functional, out, plot);
    Ok(cfg)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<cantor_scenery::Error>() {
        Some(e) if e.is_invariant_violation() => 3,
        Some(e) if e.is_resource_cap() => 4,
        Some(cantor_scenery::Error::Parameter(_) | cantor_scenery::Error::InvalidSymbol(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command;
    let result = merge(cli.flags).and_then(|cfg| match command {
        Command::Config => {
            cfg.validate()?;
            let dump = RunConfig { out: None, plot: None, ..cfg.clone() };
            output::write(cfg.out.as_deref(), &(dump.to_json() + "\n"))
        }
        c => commands::run(c.name(), &cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
