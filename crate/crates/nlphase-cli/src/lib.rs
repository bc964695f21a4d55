//! Command-line experiment runner for `nlphase`.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check, 2 on a
//! configuration error and 3 on a runtime error.

pub mod commands;
pub mod config;
pub mod output;
pub mod tolerances;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use config::{Command, ExperimentConfig};
use tolerances::Tolerances;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "nlphase", version, about = "Nonlocal phase-field experiments")]
struct Cli {
    /// Experiment config (key = value with [sections]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to $NLPHASE_OUT/<command>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// File of tolerance = value overrides.
    #[arg(long = "tolerance-overrides", global = true)]
    tolerance_overrides: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Moments, hypothesis checks and far-field integral of a kernel.
    KernelInfo,
    /// Energy of a test field, with the fast/direct oracle on small grids.
    Energy,
    /// Surface tension over a set of directions.
    CellSweep,
    /// Recovery sequences for a flat or square interface.
    GammaLimsup,
    /// Constrained minimization along an ε schedule.
    GammaLiminf,
    /// Shell-selection gluing on the matched flat instance.
    ModifyDemo,
    /// Line-slicing identity by Monte Carlo.
    SliceCheck,
    /// Tube measures against the Steiner bound.
    SteinerCheck,
    /// Skeleton-tube energy against δ.
    SkeletonSweep,
    /// Run the command named in the config file.
    Run,
    /// Check a config file without running it.
    Validate {
        path: Option<PathBuf>,
    },
}

impl Sub {
    fn command(&self) -> Option<Command> {
        Some(match self {
            Sub::KernelInfo => Command::KernelInfo,
            Sub::Energy => Command::Energy,
            Sub::CellSweep => Command::CellSweep,
            Sub::GammaLimsup => Command::GammaLimsup,
            Sub::GammaLiminf => Command::GammaLiminf,
            Sub::ModifyDemo => Command::ModifyDemo,
            Sub::SliceCheck => Command::SliceCheck,
            Sub::SteinerCheck => Command::SteinerCheck,
            Sub::SkeletonSweep => Command::SkeletonSweep,
            Sub::Run | Sub::Validate { .. } => return None,
        })
    }
}

fn load(path: Option<&Path>, command: Option<Command>) -> Result<ExperimentConfig, String> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            ExperimentConfig::from_text(&text, command).map_err(|d| format!("{}: {d}", p.display()))
        }
        None => match command {
            Some(c) => Ok(ExperimentConfig::defaults(c)),
            None => Err("run needs --config PATH".into()),
        },
    }
}

fn output_dir(cli_out: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    cli_out.or_else(|| cfg.out.clone()).unwrap_or_else(|| {
        let root = std::env::var_os("NLPHASE_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("nlphase-out"));
        root.join(cfg.command.name())
    })
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };

    if let Sub::Validate { path } = &cli.cmd {
        let Some(p) = path.as_ref().or(cli.config.as_ref()) else {
            eprintln!("config error: validate needs a path");
            return EXIT_CONFIG;
        };
        return match load(Some(p), None) {
            Ok(cfg) => {
                println!("valid: {} ({})", p.display(), cfg.command);
                EXIT_PASS
            }
            Err(e) => {
                eprintln!("config error: {e}");
                EXIT_CONFIG
            }
        };
    }

    let mut cfg = match load(cli.config.as_deref(), cli.cmd.command()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("config error: --threads must be positive");
            return EXIT_CONFIG;
        }
        cfg.threads = Some(t);
    }
    let tol = match &cli.tolerance_overrides {
        Some(p) => match std::fs::read_to_string(p).map_err(|e| e.to_string()).and_then(|t| Tolerances::default().with_overrides(&t).map_err(|d| d.to_string())) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("config error: {}: {e}", p.display());
                return EXIT_CONFIG;
            }
        },
        None => Tolerances::default(),
    };
    if let Some(t) = cfg.threads {
        // A global pool may already exist when called repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let dir = output_dir(cli.out, &cfg);

    let outcome = commands::run(&cfg, &tol);
    let status = output::status(&outcome);
    for c in &outcome.checks {
        println!("{} {} = {} ({} {:?})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.relation, c.threshold);
    }
    if let Some(e) = &outcome.error {
        eprintln!("runtime error: {e}");
    }
    if let Err(e) = output::write_all(&dir, &cfg, &tol, &outcome, cli.config.as_deref()) {
        eprintln!("runtime error: cannot write {}: {e}", dir.display());
        return EXIT_RUNTIME;
    }
    println!("{} {status}: {}", cfg.command, dir.display());
    match status {
        "pass" => EXIT_PASS,
        "fail" => EXIT_FAIL,
        _ => EXIT_RUNTIME,
    }
}
