//! Command-line pipeline: simulate, build-map, localize, evaluate and
//! denoise, all driven by one JSON [`RunConfig`].

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

pub use commands::{
    build_map, denoise, evaluate, localize, simulate, BuildMapInputs, EvaluateInputs, LocalizeInputs,
    DIAGNOSTICS_FILE, EDGE_FILE, SCANS_FILE, TRAJECTORY_FILE, WORLD_FILE,
};
pub use config::{MapConfig, RunConfig, SeedStream};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "GRIDLOC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gridloc", version, about = "Reflectivity-edge mapping and localization on simulated LIDAR")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Lut,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a world, a trajectory and the scans along it.
    Simulate,
    /// Build the global edge map from a registered survey.
    BuildMap {
        /// Defaults to scans.csv in the output directory.
        #[arg(long)]
        scans: Option<PathBuf>,
        /// Defaults to trajectory.csv in the output directory.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Denoise the fused gradients.
        #[arg(long)]
        denoise: bool,
        /// Overrides the configured sparsity weight.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Localize a drive against a global edge map.
    Localize {
        /// Defaults to edge.grd in the output directory.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Defaults to scans.csv in the output directory.
        #[arg(long)]
        scans: Option<PathBuf>,
        /// Defaults to trajectory.csv in the output directory.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Odometry only.
        #[arg(long)]
        disable_registration: bool,
    },
    /// Whitening and localization error reports.
    Evaluate {
        /// Survey scans for the whitening report.
        #[arg(long)]
        scans: Option<PathBuf>,
        /// Localizer diagnostics for the RMSE report.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        /// Add a calibration baseline column.
        #[arg(long, value_enum)]
        compare: Option<Baseline>,
    },
    /// Denoise a saved edge map.
    Denoise {
        /// Defaults to edge.grd in the output directory.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Overrides the configured sparsity weight.
        #[arg(long)]
        lambda: Option<f64>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Input(_) | Error::Format { .. } | Error::Io { .. } | Error::Csv(_) | Error::GeometryMismatch(_) => {
            EXIT_INPUT
        }
        Error::EmptyDistribution | Error::InsufficientOverlap { .. } => EXIT_RUNTIME,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // a pool built earlier in the process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_config(common: &Common) -> Result<RunConfig, Error> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    let mut cfg = load_config(&cli.common)?;
    let default_input = |given: Option<PathBuf>, name: &str| given.unwrap_or_else(|| cfg.output_dir.join(name));
    match cli.command {
        Command::Simulate => simulate(&cfg),
        Command::BuildMap {
            scans,
            trajectory,
            denoise,
            lambda,
        } => {
            let inputs = BuildMapInputs {
                scans: default_input(scans, SCANS_FILE),
                trajectory: default_input(trajectory, TRAJECTORY_FILE),
            };
            cfg.map.denoise |= denoise;
            if let Some(l) = lambda {
                cfg.map.fista.lambda = l;
            }
            cfg.validate()?;
            build_map(&cfg, &inputs).map(drop)
        }
        Command::Localize {
            map,
            scans,
            trajectory,
            disable_registration,
        } => {
            let inputs = LocalizeInputs {
                map: default_input(map, EDGE_FILE),
                scans: default_input(scans, SCANS_FILE),
                trajectory: default_input(trajectory, TRAJECTORY_FILE),
            };
            cfg.filter.disable_registration |= disable_registration;
            localize(&cfg, &inputs).map(drop)
        }
        Command::Evaluate {
            scans,
            diagnostics,
            compare,
        } => {
            let inputs = EvaluateInputs {
                scans,
                diagnostics,
                compare_lut: compare == Some(Baseline::Lut),
            };
            evaluate(&cfg, &inputs).map(drop)
        }
        Command::Denoise { map, lambda } => {
            let map = default_input(map, EDGE_FILE);
            if let Some(l) = lambda {
                cfg.map.fista.lambda = l;
            }
            cfg.map.fista.validate()?;
            denoise(&cfg, &map).map(drop)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
