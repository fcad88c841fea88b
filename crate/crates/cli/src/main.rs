use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

/// Kinematic, singularity, performance and workspace analysis of the
/// Orthoglide 3-axis parallel machine.
#[derive(Debug, Parser)]
#[command(name = "orthokin", version)]
struct Cli {
    /// Machine definition (JSON). Defaults to the canonical design with L = 1.
    #[arg(long, global = true)]
    machine: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the leg length of the machine file.
    #[arg(long, global = true)]
    leg_length: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Joint values, Jacobians, singularity and performance at one point.
    Analyze {
        /// Tool point as x,y,z.
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        point: [f64; 3],
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// A performance metric sampled on a regular grid.
    Map {
        #[arg(long, value_parser = parse_region, allow_hyphen_values = true)]
        region: Option<[f64; 6]>,
        /// Samples per axis.
        #[arg(long, default_value_t = 21)]
        resolution: usize,
        #[arg(long, value_enum, default_value_t = Metric::Kappa)]
        metric: Metric,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Octree workspace: surface mesh, summary or a planar section.
    Workspace {
        #[arg(long, default_value_t = 6)]
        depth: u32,
        /// Analysis box; a cube of edge 4L around the isotropic point by default.
        #[arg(long, value_parser = parse_region, allow_hyphen_values = true)]
        region: Option<[f64; 6]>,
        #[arg(long, value_enum, default_value_t = Format::Ply)]
        format: Format,
        /// Section normal (csv format).
        #[arg(long, default_value = "z")]
        axis: orthokin::workspace::Axis,
        /// Section offset along the normal; the isotropic point by default.
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
        /// Section samples per side (csv format).
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Synthesize joint limits from the amplification bounds first.
        #[arg(long)]
        synthesize_limits: bool,
        #[command(flatten)]
        psi: PsiArgs,
    },
    /// Joint limits that keep the amplification factors within bounds.
    Limits {
        /// Samples per axis of the cube searched for the limits.
        #[arg(long, default_value_t = 11)]
        resolution: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        psi: PsiArgs,
    },
    /// Isotropy conditions at the isotropic configuration.
    Isotropy {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, Args)]
struct PsiArgs {
    /// Lower bound on the velocity amplification factors.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    psi_min: f64,
    /// Upper bound on the velocity amplification factors.
    #[arg(long, default_value_t = 3.0)]
    psi_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Ply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Kappa,
    PsiMax,
    PsiMin,
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let values: [f64; N] = values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))?;
    if values.iter().all(|v| v.is_finite()) {
        Ok(values)
    } else {
        Err("values must be finite".to_owned())
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    parse_floats(s)
}

fn parse_region(s: &str) -> Result<[f64; 6], String> {
    parse_floats(s)
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Infeasible = 2,
    InvalidInput = 3,
}

/// A failed command: what to print and how to exit.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl std::fmt::Display) -> Self {
        Self {
            status: Status::InvalidInput,
            message: message.to_string(),
        }
    }

    pub fn infeasible(message: impl std::fmt::Display) -> Self {
        Self {
            status: Status::Infeasible,
            message: message.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::invalid(format!("i/o error: {e}"))
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("ORTHOKIN_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::invalid(format!(
                "ORTHOKIN_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::invalid(format!("cannot configure thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Status::InvalidInput as u8
            } else {
                0
            });
        }
    };
    let result = configure_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(failure) => {
            eprintln!("orthokin: {}", failure.message);
            ExitCode::from(failure.status as u8)
        }
    }
}
