//! The `capset` command line: argument parsing, worker pool setup, and
//! dispatch to the commands in [`commands`].

pub mod commands;
pub mod registry;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use registry::Depth;
pub use report::Report;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Core(#[from] capset_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use capset_core::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Mismatch(_) => EXIT_MISMATCH,
            CliError::Core(E::Capacity { .. }) => EXIT_CAPACITY,
            CliError::Core(E::InvariantViolation(_)) => EXIT_MISMATCH,
            CliError::Core(E::Io(_)) => EXIT_CAPACITY,
            CliError::Core(_) => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "capset", version, about = "Caps, partitions and their symmetry groups in AG(n,3)")]
pub struct Cli {
    /// Worker threads; output is identical for every value.
    #[arg(long, env = "CAPSET_JOBS", global = true)]
    pub jobs: Option<usize>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every registered check up to the given depth.
    VerifyAll {
        #[arg(long, value_enum, default_value_t = Depth::Quick)]
        depth: Depth,
        /// Seed for the sampled checks; exhaustive checks ignore it.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the canonical cap of AG(4,3), or compare it with the shipped fixture.
    Canon {
        #[arg(long)]
        check: bool,
    },
    /// Stream all maximal caps of AG(n,3) in lexicographic order.
    Enumerate {
        #[arg(long, default_value_t = 4)]
        dim: u8,
        /// Only caps with this anchor (n = 2 or 4).
        #[arg(long)]
        anchor: Option<u8>,
        #[arg(long, value_enum, default_value_t = Format::Jsonl)]
        format: Format,
        #[arg(long)]
        limit: Option<usize>,
        /// Write the caps here instead of standard output.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Classify a cap: size, completeness, anchor and, for a maximal cap of
    /// AG(4,3), the completability census of its disjoint caps.
    Classify {
        /// Cap file (defaults to the canonical cap).
        #[arg(long, value_name = "FILE")]
        cap_file: Option<PathBuf>,
    },
    /// Setwise stabilizer of a point set.
    Stabilize {
        #[arg(long, value_name = "FILE")]
        cap_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AmbientArg::Linear)]
        ambient: AmbientArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Basis)]
        method: MethodArg,
        /// Include every element in the report.
        #[arg(long)]
        list: bool,
    },
    /// Partitions through a maximal cap, or the count of all partitions
    /// with a given anchor.
    Partitions {
        #[arg(long, value_name = "FILE")]
        cap_file: Option<PathBuf>,
        /// Count every partition with this anchor instead.
        #[arg(long, value_name = "POINT", conflicts_with_all = ["cap_file", "output", "limit"])]
        count_anchor: Option<u8>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Group structure of a cap stabilizer, or the stabilizers of one partition.
    Groups {
        /// Partition record; reports its blockwise and setwise stabilizers
        /// inside the stabilizer of its base cap.
        #[arg(long, value_name = "FILE")]
        partition: Option<PathBuf>,
        /// Base cap (defaults to the canonical cap, or the least block of
        /// the partition when the canonical cap is not one of its blocks).
        #[arg(long, value_name = "FILE")]
        cap_file: Option<PathBuf>,
        /// Include the stabilizer elements.
        #[arg(long)]
        list: bool,
    },
    /// Draw a cap or partition on the 3x3 / 3x9 / 9x9 grid.
    Render {
        #[arg(value_enum)]
        target: RenderTarget,
        /// Cap file or partition record (defaults to the canonical cap, or
        /// the partitions through it).
        #[arg(long, value_name = "FILE")]
        file: Option<PathBuf>,
        /// Which partition through the canonical cap, in sorted order.
        #[arg(long, conflicts_with = "file")]
        index: Option<usize>,
        /// Also write an SVG picture here.
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Jsonl,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AmbientArg {
    Linear,
    Affine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Basis,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RenderTarget {
    Cap,
    Partition,
}

/// Where the report goes: standard output unless a command already uses it
/// for data, in which case standard error.
pub struct Output {
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub report: Report,
}

/// Parses `args`, runs the command and writes its output. Returns the exit
/// status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(&cli) {
        Ok((out, status)) => {
            let _ = std::io::stdout().write_all(&out.stdout);
            let _ = std::io::stderr().write_all(&out.stderr);
            if let Some(path) = &cli.report {
                if let Err(e) = report::write_atomic(path, out.report.to_json().as_bytes()) {
                    eprintln!("capset: {e}");
                    return e.exit_code();
                }
            }
            status
        }
        Err(e) => {
            eprintln!("capset: {e}");
            e.exit_code()
        }
    }
}

/// Runs the parsed command on a worker pool of the requested size.
pub fn execute(cli: &Cli) -> Result<(Output, u8), CliError> {
    let jobs = match cli.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| commands::dispatch(&cli.command, jobs))
}
