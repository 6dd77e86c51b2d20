//! `jodkit`: batch scaling, clustering analysis, simulation and the
//! annotation server behind one binary.
//!
//! Exit codes: 0 success, 1 input error, 2 statistical or identifiability
//! error, 3 internal error. `JODKIT_LOG` sets the log filter (default `warn`).

mod analyze;
mod error;
mod io;
mod scale;
mod serve;
mod simulate;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jodkit::consistency::AnalysisConfig;
use jodkit::{RecordFormat, ScalingConfig};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "jodkit", version, about = "Pairwise-comparison quality scaling in JOD units")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

impl From<Format> for RecordFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => RecordFormat::Csv,
            Format::Jsonl => RecordFormat::Jsonl,
        }
    }
}

#[derive(Debug, Args)]
struct RecordArgs {
    /// Comparison records of one scene (`-` reads stdin).
    #[arg(long, short)]
    input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Record encoding; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit zero-mean JOD scores with the MAP Thurstone scaler.
    Scale {
        #[command(flatten)]
        records: RecordArgs,
        /// Variance of the zero-mean score prior (JOD²).
        #[arg(long, default_value_t = ScalingConfig::default().prior_variance)]
        prior_variance: f64,
    },
    /// Bootstrap, cluster and test one scene.
    Analyze {
        #[command(flatten)]
        records: RecordArgs,
        /// Bootstrap replicates.
        #[arg(long, default_value_t = AnalysisConfig::default().replicates)]
        b: usize,
        /// Confidence level of the intervals.
        #[arg(long, default_value_t = AnalysisConfig::default().level)]
        level: f64,
        /// Significance level of the group tests.
        #[arg(long, default_value_t = AnalysisConfig::default().alpha)]
        alpha: f64,
        /// Louvain resolution.
        #[arg(long, default_value_t = AnalysisConfig::default().resolution)]
        resolution: f64,
    },
    /// Run synthetic experiments described by a TOML file.
    Simulate {
        /// Simulation config (TOML).
        #[arg(long, short)]
        input: PathBuf,
        /// Output directory.
        #[arg(long, short)]
        output: PathBuf,
        /// Encoding of the emitted records.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Host live annotation sessions over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Persist studies under this directory; in memory when omitted.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Default seed of report requests.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Default bootstrap replicates of report requests.
        #[arg(long, default_value_t = AnalysisConfig::default().replicates)]
        b: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scale { records, prior_variance } => {
            let scaling = ScalingConfig {
                prior_variance,
                ..ScalingConfig::default()
            };
            let bytes = scale::run(&records.input, records.format.map(Into::into), records.seed, scaling)?;
            io::write_output(records.output.as_deref(), &bytes)
        }
        Command::Analyze {
            records,
            b,
            level,
            alpha,
            resolution,
        } => {
            let config = AnalysisConfig {
                seed: records.seed,
                replicates: b,
                level,
                alpha,
                resolution,
                ..AnalysisConfig::default()
            };
            let bytes = analyze::run(&records.input, records.format.map(Into::into), &config)?;
            io::write_output(records.output.as_deref(), &bytes)
        }
        Command::Simulate {
            input,
            output,
            format,
            seed,
        } => simulate::run(&input, seed, &output, format.into()),
        Command::Serve { addr, data_dir, seed, b } => serve::run(
            addr,
            data_dir,
            AnalysisConfig {
                seed,
                replicates: b,
                ..AnalysisConfig::default()
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("JODKIT_LOG", "warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jodkit: {e}");
            for line in e.details() {
                eprintln!("{line}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
