use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod files;

/// Exit codes: 0 success, 1 invalid solution or solver failure, 2 usage or parse error,
/// 3 size-budget refusal.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<nukc::Error> for CliError {
    fn from(e: nukc::Error) -> Self {
        let code = match e {
            nukc::Error::SizeBudget(_) => 3,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "nukc", version, about = "Non-uniform k-center solvers")]
struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Euclidean,
    RandomMetric,
    HardnessGadget,
    LayeredTree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum)]
pub enum Algo {
    Exact,
    Kcenter,
    Kcwo,
    KcwoGreedy,
    TwoRadii,
    GuessQ,
    Bicriteria,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random or gadget instance (or a layered tree dump).
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        branching: usize,
        /// Gadget weight base parameter.
        #[arg(long, default_value_t = 1)]
        c: u64,
        /// Radius classes as `k:r,k:r,...` with non-increasing r.
        #[arg(long)]
        classes: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance file and write a solution file.
    Solve {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        input: PathBuf,
        /// Guessing depth for guess-q.
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the LP at the fractional optimum in LP text format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Check a solution against an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        count_factor: f64,
        /// Defaults to the dilation recorded in the solution file, or 1.
        #[arg(long)]
        radius_factor: Option<f64>,
    },
    /// Run several algorithms over a directory of instance files and write a CSV table.
    Compare {
        #[arg(long)]
        instances: PathBuf,
        /// Comma-separated algorithm names.
        #[arg(long, value_delimiter = ',', required = true)]
        algos: Vec<Algo>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        q: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            kind,
            n,
            dim,
            depth,
            branching,
            c,
            classes,
            seed,
            out,
        } => {
            let params = commands::GenerateParams {
                kind,
                n,
                dim,
                depth,
                branching,
                c,
                classes,
                seed,
            };
            files::write(&out, &commands::generate(&params)?)
        }
        Command::Solve {
            algo,
            input,
            q,
            out,
            dump_lp,
        } => commands::solve(algo, &input, q, &out, dump_lp.as_deref()),
        Command::Validate {
            instance,
            solution,
            count_factor,
            radius_factor,
        } => commands::validate(&instance, &solution, count_factor, radius_factor),
        Command::Compare {
            instances,
            algos,
            out,
            q,
        } => commands::compare(&instances, &algos, q, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
