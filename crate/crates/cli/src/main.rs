mod adapt;
mod cluster;
mod complete;
mod config;
mod dist;
mod files;
mod gda;
mod generate;
mod grnet;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use grasslearn::{Error, ErrorClass};

use crate::report::Context;

/// Learning on Grassmann manifolds: subspace distances, clustering, matrix
/// completion, domain adaptation, discriminant analysis and a small subspace network.
///
/// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
/// 3 numerical failure (or a failed self-test).
#[derive(Parser, Debug)]
#[command(name = "grasslearn", version)]
struct Cli {
    /// Seed for every random choice in the run; recorded in the report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// JSON object of flag values, keys in snake_case; flags on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    /// Repeat for more log output (info, debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Principal angles and all six distances between two subspaces.
    Dist(dist::DistArgs),
    /// Spectral, sparse spectral or Grassmann k-means clustering.
    Cluster(cluster::ClusterArgs),
    /// Low-rank matrix completion by subspace search.
    Complete(complete::CompleteArgs),
    /// Unsupervised domain adaptation by subspace interpolation.
    Adapt(adapt::AdaptArgs),
    /// Kernel discriminant analysis on labeled subspaces.
    Gda(gda::GdaArgs),
    /// Train or evaluate a subspace network.
    #[command(subcommand)]
    Grnet(grnet::GrnetCommand),
    /// Same as `grnet train`.
    #[command(name = "grnet-train")]
    GrnetTrain(grnet::TrainArgs),
    /// Same as `grnet eval`.
    #[command(name = "grnet-eval")]
    GrnetEval(grnet::EvalArgs),
    /// Write a seeded synthetic dataset.
    #[command(subcommand)]
    Gen(generate::GenCommand),
    /// Built-in numerical self-test; prints one PASS/FAIL line per check.
    Verify,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    }
}

fn parse() -> Result<Cli, ExitCode> {
    let argv: Vec<String> = std::env::args().collect();
    let handle = |e: clap::Error| {
        let _ = e.print();
        match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                ExitCode::SUCCESS
            }
            _ => ExitCode::from(1),
        }
    };
    let cli = Cli::try_parse_from(&argv).map_err(handle)?;
    let Some(path) = cli.config.clone() else {
        return Ok(cli);
    };
    let merged = config::merge(&argv, &path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(exit_code(e.class()))
    })?;
    Cli::try_parse_from(&merged).map_err(handle)
}

fn init_threads() -> Result<usize, Error> {
    if let Ok(v) = std::env::var("GRASSLEARN_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "GRASSLEARN_THREADS must be a positive integer, got '{v}'"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn run(cli: Cli) -> Result<bool, Error> {
    let threads = init_threads()?;
    let ctx = Context::new(cli.seed, cli.report.clone(), threads);
    match cli.command {
        Command::Dist(a) => dist::run(&ctx, &a),
        Command::Cluster(a) => cluster::run(&ctx, &a),
        Command::Complete(a) => complete::run(&ctx, &a),
        Command::Adapt(a) => adapt::run(&ctx, &a),
        Command::Gda(a) => gda::run(&ctx, &a),
        Command::Grnet(grnet::GrnetCommand::Train(a)) | Command::GrnetTrain(a) => {
            grnet::train(&ctx, &a)
        }
        Command::Grnet(grnet::GrnetCommand::Eval(a)) | Command::GrnetEval(a) => {
            grnet::eval(&ctx, &a)
        }
        Command::Gen(g) => generate::run(&ctx, &g),
        Command::Verify => return verify::run(&ctx),
    }?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(exit_code(ErrorClass::Numerical)),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(e.class()))
        }
    }
}
