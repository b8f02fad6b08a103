//! `synthseg`: generate synthetic labeled scenes, fuse sensor ground truth
//! onto point clouds, remap taxonomies, train and evaluate a point-wise
//! classifier, and benchmark the batch prefetch pipeline.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

#[derive(Parser)]
#[command(
    name = "synthseg",
    version,
    about = "Synthetic LiDAR/camera scenes, sensor fusion, label remapping and point-wise segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset, or capture a scripted scenario
    Generate(commands::generate::GenerateArgs),
    /// Back-project depth images and fuse semantic/color GT into labeled clouds
    Fuse(commands::fuse::FuseArgs),
    /// Remap a dataset's labels into another taxonomy
    Remap(commands::remap::RemapArgs),
    /// Print the per-class point histogram of a dataset
    Stats(commands::stats::StatsArgs),
    /// Train the point-wise classifier over the prefetch pipeline
    Train(commands::train::TrainArgs),
    /// Evaluate a model on a labeled dataset and print IoU/mIoU
    Eval(commands::eval::EvalArgs),
    /// Label a point cloud with a trained model, colored by palette
    Predict(commands::predict::PredictArgs),
    /// Compare prefetched vs synchronous batch loading throughput
    BenchPipe(commands::bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version are not usage errors.
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let _ = err.print();
            return ExitCode::from(1);
        }
    };
    // A panic inside a command is an internal error: exit code 3.
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| match cli.command {
        Command::Generate(args) => commands::generate::run(&args),
        Command::Fuse(args) => commands::fuse::run(&args),
        Command::Remap(args) => commands::remap::run(&args),
        Command::Stats(args) => commands::stats::run(&args),
        Command::Train(args) => commands::train::run(&args),
        Command::Eval(args) => commands::eval::run(&args),
        Command::Predict(args) => commands::predict::run(&args),
        Command::BenchPipe(args) => commands::bench::run(&args),
    }))
    .unwrap_or_else(|panic| {
        let what = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".to_string());
        Err(commands::CmdError::Internal(format!("internal error: {what}")))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
