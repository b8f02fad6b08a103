//! `synthseg bench-pipe`: measure prefetched vs synchronous batch loading
//! throughput with injected per-frame disk latency and a simulated
//! per-batch training step.

use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use synthseg_core::batchpipe::{bench_prefetch, PipeConfig};
use synthseg_core::manifest::DatasetManifest;

use super::{echo_config, CmdResult};
use crate::config::PipeArgs;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset manifest to stream batches from
    #[arg(long)]
    pub manifest: PathBuf,
    /// Injected disk latency per frame load, milliseconds
    #[arg(long, default_value_t = 5.0)]
    pub latency_ms: f64,
    /// Simulated training work per batch, milliseconds
    #[arg(long, default_value_t = 5.0)]
    pub train_ms: f64,
    /// Batches per measured loop
    #[arg(long, default_value_t = 200)]
    pub batches: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub pipe: PipeArgs,
}

pub fn run(args: &BenchArgs) -> CmdResult {
    let pipe = args.pipe.resolve()?;
    echo_config(
        "bench-pipe",
        &[
            ("manifest", args.manifest.display().to_string()),
            ("latency_ms", args.latency_ms.to_string()),
            ("train_ms", args.train_ms.to_string()),
            ("batches", args.batches.to_string()),
            ("queue_limit", pipe.queue_limit.to_string()),
            ("buffer_limit", pipe.buffer_limit.to_string()),
            ("sample_size", pipe.sample_size.to_string()),
            ("modality", pipe.modality.as_str().to_string()),
        ],
    );
    let manifest = DatasetManifest::load(&args.manifest)?;
    let config = PipeConfig {
        queue_limit: pipe.queue_limit,
        buffer_limit: pipe.buffer_limit,
        poll_interval: pipe.poll_interval,
        sample_size: pipe.sample_size,
        modality: pipe.modality,
        rng_seed: args.seed,
        producers: 1,
        io_delay: Duration::from_secs_f64(args.latency_ms / 1000.0),
    };
    let report = bench_prefetch(
        &manifest,
        config,
        args.batches,
        Duration::from_secs_f64(args.train_ms / 1000.0),
    )?;
    println!(
        "synchronous: {:.1} batches/s",
        report.synchronous_batches_per_sec
    );
    println!(
        "prefetched:  {:.1} batches/s",
        report.prefetched_batches_per_sec
    );
    println!("speedup: {:.2}x", report.speedup());
    Ok(())
}
