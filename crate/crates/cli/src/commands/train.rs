//! `synthseg train`: train the point-wise classifier over the prefetch
//! pipeline and write the model checkpoint plus the training log.

use std::path::PathBuf;

use clap::Args;
use synthseg_core::manifest::DatasetManifest;
use synthseg_core::model::{format_log, train, FeatureParams, TrainConfig};
use synthseg_core::sampler::{split_manifest, SplitSpec};

use super::{echo_config, manifest_taxonomy_name, parse_classes, resolve_taxonomy, CmdError, CmdResult};
use crate::config::PipeArgs;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training manifest (split 80/20 unless --val-manifest is given)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Separate validation manifest; disables the automatic split
    #[arg(long)]
    pub val_manifest: Option<PathBuf>,
    /// Train fraction of the automatic split
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Where the model checkpoint is written
    #[arg(long)]
    pub model_out: PathBuf,
    /// Training log CSV (default: model path with .csv extension)
    #[arg(long)]
    pub log_out: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub epochs: u32,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.7)]
    pub lr_decay: f64,
    #[arg(long, default_value_t = 10)]
    pub decay_interval: u32,
    /// Batches per epoch; 0 means one per training frame
    #[arg(long, default_value_t = 0)]
    pub batches_per_epoch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Neighborhood radius for features, meters
    #[arg(long, default_value_t = 0.8)]
    pub feature_radius: f64,
    /// Disable inverse-frequency class weighting
    #[arg(long)]
    pub no_class_weights: bool,
    /// Classes scored in the validation mIoU (names or ids, comma separated)
    #[arg(long)]
    pub scored_classes: Option<String>,
    /// Custom taxonomy file when the manifest taxonomy is not built in
    #[arg(long)]
    pub taxonomy_file: Option<PathBuf>,
    #[command(flatten)]
    pub pipe: PipeArgs,
}

/// Saves a manifest outside its dataset directory by absolutizing every
/// file path first.
fn save_absolute(manifest: &DatasetManifest, path: &std::path::Path) -> CmdResult {
    let entries = manifest
        .entries()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.ply = manifest.resolve(&e.ply);
            e.depth = manifest.resolve(&e.depth);
            e.semantic = manifest.resolve(&e.semantic);
            e.color = manifest.resolve(&e.color);
            e
        })
        .collect();
    let parent = path.parent().unwrap_or(std::path::Path::new("."));
    DatasetManifest::new(parent, entries).save(path)?;
    Ok(())
}

pub fn run(args: &TrainArgs) -> CmdResult {
    let pipe = args.pipe.resolve()?;
    echo_config(
        "train",
        &[
            ("manifest", args.manifest.display().to_string()),
            (
                "val_manifest",
                args.val_manifest
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| format!("split:{}@{}", args.train_fraction, args.split_seed)),
            ),
            ("model_out", args.model_out.display().to_string()),
            ("epochs", args.epochs.to_string()),
            ("hidden", args.hidden.to_string()),
            ("lr", args.lr.to_string()),
            ("lr_decay", format!("{}@{}", args.lr_decay, args.decay_interval)),
            ("batches_per_epoch", args.batches_per_epoch.to_string()),
            ("seed", args.seed.to_string()),
            ("feature_radius", args.feature_radius.to_string()),
            ("class_weights", (!args.no_class_weights).to_string()),
            ("modality", pipe.modality.as_str().to_string()),
            ("sample_size", pipe.sample_size.to_string()),
            ("queue_limit", pipe.queue_limit.to_string()),
            ("buffer_limit", pipe.buffer_limit.to_string()),
            ("poll_interval_s", pipe.poll_interval.as_secs_f64().to_string()),
        ],
    );

    let full = DatasetManifest::load(&args.manifest)?;
    let (train_m, val_m) = match &args.val_manifest {
        Some(path) => (full, DatasetManifest::load(path)?),
        None => {
            let (train_m, val_m) = split_manifest(
                &full,
                &SplitSpec { train_fraction: args.train_fraction, seed: args.split_seed },
            )?;
            // Persist the split next to the model (absolute paths, since
            // these manifests do not live in the dataset directory).
            save_absolute(&train_m, &args.model_out.with_extension("train.tsv"))?;
            save_absolute(&val_m, &args.model_out.with_extension("val.tsv"))?;
            (train_m, val_m)
        }
    };
    println!("split: {} train frames, {} validation frames", train_m.len(), val_m.len());

    let name = manifest_taxonomy_name(&train_m)?;
    let taxonomy = resolve_taxonomy(&name, args.taxonomy_file.as_deref())?;
    let scored = match &args.scored_classes {
        Some(spec) => Some(parse_classes(spec, &taxonomy)?),
        None => None,
    };

    let config = TrainConfig {
        hidden: args.hidden,
        learning_rate: args.lr,
        lr_decay: args.lr_decay,
        decay_interval: args.decay_interval,
        max_epochs: args.epochs,
        batches_per_epoch: args.batches_per_epoch,
        sample_size: pipe.sample_size,
        modality: pipe.modality,
        feature_params: FeatureParams {
            radius: args.feature_radius,
            ..FeatureParams::default()
        },
        seed: args.seed,
        class_weighting: !args.no_class_weights,
        queue_limit: pipe.queue_limit,
        buffer_limit: pipe.buffer_limit,
        poll_interval: pipe.poll_interval,
        scored_classes: scored,
        ..TrainConfig::default()
    };

    let (model, log) = train(&train_m, &val_m, &taxonomy, &config)?;
    for entry in &log {
        println!(
            "epoch {:>3}  loss {:>10.6}  val_miou {:.4}",
            entry.epoch, entry.loss, entry.val_miou
        );
    }
    model.save(&args.model_out)?;
    let log_path = args
        .log_out
        .clone()
        .unwrap_or_else(|| args.model_out.with_extension("csv"));
    synthseg_core::io::write_atomic(&log_path, format_log(&log).as_bytes())
        .map_err(|e| CmdError::Data(e.to_string()))?;
    println!(
        "model written to {} ({} epochs, final val mIoU {:.4}); log at {}",
        args.model_out.display(),
        log.len(),
        log.last().map(|e| e.val_miou).unwrap_or(0.0),
        log_path.display()
    );
    Ok(())
}
