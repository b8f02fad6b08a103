//! `synthseg stats`: per-class labeled point counts over a dataset.

use std::path::PathBuf;

use clap::Args;
use synthseg_core::manifest::DatasetManifest;
use synthseg_core::taxonomy::histogram;

use super::{echo_config, manifest_taxonomy_name, resolve_taxonomy, CmdResult};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Custom taxonomy file when the manifest taxonomy is not built in
    #[arg(long)]
    pub taxonomy_file: Option<PathBuf>,
}

pub fn run(args: &StatsArgs) -> CmdResult {
    echo_config(
        "stats",
        &[("manifest", args.manifest.display().to_string())],
    );
    let manifest = DatasetManifest::load(&args.manifest)?;
    let name = manifest_taxonomy_name(&manifest)?;
    let taxonomy = resolve_taxonomy(&name, args.taxonomy_file.as_deref())?;

    let mut clouds = Vec::with_capacity(manifest.len());
    for entry in manifest.entries() {
        clouds.push(
            synthseg_core::io::read_ply(&manifest.resolve(&entry.ply))?
                .with_taxonomy(entry.taxonomy.clone()),
        );
    }
    let hist = histogram(&taxonomy, clouds.iter())?;
    let total = hist.total().max(1);

    let width = taxonomy
        .classes()
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    println!("{:<width$}  {:>4}  {:>12}  {:>7}", "class", "id", "points", "share");
    for class in taxonomy.classes() {
        let count = hist.counts()[class.id as usize];
        println!(
            "{:<width$}  {:>4}  {:>12}  {:>6.2}%",
            class.name,
            class.id,
            count,
            100.0 * count as f64 / total as f64
        );
    }
    println!(
        "{:<width$}  {:>4}  {:>12}",
        "total",
        "",
        hist.total()
    );
    Ok(())
}
