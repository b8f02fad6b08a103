//! `synthseg remap`: rewrite a dataset's point labels (and semantic
//! images) in another taxonomy.

use std::path::PathBuf;

use clap::Args;
use synthseg_core::image::SemanticImage;
use synthseg_core::manifest::DatasetManifest;
use synthseg_core::taxonomy::{builtin_remap, RemapTable};

use super::{copy_side_file, echo_config, manifest_taxonomy_name, resolve_taxonomy, CmdError, CmdResult};

#[derive(Debug, Args)]
pub struct RemapArgs {
    /// Input dataset manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output dataset directory
    #[arg(long)]
    pub out: PathBuf,
    /// Source taxonomy name (defaults to the manifest's taxonomy)
    #[arg(long)]
    pub source: Option<String>,
    /// Target taxonomy name
    #[arg(long)]
    pub target: String,
    /// Custom remap table file (source_id<TAB>target_id lines); required
    /// when the pair has no built-in table
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Custom source taxonomy file (id<TAB>name<TAB>r,g,b lines)
    #[arg(long)]
    pub source_file: Option<PathBuf>,
    /// Custom target taxonomy file
    #[arg(long)]
    pub target_file: Option<PathBuf>,
}

pub fn run(args: &RemapArgs) -> CmdResult {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let source_name = match &args.source {
        Some(name) => name.clone(),
        None => manifest_taxonomy_name(&manifest)?,
    };
    echo_config(
        "remap",
        &[
            ("manifest", args.manifest.display().to_string()),
            ("out", args.out.display().to_string()),
            ("source", source_name.clone()),
            ("target", args.target.clone()),
            (
                "table",
                args.table
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "builtin".into()),
            ),
        ],
    );

    let table = match &args.table {
        Some(path) => {
            let source = resolve_taxonomy(&source_name, args.source_file.as_deref())?;
            let target = resolve_taxonomy(&args.target, args.target_file.as_deref())?;
            RemapTable::load(source, target, path)?
        }
        None => builtin_remap(&source_name, &args.target).ok_or_else(|| {
            CmdError::usage(format!(
                "no built-in remap {source_name} -> {}; provide --table",
                args.target
            ))
        })?,
    };

    std::fs::create_dir_all(&args.out)?;
    let mut entries = Vec::with_capacity(manifest.len());
    for entry in manifest.entries() {
        let cloud = synthseg_core::io::read_ply(&manifest.resolve(&entry.ply))?
            .with_taxonomy(entry.taxonomy.clone());
        let remapped = table.remap_cloud(&cloud)?;
        synthseg_core::io::write_ply(&remapped, &args.out.join(&entry.ply))?;

        // The semantic image's ids live in the source taxonomy too; remap
        // it so the written dataset is self-consistent.
        let semantic = synthseg_core::io::read_pgm8(&manifest.resolve(&entry.semantic))?;
        let mut labels = Vec::with_capacity(semantic.labels().len());
        for &id in semantic.labels() {
            labels.push(table.remap(id)?);
        }
        let remapped_semantic = SemanticImage::new(semantic.width(), semantic.height(), labels)?;
        synthseg_core::io::write_pgm8(&remapped_semantic, &args.out.join(&entry.semantic))?;

        for side in [&entry.depth, &entry.color] {
            copy_side_file(&manifest.resolve(side), &args.out.join(side))?;
        }
        copy_side_file(
            &manifest.meta_path(entry),
            &args.out.join(entry.ply.with_extension("meta")),
        )?;

        let mut updated = entry.clone();
        updated.taxonomy = table.target().name().to_string();
        entries.push(updated);
    }

    let out_manifest = DatasetManifest::new(&args.out, entries);
    out_manifest.save(&args.out.join("manifest.tsv"))?;
    println!(
        "remapped {} frames {} -> {} into {}",
        out_manifest.len(),
        table.source().name(),
        table.target().name(),
        args.out.display()
    );
    Ok(())
}
