//! `synthseg fuse`: back-project each frame's depth image and fuse the
//! aligned semantic and color images onto it, producing a dataset of
//! labeled, colored camera clouds.

use std::path::PathBuf;

use clap::Args;
use synthseg_core::fusion;
use synthseg_core::manifest::DatasetManifest;
use synthseg_core::synthworld::FrameMeta;

use super::{copy_side_file, echo_config, CmdResult};

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Input dataset manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output dataset directory
    #[arg(long)]
    pub out: PathBuf,
    /// Reject points whose projected depth differs from the depth image by
    /// more than this many meters (occlusion filter, off by default)
    #[arg(long)]
    pub depth_filter: Option<f64>,
}

pub fn run(args: &FuseArgs) -> CmdResult {
    echo_config(
        "fuse",
        &[
            ("manifest", args.manifest.display().to_string()),
            ("out", args.out.display().to_string()),
            (
                "depth_filter",
                args.depth_filter.map(|v| v.to_string()).unwrap_or_else(|| "off".into()),
            ),
        ],
    );
    let manifest = DatasetManifest::load(&args.manifest)?;
    std::fs::create_dir_all(&args.out)?;

    let mut entries = Vec::with_capacity(manifest.len());
    for entry in manifest.entries() {
        let meta = FrameMeta::load(&manifest.meta_path(entry))?;
        let depth = synthseg_core::io::read_pgm16(&manifest.resolve(&entry.depth))?;
        let semantic = synthseg_core::io::read_pgm8(&manifest.resolve(&entry.semantic))?;
        let color = synthseg_core::io::read_ppm(&manifest.resolve(&entry.color))?;

        let cloud = fusion::backproject(&depth, &meta.intrinsics, &meta.camera_pose)?;
        let fused = match args.depth_filter {
            Some(max_gap) => fusion::fuse_with_depth_check(
                &cloud,
                &semantic,
                &color,
                &depth,
                max_gap,
                &meta.intrinsics,
                &meta.camera_pose,
            )?,
            None => fusion::fuse(&cloud, &semantic, &color, &meta.intrinsics, &meta.camera_pose)?,
        }
        .with_taxonomy(entry.taxonomy.clone());

        synthseg_core::io::write_ply(&fused, &args.out.join(&entry.ply))?;
        for side in [&entry.depth, &entry.semantic, &entry.color] {
            copy_side_file(&manifest.resolve(side), &args.out.join(side))?;
        }
        copy_side_file(
            &manifest.meta_path(entry),
            &args.out.join(entry.ply.with_extension("meta")),
        )?;

        let mut updated = entry.clone();
        updated.point_count = fused.len() as u64;
        entries.push(updated);
    }

    let fused_manifest = DatasetManifest::new(&args.out, entries);
    fused_manifest.save(&args.out.join("manifest.tsv"))?;
    let points: u64 = fused_manifest.entries().iter().map(|e| e.point_count).sum();
    println!(
        "fused {} frames ({points} points) into {}",
        fused_manifest.len(),
        args.out.display()
    );
    Ok(())
}
