//! `synthseg predict`: label one point cloud with a trained model and
//! write it back with the predicted labels painted in palette colors --
//! the coarse pre-labeling workflow for unlabeled captures.

use std::path::PathBuf;

use clap::Args;
use synthseg_core::model::{predict_cloud, MlpClassifier};
use synthseg_core::PointCloud;

use super::{echo_config, resolve_taxonomy, CmdResult};

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model checkpoint
    #[arg(long)]
    pub model: PathBuf,
    /// Input PLY (labels not required; colors used only by RGB-D models)
    #[arg(long)]
    pub input: PathBuf,
    /// Output PLY with predicted labels and palette colors
    #[arg(long)]
    pub output: PathBuf,
    /// Custom taxonomy file when the model's taxonomy is not built in
    #[arg(long)]
    pub taxonomy_file: Option<PathBuf>,
}

pub fn run(args: &PredictArgs) -> CmdResult {
    echo_config(
        "predict",
        &[
            ("model", args.model.display().to_string()),
            ("input", args.input.display().to_string()),
            ("output", args.output.display().to_string()),
        ],
    );
    let model = MlpClassifier::load(&args.model)?;
    let taxonomy = resolve_taxonomy(model.taxonomy_name(), args.taxonomy_file.as_deref())?;
    let cloud = synthseg_core::io::read_ply(&args.input)?;
    let predicted = predict_cloud(&model, &cloud);

    let labels = predicted.labels().unwrap().to_vec();
    let palette: Vec<_> = labels
        .iter()
        .map(|&l| taxonomy.color_of(l).unwrap_or(synthseg_core::Rgb::BLACK))
        .collect();
    let painted = PointCloud::new(
        predicted.positions().to_vec(),
        Some(palette),
        Some(labels),
        Some(taxonomy.name().to_string()),
    )
    .expect("lengths preserved");
    synthseg_core::io::write_ply(&painted, &args.output)?;
    println!(
        "labeled {} points into {}",
        painted.len(),
        args.output.display()
    );
    Ok(())
}
