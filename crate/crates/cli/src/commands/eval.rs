//! `synthseg eval`: run a model over every labeled cloud of a dataset and
//! print the per-class IoU table and mIoU.

use std::path::PathBuf;

use clap::Args;
use synthseg_core::manifest::DatasetManifest;
use synthseg_core::metrics::ConfusionMatrix;
use synthseg_core::model::{predict_cloud, MlpClassifier};

use super::{echo_config, parse_classes, resolve_taxonomy, CmdError, CmdResult};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model checkpoint
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled dataset to evaluate on
    #[arg(long)]
    pub manifest: PathBuf,
    /// Classes to score (names or ids, comma separated); default: all
    /// classes except unlabelled
    #[arg(long)]
    pub classes: Option<String>,
    /// Print machine-readable CSV instead of the table
    #[arg(long)]
    pub csv: bool,
    /// Custom taxonomy file when the model's taxonomy is not built in
    #[arg(long)]
    pub taxonomy_file: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> CmdResult {
    echo_config(
        "eval",
        &[
            ("model", args.model.display().to_string()),
            ("manifest", args.manifest.display().to_string()),
            (
                "classes",
                args.classes.clone().unwrap_or_else(|| "all".into()),
            ),
        ],
    );
    let model = MlpClassifier::load(&args.model)?;
    let taxonomy = resolve_taxonomy(model.taxonomy_name(), args.taxonomy_file.as_deref())?;
    let manifest = DatasetManifest::load(&args.manifest)?;

    let mut matrix = ConfusionMatrix::new(&taxonomy);
    for entry in manifest.entries() {
        let cloud = synthseg_core::io::read_ply(&manifest.resolve(&entry.ply))?
            .with_taxonomy(entry.taxonomy.clone());
        let ground_truth = cloud
            .labels()
            .ok_or_else(|| CmdError::Data(format!("frame {} has no labels", entry.frame_id)))?
            .to_vec();
        let predicted = predict_cloud(&model, &cloud);
        matrix.accumulate(predicted.labels().unwrap(), &ground_truth)?;
    }

    let scored = match &args.classes {
        Some(spec) => parse_classes(spec, &taxonomy)?,
        None => (1..taxonomy.class_count() as u16).collect(),
    };
    let report = matrix.miou(&scored)?;
    if args.csv {
        print!("{}", report.to_csv());
    } else {
        print!("{report}");
    }
    Ok(())
}
