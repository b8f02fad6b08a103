//! Subcommand implementations and the shared error/exit-code mapping.

use std::fmt;

pub mod bench;
pub mod eval;
pub mod fuse;
pub mod generate;
pub mod predict;
pub mod remap;
pub mod stats;
pub mod train;

/// Command failure, bucketed by exit code: 1 usage, 2 data, 3 internal.
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CmdError {
    pub fn code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Data(_) => 2,
            CmdError::Internal(_) => 3,
        }
    }

    pub fn usage(message: impl Into<String>) -> CmdError {
        CmdError::Usage(message.into())
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Data(m) | CmdError::Internal(m) => write!(f, "{m}"),
        }
    }
}

pub type CmdResult = Result<(), CmdError>;

macro_rules! data_error_from {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for CmdError {
            fn from(err: $ty) -> CmdError {
                CmdError::Data(err.to_string())
            }
        })*
    };
}

data_error_from!(
    std::io::Error,
    synthseg_core::geom::GeomError,
    synthseg_core::cloud::CloudError,
    synthseg_core::image::ImageError,
    synthseg_core::io::PlyError,
    synthseg_core::io::PnmError,
    synthseg_core::manifest::ManifestError,
    synthseg_core::taxonomy::TaxonomyError,
    synthseg_core::sampler::SampleError,
    synthseg_core::batchpipe::PipeError,
    synthseg_core::metrics::MetricsError,
    synthseg_core::model::ModelError,
    synthseg_core::synthworld::SceneError,
    synthseg_core::fusion::FusionError,
);

/// Prints the one-line effective configuration echo every subcommand emits
/// before doing work; a run is reproducible from this line.
pub fn echo_config(command: &str, pairs: &[(&str, String)]) {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("config: command={command} {}", body.join(" "));
}

/// Resolve a taxonomy: an explicit text file wins, otherwise the name must
/// be one of the built-ins.
pub fn resolve_taxonomy(
    name: &str,
    file: Option<&std::path::Path>,
) -> Result<synthseg_core::Taxonomy, CmdError> {
    match file {
        Some(path) => Ok(synthseg_core::Taxonomy::load(name, path)?),
        None => synthseg_core::taxonomy::builtin_taxonomy(name).ok_or_else(|| {
            CmdError::usage(format!(
                "unknown taxonomy '{name}' (built-ins: carla12, kitti19, semantic3d8, common4); \
                 pass a taxonomy file instead"
            ))
        }),
    }
}

/// The single taxonomy name a manifest's frames are labeled in.
pub fn manifest_taxonomy_name(
    manifest: &synthseg_core::DatasetManifest,
) -> Result<String, CmdError> {
    let mut names: Vec<&str> = manifest.entries().iter().map(|e| e.taxonomy.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    match names.as_slice() {
        [] => Err(CmdError::Data("manifest is empty".into())),
        [one] => Ok(one.to_string()),
        many => Err(CmdError::Data(format!(
            "manifest mixes taxonomies: {}",
            many.join(", ")
        ))),
    }
}

/// Parses a comma-separated class list of names or numeric ids.
pub fn parse_classes(
    spec: &str,
    taxonomy: &synthseg_core::Taxonomy,
) -> Result<Vec<synthseg_core::LabelId>, CmdError> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let id = if let Ok(id) = part.parse::<synthseg_core::LabelId>() {
            id
        } else {
            taxonomy.id_of(part).ok_or_else(|| {
                CmdError::usage(format!(
                    "class '{part}' not found in taxonomy '{}'",
                    taxonomy.name()
                ))
            })?
        };
        if !taxonomy.contains(id) {
            return Err(CmdError::usage(format!(
                "class id {id} out of range for taxonomy '{}'",
                taxonomy.name()
            )));
        }
        out.push(id);
    }
    if out.is_empty() {
        return Err(CmdError::usage("class list is empty"));
    }
    Ok(out)
}

/// Copies a dataset side file (image or meta) into a new dataset directory
/// via an atomic write.
pub fn copy_side_file(
    from: &std::path::Path,
    to: &std::path::Path,
) -> Result<(), CmdError> {
    let bytes = std::fs::read(from)?;
    synthseg_core::io::write_atomic(to, &bytes)?;
    Ok(())
}
