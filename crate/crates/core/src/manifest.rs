//! The RAM-resident dataset index: one line per frame with file paths,
//! point count and taxonomy.
//!
//! Line format (tab-separated):
//! `frame_id ply_path depth_path semantic_path color_path point_count taxonomy`
//!
//! Paths are stored relative to the manifest file and resolved against its
//! directory, so a dataset directory can be moved as a whole.

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at {path}:{line}: {what}")]
    Parse {
        path: PathBuf,
        line: usize,
        what: String,
    },
    #[error("manifest is empty")]
    Empty,
}

/// One captured frame: where its files live and what is in them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameEntry {
    pub frame_id: String,
    pub ply: PathBuf,
    pub depth: PathBuf,
    pub semantic: PathBuf,
    pub color: PathBuf,
    pub point_count: u64,
    pub taxonomy: String,
}

/// An ordered list of frames plus the directory the paths are relative to.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    base_dir: PathBuf,
    entries: Vec<FrameEntry>,
}

impl DatasetManifest {
    pub fn new(base_dir: impl Into<PathBuf>, entries: Vec<FrameEntry>) -> DatasetManifest {
        DatasetManifest {
            base_dir: base_dir.into(),
            entries,
        }
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn entries(&self) -> &[FrameEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Absolute (or base-relative) path of an entry's point cloud file.
    pub fn resolve(&self, relative: &Path) -> PathBuf {
        if relative.is_absolute() {
            relative.to_path_buf()
        } else {
            self.base_dir.join(relative)
        }
    }

    /// Path of the frame's pose/intrinsics sidecar, next to the PLY.
    pub fn meta_path(&self, entry: &FrameEntry) -> PathBuf {
        self.resolve(&entry.ply).with_extension("meta")
    }

    /// A manifest with the same base directory but a subset of entries.
    pub fn with_entries(&self, entries: Vec<FrameEntry>) -> DatasetManifest {
        DatasetManifest {
            base_dir: self.base_dir.clone(),
            entries,
        }
    }

    pub fn load(path: &Path) -> Result<DatasetManifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 7 {
                return Err(ManifestError::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    what: format!("expected 7 tab-separated fields, got {}", fields.len()),
                });
            }
            let point_count = fields[5].parse::<u64>().map_err(|_| ManifestError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                what: format!("bad point count '{}'", fields[5]),
            })?;
            entries.push(FrameEntry {
                frame_id: fields[0].to_string(),
                ply: PathBuf::from(fields[1]),
                depth: PathBuf::from(fields[2]),
                semantic: PathBuf::from(fields[3]),
                color: PathBuf::from(fields[4]),
                point_count,
                taxonomy: fields[6].to_string(),
            });
        }
        Ok(DatasetManifest::new(base_dir, entries))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.frame_id,
                e.ply.display(),
                e.depth.display(),
                e.semantic.display(),
                e.color.display(),
                e.point_count,
                e.taxonomy
            ));
        }
        out
    }

    /// Saves the manifest; the entries' relative paths are written as-is, so
    /// the manifest should live in its `base_dir`.
    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        crate::io::write_atomic(path, self.to_text().as_bytes()).map_err(|source| {
            ManifestError::Io {
                path: path.to_path_buf(),
                source,
            }
        })
    }
}
