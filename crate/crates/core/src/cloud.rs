//! Columnar point cloud container with optional per-point color and label.

use thiserror::Error;

use crate::geom::{Point3, Pose};

/// 8-bit RGB color. Every bit pattern is a valid color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb { r: 0, g: 0, b: 0 };

    pub fn new(r: u8, g: u8, b: u8) -> Rgb {
        Rgb { r, g, b }
    }
}

/// Semantic class id within a taxonomy. Id 0 is always "unlabelled".
pub type LabelId = u16;

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("{channel} length {got} does not match position count {expected}")]
    LengthMismatch {
        channel: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("cloud has no labels")]
    MissingLabels,
}

/// Columnar store of 3D positions with optional per-point colors and labels.
///
/// Labels, when present, are expressed in the taxonomy named by
/// [`PointCloud::taxonomy`]; the id-level validity check against an actual
/// taxonomy definition lives in the `taxonomy` module. Clouds are immutable
/// after construction and cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Point3>,
    colors: Option<Vec<Rgb>>,
    labels: Option<Vec<LabelId>>,
    taxonomy: Option<String>,
}

impl PointCloud {
    pub fn from_positions(positions: Vec<Point3>) -> PointCloud {
        PointCloud {
            positions,
            colors: None,
            labels: None,
            taxonomy: None,
        }
    }

    pub fn new(
        positions: Vec<Point3>,
        colors: Option<Vec<Rgb>>,
        labels: Option<Vec<LabelId>>,
        taxonomy: Option<String>,
    ) -> Result<PointCloud, CloudError> {
        let n = positions.len();
        if let Some(c) = &colors {
            if c.len() != n {
                return Err(CloudError::LengthMismatch {
                    channel: "colors",
                    expected: n,
                    got: c.len(),
                });
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(CloudError::LengthMismatch {
                    channel: "labels",
                    expected: n,
                    got: l.len(),
                });
            }
        }
        Ok(PointCloud {
            positions,
            colors,
            labels,
            taxonomy,
        })
    }

    pub fn with_colors(mut self, colors: Vec<Rgb>) -> Result<PointCloud, CloudError> {
        if colors.len() != self.positions.len() {
            return Err(CloudError::LengthMismatch {
                channel: "colors",
                expected: self.positions.len(),
                got: colors.len(),
            });
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_labels(
        mut self,
        labels: Vec<LabelId>,
        taxonomy: impl Into<String>,
    ) -> Result<PointCloud, CloudError> {
        if labels.len() != self.positions.len() {
            return Err(CloudError::LengthMismatch {
                channel: "labels",
                expected: self.positions.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        self.taxonomy = Some(taxonomy.into());
        Ok(self)
    }

    /// Renames the taxonomy the labels are expressed in (used after remapping
    /// or when attaching taxonomy information from a manifest).
    pub fn with_taxonomy(mut self, taxonomy: impl Into<String>) -> PointCloud {
        self.taxonomy = Some(taxonomy.into());
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn labels(&self) -> Option<&[LabelId]> {
        self.labels.as_deref()
    }

    pub fn taxonomy(&self) -> Option<&str> {
        self.taxonomy.as_deref()
    }

    /// Maps every position by `pose` (rotation then translation); colors and
    /// labels are carried through unchanged.
    pub fn transformed(&self, pose: &Pose) -> PointCloud {
        PointCloud {
            positions: self.positions.iter().map(|&p| pose.apply(p)).collect(),
            colors: self.colors.clone(),
            labels: self.labels.clone(),
            taxonomy: self.taxonomy.clone(),
        }
    }
}

/// Free-function form of [`PointCloud::transformed`].
pub fn transform_cloud(cloud: &PointCloud, pose: &Pose) -> PointCloud {
    cloud.transformed(pose)
}
