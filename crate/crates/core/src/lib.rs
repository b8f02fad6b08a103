//! Desk-scale pipeline for point-cloud semantic segmentation on synthetic
//! data: procedural urban scene generation with simulated LiDAR and
//! depth/semantic/color cameras, sensor fusion onto point clouds, label
//! taxonomy remapping, memory-bounded batch prefetching, a small trainable
//! point-wise classifier and IoU/mIoU evaluation.
//!
//! The crate is organized along the pipeline stages:
//!
//! - [`geom`], [`cloud`], [`image`], [`io`]: core containers and file formats
//! - [`taxonomy`]: label sets, palettes and remap tables
//! - [`synthworld`]: scene generation, sensor simulation, scenario scripting
//! - [`fusion`]: pinhole projection and GT registration
//! - [`sampler`]: fixed-size batches, FPS/ball-query, dataset splits
//! - [`batchpipe`]: bounded producer/consumer batch prefetching
//! - [`model`]: point features, MLP classifier, training loop
//! - [`metrics`]: confusion matrices and IoU/mIoU reports

pub mod batchpipe;
pub mod cloud;
pub mod fusion;
pub mod geom;
pub mod image;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod sampler;
pub mod synthworld;
pub mod taxonomy;

pub use cloud::{LabelId, PointCloud, Rgb};
pub use geom::{Mat3, Point3, Pose};
pub use image::{CameraIntrinsics, ColorImage, DepthImage, SemanticImage};
pub use manifest::{DatasetManifest, FrameEntry};
pub use sampler::{Batch, Modality};
pub use taxonomy::{RemapTable, Taxonomy};
