//! Trainable point-wise classification: per-point features, a small MLP
//! with exact backpropagation, Adam, the training loop and full-cloud
//! prediction.

use rayon::prelude::*;
use thiserror::Error;

use crate::cloud::{LabelId, PointCloud, Rgb};

pub mod features;
pub mod mlp;
pub mod optim;
pub mod train;

pub use features::{extract_features, FeatureParams, FEATURE_DIM};
pub use mlp::{loss_and_grad, MlpClassifier};
pub use optim::AdamState;
pub use train::{format_log, train, EpochStats, TrainConfig};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("feature count {features} does not match label count {labels}")]
    LengthMismatch { features: usize, labels: usize },
    #[error("expected {expected} class weights, got {got}")]
    BadWeights { expected: usize, got: usize },
    #[error("label {id} out of range for the model's class count")]
    InvalidLabel { id: LabelId },
    #[error("batch contains no labelled points")]
    AllUnlabelled,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Pipe(#[from] crate::batchpipe::PipeError),
    #[error(transparent)]
    Sample(#[from] crate::sampler::SampleError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Ply(#[from] crate::io::PlyError),
}

/// Labels every point of `cloud` with the model's argmax class (ties go to
/// the lowest id). Positions and colors are preserved; the output is
/// declared in the model's taxonomy. The model's own modality decides
/// whether colors feed the features.
///
/// Large clouds are processed as disjoint random chunks of the model's
/// training batch size, so neighborhood statistics (density, normals)
/// match the ones the classifier was trained on. The chunk assignment is
/// deterministic and every point is predicted exactly once.
pub fn predict_cloud(model: &MlpClassifier, cloud: &PointCloud) -> PointCloud {
    let n = cloud.len();
    let mut labels = vec![0 as LabelId; n];
    if n > 0 {
        let chunk_count = n.div_ceil(model.sample_size()).max(1);
        let mut order: Vec<u32> = (0..n as u32).collect();
        if chunk_count > 1 {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED);
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
        }
        let chunk_len = n.div_ceil(chunk_count);
        let chunk_results: Vec<Vec<(u32, LabelId)>> = order
            .par_chunks(chunk_len)
            .map(|chunk| {
                let positions: Vec<_> =
                    chunk.iter().map(|&i| cloud.positions()[i as usize]).collect();
                let colors: Option<Vec<Rgb>> = cloud
                    .colors()
                    .map(|c| chunk.iter().map(|&i| c[i as usize]).collect());
                let features = extract_features(
                    &positions,
                    colors.as_deref(),
                    model.modality(),
                    model.feature_params(),
                );
                chunk
                    .iter()
                    .zip(features.iter())
                    .map(|(&i, x)| (i, model.predict(x)))
                    .collect()
            })
            .collect();
        for chunk in chunk_results {
            for (i, label) in chunk {
                labels[i as usize] = label;
            }
        }
    }
    PointCloud::new(
        cloud.positions().to_vec(),
        cloud.colors().map(|c| c.to_vec()),
        Some(labels),
        Some(model.taxonomy_name().to_string()),
    )
    .expect("lengths preserved")
}
