//! The training loop: batches from the prefetch pipe, features, loss,
//! Adam updates and per-epoch validation mIoU with an improvement-based
//! stopping rule.

use std::time::Duration;

use crate::io::read_ply;
use crate::manifest::DatasetManifest;
use crate::metrics::{ConfusionMatrix, MetricsError};
use crate::batchpipe::{BatchPipe, PipeConfig};
use crate::cloud::LabelId;
use crate::sampler::{sample_batch, Modality};
use crate::taxonomy::Taxonomy;

use super::features::{extract_features, FeatureParams};
use super::mlp::{loss_and_grad, MlpClassifier};
use super::optim::AdamState;
use super::ModelError;

/// Everything the training loop needs. Defaults follow the standard
/// recipe: Adam at 1e-3 with betas (0.9, 0.999), learning rate decayed by
/// 0.7 every 10 epochs, 8192-point batches, inverse-frequency class
/// weights, and a stop once validation mIoU has not improved by 1e-3 for 5
/// epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr_decay: f64,
    pub decay_interval: u32,
    pub max_epochs: u32,
    /// 0 means one batch per training frame per epoch.
    pub batches_per_epoch: usize,
    pub sample_size: usize,
    pub modality: Modality,
    pub feature_params: FeatureParams,
    pub seed: u64,
    /// Inverse-frequency class weights computed from the training set.
    pub class_weighting: bool,
    pub stop_window: u32,
    pub stop_delta: f64,
    pub queue_limit: usize,
    pub buffer_limit: usize,
    pub poll_interval: Duration,
    /// Classes entering the validation mIoU; `None` scores every class
    /// except unlabelled.
    pub scored_classes: Option<Vec<LabelId>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr_decay: 0.7,
            decay_interval: 10,
            max_epochs: 50,
            batches_per_epoch: 0,
            sample_size: 8192,
            modality: Modality::RgbD,
            feature_params: FeatureParams::default(),
            seed: 0,
            class_weighting: true,
            stop_window: 5,
            stop_delta: 1e-3,
            queue_limit: 4,
            buffer_limit: 2,
            poll_interval: Duration::from_millis(10),
            scored_classes: None,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: u32,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    /// Validation mIoU (0 when there is no validation set).
    pub val_miou: f64,
}

/// Renders the log in the `epoch,loss,val_miou` CSV form.
pub fn format_log(log: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss,val_miou\n");
    for entry in log {
        out.push_str(&format!("{},{:.6},{:.6}\n", entry.epoch, entry.loss, entry.val_miou));
    }
    out
}

fn load_cloud(
    manifest: &DatasetManifest,
    index: usize,
) -> Result<crate::cloud::PointCloud, ModelError> {
    let entry = &manifest.entries()[index];
    Ok(read_ply(&manifest.resolve(&entry.ply))?.with_taxonomy(entry.taxonomy.clone()))
}

/// Inverse-frequency weights from the training label histogram, clamped to
/// [0.1, 10] to keep rare classes from dominating. Unlabelled has weight 0.
fn class_weights_from_manifest(
    manifest: &DatasetManifest,
    taxonomy: &Taxonomy,
) -> Result<Vec<f64>, ModelError> {
    let n = taxonomy.class_count();
    let mut counts = vec![0u64; n];
    for index in 0..manifest.len() {
        let cloud = load_cloud(manifest, index)?;
        for &label in cloud.labels().unwrap_or(&[]) {
            if (label as usize) < n {
                counts[label as usize] += 1;
            }
        }
    }
    let labelled: u64 = counts[1..].iter().sum();
    let present = counts[1..].iter().filter(|&&c| c > 0).count().max(1);
    let mut weights = vec![1.0; n];
    weights[0] = 0.0;
    if labelled > 0 {
        for (c, weight) in weights.iter_mut().enumerate().skip(1) {
            if counts[c] > 0 {
                *weight = (labelled as f64 / (present as f64 * counts[c] as f64)).clamp(0.1, 10.0);
            }
        }
    }
    Ok(weights)
}

/// Validation mIoU on a fixed per-frame sample. Classes absent from both
/// prediction and ground truth are excluded; an epoch where nothing is
/// defined scores 0.
fn validation_miou(
    model: &MlpClassifier,
    val: &DatasetManifest,
    taxonomy: &Taxonomy,
    config: &TrainConfig,
    scored: &[LabelId],
) -> Result<f64, ModelError> {
    let mut matrix = ConfusionMatrix::new(taxonomy);
    for index in 0..val.len() {
        let cloud = load_cloud(val, index)?;
        let batch = sample_batch(
            &cloud,
            config.sample_size,
            config.seed ^ 0xA5A5 ^ ((index as u64) << 16),
            config.modality,
        )?;
        let features = extract_features(
            &batch.positions,
            Some(&batch.colors),
            config.modality,
            &config.feature_params,
        );
        let predicted: Vec<LabelId> = features.iter().map(|x| model.predict(x)).collect();
        matrix.accumulate(&predicted, &batch.labels)?;
    }
    match matrix.miou(scored) {
        Ok(report) => Ok(report.miou),
        Err(MetricsError::NoDefinedClasses) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

/// Trains a classifier on `train` while tracking mIoU on `val`.
///
/// Batches flow through a single-producer prefetch pipe, so the run is
/// deterministic for a fixed seed. Returns the trained model plus one
/// [`EpochStats`] per completed epoch; `max_epochs == 0` returns the
/// freshly initialized model and an empty log.
pub fn train(
    train: &DatasetManifest,
    val: &DatasetManifest,
    taxonomy: &Taxonomy,
    config: &TrainConfig,
) -> Result<(MlpClassifier, Vec<EpochStats>), ModelError> {
    if config.hidden < 1 {
        return Err(ModelError::InvalidConfig("hidden must be >= 1".into()));
    }
    if taxonomy.class_count() < 2 {
        return Err(ModelError::InvalidConfig("taxonomy needs at least 2 classes".into()));
    }
    let n_classes = taxonomy.class_count();
    let scored: Vec<LabelId> = match &config.scored_classes {
        Some(classes) => {
            for &c in classes {
                if c == 0 || c as usize >= n_classes {
                    return Err(ModelError::InvalidConfig(format!(
                        "scored class {c} invalid for taxonomy '{}'",
                        taxonomy.name()
                    )));
                }
            }
            classes.clone()
        }
        None => (1..n_classes as LabelId).collect(),
    };

    let mut model = MlpClassifier::new(
        config.hidden,
        n_classes,
        taxonomy.name(),
        config.modality,
        config.feature_params,
        config.seed,
    )
    .with_sample_size(config.sample_size);
    if config.max_epochs == 0 {
        return Ok((model, Vec::new()));
    }

    let class_weights = if config.class_weighting {
        class_weights_from_manifest(train, taxonomy)?
    } else {
        let mut w = vec![1.0; n_classes];
        w[0] = 0.0;
        w
    };

    let pipe = BatchPipe::start(
        train,
        PipeConfig {
            queue_limit: config.queue_limit,
            buffer_limit: config.buffer_limit,
            poll_interval: config.poll_interval,
            sample_size: config.sample_size,
            modality: config.modality,
            rng_seed: config.seed,
            producers: 1,
            io_delay: Duration::ZERO,
        },
    )?;
    let batches_per_epoch = if config.batches_per_epoch == 0 {
        train.len()
    } else {
        config.batches_per_epoch
    };

    let mut adam = AdamState::new(model.param_count())
        .with_learning_rate(config.learning_rate)
        .with_betas(config.beta1, config.beta2)
        .with_epsilon(config.epsilon)
        .with_decay(config.lr_decay, config.decay_interval);

    let mut log = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut best_epoch = 0u32;
    for epoch in 0..config.max_epochs {
        adam.set_epoch(epoch);
        let mut epoch_loss = 0.0;
        let mut contributing = 0usize;
        for _ in 0..batches_per_epoch {
            let batch = pipe.get_batch(Duration::from_secs(120))?;
            let features = extract_features(
                &batch.positions,
                Some(&batch.colors),
                config.modality,
                &config.feature_params,
            );
            match loss_and_grad(&model, &features, &batch.labels, &class_weights) {
                Ok((loss, grad)) => {
                    adam.step(model.params_mut(), &grad);
                    epoch_loss += loss;
                    contributing += 1;
                }
                // A batch that sampled only unlabelled points teaches nothing.
                Err(ModelError::AllUnlabelled) => {}
                Err(e) => {
                    pipe.shutdown();
                    return Err(e);
                }
            }
        }
        let loss = epoch_loss / contributing.max(1) as f64;
        let val_miou = if val.is_empty() {
            0.0
        } else {
            validation_miou(&model, val, taxonomy, config, &scored)?
        };
        log.push(EpochStats { epoch, loss, val_miou });

        // Improvement-based stop, active only with a validation set.
        if !val.is_empty() {
            if val_miou > best + config.stop_delta {
                best = val_miou;
                best_epoch = epoch;
            } else if epoch >= best_epoch + config.stop_window {
                break;
            }
        }
    }
    pipe.shutdown();
    Ok((model, log))
}
