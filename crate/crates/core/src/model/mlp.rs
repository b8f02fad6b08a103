//! The point-wise classifier: an 8 -> hidden (tanh) -> classes perceptron
//! with exact backpropagation and a versioned binary checkpoint format.
//!
//! This is deliberately small; its job is to close the train/eval loop
//! over the per-point features. The interface (features in, class scores
//! out, gradients on demand) is what a heavier point-set network would
//! also implement.

use std::path::Path;

use rayon::prelude::*;

use crate::cloud::LabelId;
use crate::sampler::Modality;

use super::features::{FeatureParams, FEATURE_DIM};
use super::ModelError;

const CHECKPOINT_MAGIC: &[u8; 8] = b"SSEGMLP\0";
const CHECKPOINT_VERSION: u32 = 1;

/// A two-layer perceptron over point features. Parameters live in one flat
/// vector laid out as W1 (hidden x features), b1, W2 (classes x hidden),
/// b2, which keeps the optimizer generic.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    hidden: usize,
    n_classes: usize,
    taxonomy: String,
    modality: Modality,
    feature_params: FeatureParams,
    /// Points per training batch; inference runs over chunks of this size
    /// so neighborhood statistics match what the model saw in training.
    sample_size: usize,
    params: Vec<f64>,
}

fn param_count(hidden: usize, n_classes: usize) -> usize {
    hidden * FEATURE_DIM + hidden + n_classes * hidden + n_classes
}

impl MlpClassifier {
    /// Builds a model with seeded Xavier-style initialization.
    pub fn new(
        hidden: usize,
        n_classes: usize,
        taxonomy: impl Into<String>,
        modality: Modality,
        feature_params: FeatureParams,
        seed: u64,
    ) -> MlpClassifier {
        use rand::{Rng, SeedableRng};
        assert!(hidden >= 1 && n_classes >= 2, "degenerate layer sizes");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; param_count(hidden, n_classes)];
        let w1_scale = (2.0 / (FEATURE_DIM + hidden) as f64).sqrt();
        let w2_scale = (2.0 / (hidden + n_classes) as f64).sqrt();
        let (w1_len, b1_len) = (hidden * FEATURE_DIM, hidden);
        for (i, p) in params.iter_mut().enumerate() {
            if i < w1_len {
                *p = rng.random_range(-w1_scale..w1_scale);
            } else if i < w1_len + b1_len {
                *p = 0.0;
            } else if i < w1_len + b1_len + n_classes * hidden {
                *p = rng.random_range(-w2_scale..w2_scale);
            }
        }
        MlpClassifier {
            hidden,
            n_classes,
            taxonomy: taxonomy.into(),
            modality,
            feature_params,
            sample_size: 8192,
            params,
        }
    }

    /// Sets the training batch size recorded for chunked inference.
    pub fn with_sample_size(mut self, sample_size: usize) -> MlpClassifier {
        self.sample_size = sample_size.max(1);
        self
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn taxonomy_name(&self) -> &str {
        &self.taxonomy
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn feature_params(&self) -> &FeatureParams {
        &self.feature_params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * FEATURE_DIM;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.n_classes * self.hidden;
        (w1, b1, w2)
    }

    /// Hidden activations for one feature vector.
    fn hidden_layer(&self, x: &[f64; FEATURE_DIM]) -> Vec<f64> {
        let (w1_end, b1_end, _) = self.offsets();
        let w1 = &self.params[..w1_end];
        let b1 = &self.params[w1_end..b1_end];
        (0..self.hidden)
            .map(|j| {
                let row = &w1[j * FEATURE_DIM..(j + 1) * FEATURE_DIM];
                let z: f64 = row.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + b1[j];
                z.tanh()
            })
            .collect()
    }

    /// Class scores (logits) for one feature vector.
    pub fn forward(&self, x: &[f64; FEATURE_DIM]) -> Vec<f64> {
        let h = self.hidden_layer(x);
        self.scores_from_hidden(&h)
    }

    fn scores_from_hidden(&self, h: &[f64]) -> Vec<f64> {
        let (_, b1_end, w2_end) = self.offsets();
        let w2 = &self.params[b1_end..w2_end];
        let b2 = &self.params[w2_end..];
        (0..self.n_classes)
            .map(|c| {
                let row = &w2[c * self.hidden..(c + 1) * self.hidden];
                row.iter().zip(h.iter()).map(|(w, v)| w * v).sum::<f64>() + b2[c]
            })
            .collect()
    }

    /// Argmax class, ties broken by the lowest id.
    pub fn predict(&self, x: &[f64; FEATURE_DIM]) -> LabelId {
        let scores = self.forward(x);
        let mut best = 0usize;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        best as LabelId
    }

    /// Writes the versioned binary checkpoint (atomic).
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        bytes.extend_from_slice(&(FEATURE_DIM as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.hidden as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.n_classes as u32).to_le_bytes());
        bytes.push(match self.modality {
            Modality::D => 0,
            Modality::RgbD => 1,
        });
        bytes.extend_from_slice(&self.feature_params.radius.to_le_bytes());
        bytes.extend_from_slice(&(self.feature_params.max_neighbors as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.sample_size as u32).to_le_bytes());
        let name = self.taxonomy.as_bytes();
        bytes.extend_from_slice(&(name.len() as u16).to_le_bytes());
        bytes.extend_from_slice(name);
        for p in &self.params {
            bytes.extend_from_slice(&p.to_le_bytes());
        }
        crate::io::write_atomic(path, &bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<MlpClassifier, ModelError> {
        let bytes = std::fs::read(path)?;
        let mut at = 0usize;
        let take = |at: &mut usize, n: usize| -> Result<&[u8], ModelError> {
            if *at + n > bytes.len() {
                return Err(ModelError::BadCheckpoint(format!(
                    "checkpoint truncated at byte {}",
                    *at
                )));
            }
            let slice = &bytes[*at..*at + n];
            *at += n;
            Ok(slice)
        };
        if take(&mut at, 8)? != CHECKPOINT_MAGIC {
            return Err(ModelError::BadCheckpoint("bad magic".into()));
        }
        let version = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(ModelError::BadCheckpoint(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let features = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        if features != FEATURE_DIM {
            return Err(ModelError::BadCheckpoint(format!(
                "checkpoint feature dim {features} != {FEATURE_DIM}"
            )));
        }
        let hidden = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        let n_classes = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        let modality = match take(&mut at, 1)?[0] {
            0 => Modality::D,
            1 => Modality::RgbD,
            other => {
                return Err(ModelError::BadCheckpoint(format!("bad modality byte {other}")))
            }
        };
        let radius = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
        let max_neighbors = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        let sample_size = (u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize).max(1);
        let name_len = u16::from_le_bytes(take(&mut at, 2)?.try_into().unwrap()) as usize;
        let taxonomy = String::from_utf8(take(&mut at, name_len)?.to_vec())
            .map_err(|_| ModelError::BadCheckpoint("taxonomy name is not UTF-8".into()))?;
        if hidden < 1 || n_classes < 2 {
            return Err(ModelError::BadCheckpoint("degenerate layer sizes".into()));
        }
        let expect = param_count(hidden, n_classes);
        let remaining = bytes.len() - at;
        if remaining != expect * 8 {
            return Err(ModelError::BadCheckpoint(format!(
                "expected {expect} parameters, found {} bytes",
                remaining
            )));
        }
        let mut params = Vec::with_capacity(expect);
        for _ in 0..expect {
            let v = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
            if !v.is_finite() {
                return Err(ModelError::BadCheckpoint("non-finite parameter".into()));
            }
            params.push(v);
        }
        Ok(MlpClassifier {
            hidden,
            n_classes,
            taxonomy,
            modality,
            feature_params: FeatureParams { radius, max_neighbors },
            sample_size,
            params,
        })
    }
}

/// Numerically stable softmax.
pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Weighted mean softmax cross-entropy over points with nonzero ground
/// truth, plus the exact gradient with respect to every parameter.
///
/// `class_weights[c]` scales the contribution of points whose ground truth
/// is `c`; the mean is normalized by the total weight, so duplicating every
/// point leaves both loss and gradients unchanged.
pub fn loss_and_grad(
    model: &MlpClassifier,
    features: &[[f64; FEATURE_DIM]],
    labels: &[LabelId],
    class_weights: &[f64],
) -> Result<(f64, Vec<f64>), ModelError> {
    if features.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    if class_weights.len() != model.n_classes {
        return Err(ModelError::BadWeights {
            expected: model.n_classes,
            got: class_weights.len(),
        });
    }
    for &label in labels {
        if label as usize >= model.n_classes {
            return Err(ModelError::InvalidLabel { id: label });
        }
    }
    let total_weight: f64 = labels
        .iter()
        .filter(|&&y| y != 0)
        .map(|&y| class_weights[y as usize])
        .sum();
    if total_weight <= 0.0 {
        return Err(ModelError::AllUnlabelled);
    }

    let (w1_end, b1_end, w2_end) = model.offsets();
    let hidden = model.hidden;
    let n_classes = model.n_classes;

    // Fixed-size chunks keep the reduction order deterministic while the
    // chunks themselves run in parallel.
    const CHUNK: usize = 512;
    let indices: Vec<usize> = (0..features.len().div_ceil(CHUNK)).collect();
    let partials: Vec<(f64, Vec<f64>)> = indices
        .par_iter()
        .map(|&chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(features.len());
            let mut loss = 0.0;
            let mut grad = vec![0.0; model.params.len()];
            for i in lo..hi {
                let y = labels[i] as usize;
                if y == 0 {
                    continue;
                }
                let weight = class_weights[y] / total_weight;
                let x = &features[i];
                let h = model.hidden_layer(x);
                let scores = model.scores_from_hidden(&h);
                let probs = softmax(&scores);
                loss -= weight * probs[y].max(1e-300).ln();

                // dL/dscores = weight * (p - onehot)
                let w2 = &model.params[b1_end..w2_end];
                let mut dh = vec![0.0; hidden];
                for c in 0..n_classes {
                    let ds = weight * (probs[c] - if c == y { 1.0 } else { 0.0 });
                    let (gw2, gb2) = grad.split_at_mut(w2_end);
                    let gw2 = &mut gw2[b1_end..];
                    for j in 0..hidden {
                        gw2[c * hidden + j] += ds * h[j];
                        dh[j] += w2[c * hidden + j] * ds;
                    }
                    gb2[c] += ds;
                }
                for j in 0..hidden {
                    let dz = dh[j] * (1.0 - h[j] * h[j]);
                    for (k, &xv) in x.iter().enumerate() {
                        grad[j * FEATURE_DIM + k] += dz * xv;
                    }
                    grad[w1_end + j] += dz;
                }
            }
            (loss, grad)
        })
        .collect();

    let mut loss = 0.0;
    let mut grad = vec![0.0; model.params.len()];
    for (l, g) in partials {
        loss += l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Ok((loss, grad))
}
