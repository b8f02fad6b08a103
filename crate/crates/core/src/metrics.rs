//! Confusion-matrix accumulation and intersection-over-union evaluation.
//!
//! Per-class IoU is the Jaccard index TP / (TP + FP + FN); mIoU is the
//! arithmetic mean of the defined per-class values over a chosen subset of
//! scored classes. Points whose ground truth is unlabelled (0) never enter
//! the matrix, and class 0 is never scored. Classes absent from both
//! prediction and ground truth are undefined and excluded from the mean.

use std::fmt;

use thiserror::Error;

use crate::cloud::LabelId;
use crate::taxonomy::Taxonomy;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction and ground truth lengths differ ({pred} vs {gt})")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("label {id} is not defined in taxonomy '{taxonomy}'")]
    InvalidLabel { taxonomy: String, id: LabelId },
    #[error("class 0 (unlabelled) is never scored")]
    UnlabelledScored,
    #[error("all scored classes are undefined (no TP, FP or FN counts)")]
    NoDefinedClasses,
    #[error("scored class set is empty")]
    EmptyScoredSet,
    #[error("cannot merge matrices over taxonomies '{a}' and '{b}'")]
    TaxonomyMismatch { a: String, b: String },
}

/// n x n count matrix; `count(g, p)` is the number of points with ground
/// truth `g` predicted as `p`. Matrices over the same taxonomy are mergeable
/// values, so shards can be accumulated in parallel and summed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    taxonomy: Taxonomy,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(taxonomy: &Taxonomy) -> ConfusionMatrix {
        let n = taxonomy.class_count();
        ConfusionMatrix {
            taxonomy: taxonomy.clone(),
            counts: vec![0; n * n],
        }
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn class_count(&self) -> usize {
        self.taxonomy.class_count()
    }

    pub fn count(&self, gt: LabelId, pred: LabelId) -> u64 {
        self.counts[gt as usize * self.class_count() + pred as usize]
    }

    /// Adds one (prediction, ground truth) pair per point. Points with
    /// unlabelled ground truth are skipped entirely.
    pub fn accumulate(
        &mut self,
        predicted: &[LabelId],
        ground_truth: &[LabelId],
    ) -> Result<(), MetricsError> {
        if predicted.len() != ground_truth.len() {
            return Err(MetricsError::LengthMismatch {
                pred: predicted.len(),
                gt: ground_truth.len(),
            });
        }
        let n = self.class_count();
        for (&p, &g) in predicted.iter().zip(ground_truth) {
            if (p as usize) >= n {
                return Err(MetricsError::InvalidLabel {
                    taxonomy: self.taxonomy.name().to_string(),
                    id: p,
                });
            }
            if (g as usize) >= n {
                return Err(MetricsError::InvalidLabel {
                    taxonomy: self.taxonomy.name().to_string(),
                    id: g,
                });
            }
            if g == 0 {
                continue;
            }
            self.counts[g as usize * n + p as usize] += 1;
        }
        Ok(())
    }

    /// Adds another matrix over the same taxonomy into this one.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<(), MetricsError> {
        if self.taxonomy.name() != other.taxonomy.name()
            || self.class_count() != other.class_count()
        {
            return Err(MetricsError::TaxonomyMismatch {
                a: self.taxonomy.name().to_string(),
                b: other.taxonomy.name().to_string(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Jaccard index for class `c`: TP / (TP + FP + FN). `None` when the
    /// class never occurs in either prediction or ground truth.
    pub fn iou(&self, c: LabelId) -> Result<Option<f64>, MetricsError> {
        if c == 0 {
            return Err(MetricsError::UnlabelledScored);
        }
        let n = self.class_count();
        if (c as usize) >= n {
            return Err(MetricsError::InvalidLabel {
                taxonomy: self.taxonomy.name().to_string(),
                id: c,
            });
        }
        let c = c as usize;
        let tp = self.counts[c * n + c];
        let fp: u64 = (0..n).filter(|&g| g != c).map(|g| self.counts[g * n + c]).sum();
        let fn_: u64 = (0..n).filter(|&p| p != c).map(|p| self.counts[c * n + p]).sum();
        let denom = tp + fp + fn_;
        if denom == 0 {
            Ok(None)
        } else {
            Ok(Some(tp as f64 / denom as f64))
        }
    }

    /// Mean IoU over `scored_classes`. Undefined classes are excluded from
    /// both the numerator and the divisor; the report records which classes
    /// actually entered the average.
    pub fn miou(&self, scored_classes: &[LabelId]) -> Result<IoUReport, MetricsError> {
        if scored_classes.is_empty() {
            return Err(MetricsError::EmptyScoredSet);
        }
        let mut per_class = Vec::with_capacity(scored_classes.len());
        let mut averaged = Vec::new();
        let mut sum = 0.0;
        for &c in scored_classes {
            let iou = self.iou(c)?;
            let name = self
                .taxonomy
                .class(c)
                .map(|d| d.name.clone())
                .unwrap_or_default();
            if let Some(value) = iou {
                sum += value;
                averaged.push(c);
            }
            per_class.push(ClassIoU { id: c, name, iou });
        }
        if averaged.is_empty() {
            return Err(MetricsError::NoDefinedClasses);
        }
        Ok(IoUReport {
            per_class,
            miou: sum / averaged.len() as f64,
            scored_classes: averaged,
        })
    }
}

/// One scored class in a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassIoU {
    pub id: LabelId,
    pub name: String,
    /// `None` when the class never occurred in prediction or ground truth.
    pub iou: Option<f64>,
}

/// Evaluation result: per-class IoU over the requested classes and their
/// mean over the defined subset.
#[derive(Debug, Clone, PartialEq)]
pub struct IoUReport {
    pub per_class: Vec<ClassIoU>,
    pub miou: f64,
    /// The classes that actually entered the average (defined IoU only).
    pub scored_classes: Vec<LabelId>,
}

impl IoUReport {
    /// Machine-readable form: `class,iou` lines plus a final `miou` line.
    /// Undefined classes render as `undefined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.per_class {
            match c.iou {
                Some(v) => out.push_str(&format!("{},{v:.6}\n", c.name)),
                None => out.push_str(&format!("{},undefined\n", c.name)),
            }
        }
        out.push_str(&format!("miou,{:.6}\n", self.miou));
        out
    }
}

impl fmt::Display for IoUReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .per_class
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        writeln!(f, "{:<width$}  {:>9}", "class", "iou")?;
        for c in &self.per_class {
            match c.iou {
                Some(v) => writeln!(f, "{:<width$}  {v:>9.4}", c.name)?,
                None => writeln!(f, "{:<width$}  {:>9}", c.name, "undef")?,
            }
        }
        writeln!(
            f,
            "{:<width$}  {:>9.4}  ({} of {} classes scored)",
            "mIoU",
            self.miou,
            self.scored_classes.len(),
            self.per_class.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{carla12, common4};

    #[test]
    fn perfect_predictions_fill_diagonal() {
        let mut cm = ConfusionMatrix::new(&common4());
        cm.accumulate(&[2; 10], &[2; 10]).unwrap();
        assert_eq!(cm.count(2, 2), 10);
        assert_eq!(cm.iou(2).unwrap(), Some(1.0));
    }

    #[test]
    fn unlabelled_ground_truth_skipped() {
        let mut cm = ConfusionMatrix::new(&common4());
        cm.accumulate(&[1, 2, 3], &[0, 0, 0]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(&common4()));
    }

    #[test]
    fn hand_counted_pairs() {
        let mut cm = ConfusionMatrix::new(&common4());
        cm.accumulate(&[1, 2], &[2, 2]).unwrap();
        assert_eq!(cm.count(2, 1), 1);
        assert_eq!(cm.count(2, 2), 1);
    }

    #[test]
    fn iou_eq1_spot_values() {
        // TP=1, FP=1, FN=2 => IoU = 1/4.
        let mut cm = ConfusionMatrix::new(&common4());
        cm.accumulate(&[1], &[1]).unwrap(); // TP for class 1
        cm.accumulate(&[1], &[2]).unwrap(); // FP for class 1 (gt 2)
        cm.accumulate(&[3, 4], &[1, 1]).unwrap(); // two FN for class 1
        assert_eq!(cm.iou(1).unwrap(), Some(0.25));
    }

    #[test]
    fn miou_eq2_spot_values() {
        // Class 1 IoU 0.5 (TP=1, FN=1), class 2 IoU 1.0 => mIoU 0.75.
        let mut cm = ConfusionMatrix::new(&common4());
        cm.accumulate(&[1, 3, 2], &[1, 1, 2]).unwrap();
        let report = cm.miou(&[1, 2]).unwrap();
        assert_eq!(report.miou, 0.75);
        assert_eq!(report.scored_classes, vec![1, 2]);
    }

    #[test]
    fn single_scored_class() {
        let mut cm = ConfusionMatrix::new(&common4());
        cm.accumulate(&[4; 23], &[4; 23]).unwrap();
        cm.accumulate(&[1], &[4]).unwrap();
        let report = cm.miou(&[4]).unwrap();
        assert!((report.miou - 23.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn absent_class_undefined_and_excluded() {
        let mut cm = ConfusionMatrix::new(&common4());
        cm.accumulate(&[1, 2], &[1, 2]).unwrap();
        assert_eq!(cm.iou(3).unwrap(), None);
        let report = cm.miou(&[1, 2, 3]).unwrap();
        assert_eq!(report.miou, 1.0);
        assert_eq!(report.scored_classes, vec![1, 2]);
        assert_eq!(report.per_class[2].iou, None);
    }

    #[test]
    fn scored_subset_of_larger_taxonomy() {
        // Predictions cover many carla12 classes; only the scored subset
        // enters the average.
        let tax = carla12();
        let mut cm = ConfusionMatrix::new(&tax);
        let gt: Vec<LabelId> = (1..=12).collect();
        cm.accumulate(&gt.clone(), &gt).unwrap();
        let scored = [
            tax.id_of("Building").unwrap(),
            tax.id_of("Road").unwrap(),
            tax.id_of("Sidewalk").unwrap(),
            tax.id_of("Vegetation").unwrap(),
            tax.id_of("Car").unwrap(),
        ];
        let report = cm.miou(&scored).unwrap();
        assert_eq!(report.per_class.len(), 5);
        assert_eq!(report.miou, 1.0);
    }

    #[test]
    fn error_paths() {
        let mut cm = ConfusionMatrix::new(&common4());
        assert!(matches!(
            cm.accumulate(&[1], &[1, 2]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            cm.accumulate(&[9], &[1]),
            Err(MetricsError::InvalidLabel { id: 9, .. })
        ));
        assert!(matches!(cm.iou(0), Err(MetricsError::UnlabelledScored)));
        assert!(matches!(cm.miou(&[]), Err(MetricsError::EmptyScoredSet)));
        assert!(matches!(cm.miou(&[1]), Err(MetricsError::NoDefinedClasses)));
    }

    #[test]
    fn accumulate_is_additive() {
        let a_pred = [1u16, 2, 2, 3];
        let a_gt = [1u16, 1, 2, 0];
        let b_pred = [4u16, 4, 1];
        let b_gt = [4u16, 1, 1];
        let mut separate_a = ConfusionMatrix::new(&common4());
        separate_a.accumulate(&a_pred, &a_gt).unwrap();
        let mut separate_b = ConfusionMatrix::new(&common4());
        separate_b.accumulate(&b_pred, &b_gt).unwrap();
        separate_a.merge(&separate_b).unwrap();

        let mut combined = ConfusionMatrix::new(&common4());
        let pred: Vec<LabelId> = a_pred.iter().chain(&b_pred).copied().collect();
        let gt: Vec<LabelId> = a_gt.iter().chain(&b_gt).copied().collect();
        combined.accumulate(&pred, &gt).unwrap();
        assert_eq!(separate_a, combined);
    }

    #[test]
    fn permutation_invariance() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let pred: Vec<LabelId> = (0..500).map(|i| (i % 5) as LabelId).collect();
        let gt: Vec<LabelId> = (0..500).map(|i| ((i / 3) % 5) as LabelId).collect();
        let mut cm1 = ConfusionMatrix::new(&common4());
        cm1.accumulate(&pred, &gt).unwrap();

        let mut pairs: Vec<(LabelId, LabelId)> = pred.into_iter().zip(gt).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        pairs.shuffle(&mut rng);
        let (pred2, gt2): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let mut cm2 = ConfusionMatrix::new(&common4());
        cm2.accumulate(&pred2, &gt2).unwrap();
        assert_eq!(cm1, cm2);
    }

    /// Brute-force per-class set oracle: IoU = |A ∩ B| / |A ∪ B| where A and
    /// B are the predicted / ground-truth index sets of the class, restricted
    /// to points with labelled ground truth.
    fn oracle_iou(pred: &[LabelId], gt: &[LabelId], c: LabelId) -> Option<f64> {
        let mut intersection = 0u64;
        let mut union = 0u64;
        for (&p, &g) in pred.iter().zip(gt) {
            if g == 0 {
                continue;
            }
            let in_a = p == c;
            let in_b = g == c;
            if in_a && in_b {
                intersection += 1;
            }
            if in_a || in_b {
                union += 1;
            }
        }
        if union == 0 {
            None
        } else {
            Some(intersection as f64 / union as f64)
        }
    }

    #[test]
    fn matches_set_oracle_on_random_arrays() {
        use rand::{Rng, SeedableRng};
        let tax = carla12();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let len = rng.random_range(1..2000);
            let n = tax.class_count() as LabelId;
            let pred: Vec<LabelId> = (0..len).map(|_| rng.random_range(0..n)).collect();
            let gt: Vec<LabelId> = (0..len).map(|_| rng.random_range(0..n)).collect();
            let mut cm = ConfusionMatrix::new(&tax);
            cm.accumulate(&pred, &gt).unwrap();
            for c in 1..n {
                assert_eq!(cm.iou(c).unwrap(), oracle_iou(&pred, &gt, c), "class {c}");
            }
        }
    }

    #[test]
    fn report_formats() {
        let mut cm = ConfusionMatrix::new(&common4());
        cm.accumulate(&[1, 2, 2], &[1, 2, 1]).unwrap();
        let report = cm.miou(&[1, 2, 3]).unwrap();
        let text = report.to_string();
        assert!(text.contains("Building"));
        assert!(text.contains("mIoU"));
        let csv = report.to_csv();
        assert!(csv.lines().last().unwrap().starts_with("miou,"));
        assert!(csv.contains("Car,undefined"));
    }
}
