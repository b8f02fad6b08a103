//! Fixed-size training sample extraction and the point-set primitives
//! (farthest point sampling, ball query) that hierarchical point networks
//! build on, plus deterministic train/validation splits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cloud::{LabelId, PointCloud, Rgb};
use crate::geom::Point3;
use crate::manifest::DatasetManifest;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("requested {k} samples from {available} points")]
    NotEnoughPoints { k: usize, available: usize },
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("start index {start} out of range for {available} points")]
    StartOutOfRange { start: usize, available: usize },
    #[error("cannot sample from an empty cloud")]
    EmptyCloud,
    #[error("cloud has no labels")]
    MissingLabels,
    #[error("train fraction {0} must be in (0, 1)")]
    BadFraction(f64),
    #[error("manifest is empty")]
    EmptyManifest,
}

/// Which per-point channels feed the classifier: geometry plus color, or
/// geometry only (colors zeroed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    RgbD,
    D,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::RgbD => "rgbd",
            Modality::D => "d",
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rgbd" | "rgb-d" => Ok(Modality::RgbD),
            "d" => Ok(Modality::D),
            other => Err(format!("unknown modality '{other}' (expected rgbd or d)")),
        }
    }
}

/// A fixed-size training sample: recentered positions with matching colors
/// and labels, all exactly `sample_size` long.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub positions: Vec<Point3>,
    pub colors: Vec<Rgb>,
    pub labels: Vec<LabelId>,
    /// Id of the manifest frame this batch was sampled from (empty when the
    /// batch was sampled directly from a cloud).
    pub source_frame: String,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Greedy farthest point sampling over squared Euclidean distance.
///
/// `indices[0] == start_index`; each following index maximizes the minimum
/// distance to all previously selected points, ties broken by the lowest
/// index. Deterministic.
pub fn farthest_point_sample(
    points: &[Point3],
    k: usize,
    start_index: usize,
) -> Result<Vec<usize>, SampleError> {
    if k == 0 {
        return Err(SampleError::ZeroSamples);
    }
    if k > points.len() {
        return Err(SampleError::NotEnoughPoints { k, available: points.len() });
    }
    if start_index >= points.len() {
        return Err(SampleError::StartOutOfRange {
            start: start_index,
            available: points.len(),
        });
    }

    let mut selected = Vec::with_capacity(k);
    selected.push(start_index);
    // min_dist[i] = squared distance from point i to the nearest selected point
    let mut min_dist: Vec<f64> = points
        .iter()
        .map(|&p| p.distance_sq(points[start_index]))
        .collect();
    for _ in 1..k {
        let mut best = 0;
        let mut best_dist = f64::NEG_INFINITY;
        for (i, &d) in min_dist.iter().enumerate() {
            if d > best_dist {
                best_dist = d;
                best = i;
            }
        }
        selected.push(best);
        for (i, d) in min_dist.iter_mut().enumerate() {
            let nd = points[i].distance_sq(points[best]);
            if nd < *d {
                *d = nd;
            }
        }
    }
    Ok(selected)
}

/// Indices of up to `max_neighbors` points within `radius` of `center`, in
/// ascending index order. The empty result is allowed.
pub fn ball_query(
    points: &[Point3],
    center: Point3,
    radius: f64,
    max_neighbors: usize,
) -> Vec<usize> {
    let r_sq = radius * radius;
    let mut out = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        if p.distance_sq(center) <= r_sq {
            out.push(i);
            if out.len() == max_neighbors {
                break;
            }
        }
    }
    out
}

/// Draws a fixed-size sample from a labeled cloud.
///
/// With at least `sample_size` points the sample is uniform without
/// replacement; smaller clouds are sampled with replacement to fill.
/// Positions are recentered by subtracting the sampled centroid. The D
/// modality zeroes colors; clouds without colors yield black.
pub fn sample_batch(
    cloud: &PointCloud,
    sample_size: usize,
    rng_seed: u64,
    modality: Modality,
) -> Result<Batch, SampleError> {
    if cloud.is_empty() {
        return Err(SampleError::EmptyCloud);
    }
    let labels = cloud.labels().ok_or(SampleError::MissingLabels)?;
    if sample_size == 0 {
        return Err(SampleError::ZeroSamples);
    }
    let n = cloud.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let indices: Vec<usize> = if n >= sample_size {
        // Partial Fisher-Yates: the first `sample_size` slots are a uniform
        // sample without replacement.
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..sample_size {
            let j = rng.random_range(i..n);
            pool.swap(i, j);
        }
        pool.truncate(sample_size);
        pool
    } else {
        (0..sample_size).map(|_| rng.random_range(0..n)).collect()
    };

    let mut centroid = Point3::ORIGIN;
    for &i in &indices {
        centroid = centroid.add(cloud.positions()[i]);
    }
    centroid = centroid.scale(1.0 / sample_size as f64);

    let positions = indices
        .iter()
        .map(|&i| cloud.positions()[i].sub(centroid))
        .collect();
    let colors = match (modality, cloud.colors()) {
        (Modality::RgbD, Some(colors)) => indices.iter().map(|&i| colors[i]).collect(),
        _ => vec![Rgb::BLACK; sample_size],
    };
    let batch_labels = indices.iter().map(|&i| labels[i]).collect();
    Ok(Batch {
        positions,
        colors,
        labels: batch_labels,
        source_frame: String::new(),
    })
}

/// Train/validation split parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8, seed: 0 }
    }
}

/// Deterministically shuffles the manifest's frames and assigns the first
/// `ceil(train_fraction * N)` to the training manifest, the rest to
/// validation. The partition is exact: disjoint and covering.
pub fn split_manifest(
    manifest: &DatasetManifest,
    spec: &SplitSpec,
) -> Result<(DatasetManifest, DatasetManifest), SampleError> {
    if manifest.is_empty() {
        return Err(SampleError::EmptyManifest);
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(SampleError::BadFraction(spec.train_fraction));
    }
    let n = manifest.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let train_count = (spec.train_fraction * n as f64).ceil() as usize;
    let train: Vec<_> = order[..train_count]
        .iter()
        .map(|&i| manifest.entries()[i].clone())
        .collect();
    let val: Vec<_> = order[train_count..]
        .iter()
        .map(|&i| manifest.entries()[i].clone())
        .collect();
    Ok((manifest.with_entries(train), manifest.with_entries(val)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::FrameEntry;
    use std::path::PathBuf;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z).unwrap()
    }

    /// Independent greedy oracle: recomputes the minimum distance to the
    /// chosen set from scratch at every step.
    fn fps_oracle(points: &[Point3], k: usize, start: usize) -> Vec<usize> {
        let mut chosen = vec![start];
        while chosen.len() < k {
            let mut best = 0;
            let mut best_dist = f64::NEG_INFINITY;
            for i in 0..points.len() {
                let d = chosen
                    .iter()
                    .map(|&c| points[i].distance_sq(points[c]))
                    .fold(f64::INFINITY, f64::min);
                if d > best_dist {
                    best_dist = d;
                    best = i;
                }
            }
            chosen.push(best);
        }
        chosen
    }

    #[test]
    fn fps_three_collinear_points() {
        let points = vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.5, 0.0, 0.0)];
        assert_eq!(farthest_point_sample(&points, 2, 0).unwrap(), vec![0, 1]);
    }

    #[test]
    fn fps_exhaustion_is_permutation() {
        let points = vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 2.0, 0.0), p(3.0, 3.0, 3.0)];
        let mut got = farthest_point_sample(&points, 4, 1).unwrap();
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2, 3]);
    }

    #[test]
    fn fps_single_sample_is_start() {
        let points = vec![p(1.0, 1.0, 1.0), p(2.0, 2.0, 2.0)];
        assert_eq!(farthest_point_sample(&points, 1, 1).unwrap(), vec![1]);
    }

    #[test]
    fn fps_errors() {
        let points = vec![p(0.0, 0.0, 0.0)];
        assert!(matches!(
            farthest_point_sample(&points, 2, 0),
            Err(SampleError::NotEnoughPoints { .. })
        ));
        assert!(matches!(
            farthest_point_sample(&points, 0, 0),
            Err(SampleError::ZeroSamples)
        ));
        assert!(matches!(
            farthest_point_sample(&points, 1, 5),
            Err(SampleError::StartOutOfRange { .. })
        ));
    }

    #[test]
    fn fps_matches_oracle_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.random_range(1..=64);
            let points: Vec<Point3> = (0..n)
                .map(|_| {
                    p(
                        rng.random_range(-10.0..10.0),
                        rng.random_range(-10.0..10.0),
                        rng.random_range(-10.0..10.0),
                    )
                })
                .collect();
            let k = rng.random_range(1..=n);
            let start = rng.random_range(0..n);
            let got = farthest_point_sample(&points, k, start).unwrap();
            assert_eq!(got, fps_oracle(&points, k, start));
        }
    }

    #[test]
    fn fps_indices_distinct() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<Point3> = (0..40)
            .map(|_| p(rng.random(), rng.random(), rng.random()))
            .collect();
        let got = farthest_point_sample(&points, 40, 3).unwrap();
        let mut sorted = got.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), got.len());
    }

    #[test]
    fn ball_query_basics() {
        let points = vec![p(0.0, 0.0, 0.0), p(2.0, 0.0, 0.0)];
        assert_eq!(ball_query(&points, p(0.0, 0.0, 0.0), 1.0, 8), vec![0]);
        assert!(ball_query(&points, p(100.0, 0.0, 0.0), 1.0, 8).is_empty());
        // Huge radius returns the first max_neighbors indices.
        let many: Vec<Point3> = (0..10).map(|i| p(i as f64, 0.0, 0.0)).collect();
        assert_eq!(ball_query(&many, p(0.0, 0.0, 0.0), 1e9, 3), vec![0, 1, 2]);
    }

    #[test]
    fn ball_query_distance_predicate_holds() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let points: Vec<Point3> = (0..100)
            .map(|_| p(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 0.0))
            .collect();
        let center = p(0.3, -0.2, 0.0);
        let radius = 2.5;
        let got = ball_query(&points, center, radius, 16);
        for &i in &got {
            assert!(points[i].distance(center) <= radius);
        }
        // No qualifying index below the last returned one is omitted.
        if let Some(&last) = got.last() {
            for i in 0..last {
                let qualifies = points[i].distance(center) <= radius;
                assert_eq!(qualifies, got.contains(&i));
            }
        }
    }

    fn labeled_cloud(n: usize) -> PointCloud {
        let positions = (0..n).map(|i| p(i as f64, (i % 3) as f64, 0.0)).collect();
        let labels = (0..n).map(|i| (i % 4) as LabelId).collect();
        let colors = (0..n).map(|i| Rgb::new(i as u8, 0, 0)).collect();
        PointCloud::from_positions(positions)
            .with_colors(colors)
            .unwrap()
            .with_labels(labels, "common4")
            .unwrap()
    }

    #[test]
    fn exact_size_cloud_is_a_permutation() {
        let cloud = labeled_cloud(64);
        let batch = sample_batch(&cloud, 64, 5, Modality::RgbD).unwrap();
        // Every original point appears exactly once (keyed by color byte).
        let mut seen: Vec<u8> = batch.colors.iter().map(|c| c.r).collect();
        seen.sort_unstable();
        let expected: Vec<u8> = (0..64).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn small_cloud_samples_with_replacement() {
        let cloud = labeled_cloud(10);
        let batch = sample_batch(&cloud, 100, 1, Modality::RgbD).unwrap();
        assert_eq!(batch.len(), 100);
        // All color ids must come from the original 10 points.
        assert!(batch.colors.iter().all(|c| c.r < 10));
    }

    #[test]
    fn batch_centroid_is_origin() {
        let cloud = labeled_cloud(50);
        let batch = sample_batch(&cloud, 32, 9, Modality::RgbD).unwrap();
        let mut centroid = Point3::ORIGIN;
        for &pos in &batch.positions {
            centroid = centroid.add(pos);
        }
        centroid = centroid.scale(1.0 / 32.0);
        assert!(centroid.norm() < 1e-9);
    }

    #[test]
    fn d_modality_zeroes_colors() {
        let cloud = labeled_cloud(20);
        let batch = sample_batch(&cloud, 8, 3, Modality::D).unwrap();
        assert!(batch.colors.iter().all(|&c| c == Rgb::BLACK));
    }

    #[test]
    fn sample_batch_deterministic_per_seed() {
        let cloud = labeled_cloud(100);
        let a = sample_batch(&cloud, 16, 77, Modality::RgbD).unwrap();
        let b = sample_batch(&cloud, 16, 77, Modality::RgbD).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_batch_errors() {
        let empty = PointCloud::from_positions(vec![]);
        assert!(matches!(
            sample_batch(&empty, 8, 0, Modality::D),
            Err(SampleError::EmptyCloud)
        ));
        let unlabeled = PointCloud::from_positions(vec![p(0.0, 0.0, 0.0)]);
        assert!(matches!(
            sample_batch(&unlabeled, 8, 0, Modality::D),
            Err(SampleError::MissingLabels)
        ));
    }

    #[test]
    fn label_distribution_tracks_cloud_distribution() {
        // Chi-square sanity check: accumulated over many seeds, sampled
        // label frequencies approach the cloud's own distribution.
        let cloud = labeled_cloud(400); // labels 0..4 uniform by construction
        let mut counts = [0u64; 4];
        let draws = 200;
        for seed in 0..draws {
            let batch = sample_batch(&cloud, 64, seed, Modality::D).unwrap();
            for &l in &batch.labels {
                counts[l as usize] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        let expected = total as f64 / 4.0;
        let chi_sq: f64 = counts
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        // df = 3; even p = 1e-6 would be ~30. Deterministic seeds keep this stable.
        assert!(chi_sq < 30.0, "chi-square {chi_sq} too large: {counts:?}");
    }

    fn manifest_with(n: usize) -> DatasetManifest {
        let entries = (0..n)
            .map(|i| FrameEntry {
                frame_id: format!("frame_{i:03}"),
                ply: PathBuf::from(format!("{i}.ply")),
                depth: PathBuf::from(format!("{i}.d.pgm")),
                semantic: PathBuf::from(format!("{i}.s.pgm")),
                color: PathBuf::from(format!("{i}.ppm")),
                point_count: 10,
                taxonomy: "carla12".into(),
            })
            .collect();
        DatasetManifest::new("/tmp/x", entries)
    }

    #[test]
    fn split_80_20() {
        let manifest = manifest_with(10);
        let spec = SplitSpec { train_fraction: 0.8, seed: 4 };
        let (train, val) = split_manifest(&manifest, &spec).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(val.len(), 2);
        let mut all: Vec<String> = train
            .entries()
            .iter()
            .chain(val.entries())
            .map(|e| e.frame_id.clone())
            .collect();
        all.sort();
        let mut expected: Vec<String> = (0..10).map(|i| format!("frame_{i:03}")).collect();
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn split_deterministic() {
        let manifest = manifest_with(25);
        let spec = SplitSpec { train_fraction: 0.8, seed: 123 };
        let (a_train, a_val) = split_manifest(&manifest, &spec).unwrap();
        let (b_train, b_val) = split_manifest(&manifest, &spec).unwrap();
        assert_eq!(a_train.entries(), b_train.entries());
        assert_eq!(a_val.entries(), b_val.entries());
    }

    #[test]
    fn split_single_frame_all_train() {
        let manifest = manifest_with(1);
        let (train, val) = split_manifest(&manifest, &SplitSpec::default()).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(val.len(), 0);
    }

    #[test]
    fn split_rejects_empty_and_bad_fraction() {
        let manifest = manifest_with(0);
        assert!(matches!(
            split_manifest(&manifest, &SplitSpec::default()),
            Err(SampleError::EmptyManifest)
        ));
        let manifest = manifest_with(3);
        let spec = SplitSpec { train_fraction: 1.0, seed: 0 };
        assert!(matches!(
            split_manifest(&manifest, &spec),
            Err(SampleError::BadFraction(_))
        ));
    }
}
