//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them). Tolerances and
//! thresholds are pinned in the assertions.
//!
//! Timing-sensitive criteria (6, 7, 9) serialize on a global lock so they
//! never contend for CPU with each other.

use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synthseg_core::batchpipe::{bench_prefetch, BatchPipe, PipeConfig};
use synthseg_core::fusion::{backproject, fuse, project_point};
use synthseg_core::geom::{Mat3, Point3, Pose};
use synthseg_core::image::{CameraIntrinsics, DepthImage};
use synthseg_core::manifest::{DatasetManifest, FrameEntry};
use synthseg_core::metrics::{ConfusionMatrix, MetricsError};
use synthseg_core::model::{
    loss_and_grad, train, FeatureParams, MlpClassifier, TrainConfig, FEATURE_DIM,
};
use synthseg_core::sampler::{farthest_point_sample, Modality};
use synthseg_core::synthworld::{generate_dataset, DatasetConfig, LidarSpec};
use synthseg_core::taxonomy::{
    builtin_remaps, carla12, common4, kitti19, semantic3d8, RemapTable, Taxonomy,
};
use synthseg_core::{LabelId, PointCloud, Rgb};

static TIMING_LOCK: Mutex<()> = Mutex::new(());

fn timing_guard() -> std::sync::MutexGuard<'static, ()> {
    TIMING_LOCK.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// Brute-force per-class set IoU: |A ∩ B| / |A ∪ B| over the index sets of
/// the class, skipping points with unlabelled ground truth.
fn oracle_iou(pred: &[LabelId], gt: &[LabelId], class: LabelId) -> Option<f64> {
    let mut intersection = 0u64;
    let mut union = 0u64;
    for (&p, &g) in pred.iter().zip(gt) {
        if g == 0 {
            continue;
        }
        let in_pred = p == class;
        let in_gt = g == class;
        if in_pred && in_gt {
            intersection += 1;
        }
        if in_pred || in_gt {
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
fn criterion_01_metrics_match_set_oracle_exactly() {
    let start = Instant::now();
    let taxonomy = carla12();
    let n_ids = taxonomy.class_count() as LabelId; // unlabelled + 12 classes
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for round in 0..1000 {
        let len = rng.random_range(1..=10_000);
        let pred: Vec<LabelId> = (0..len).map(|_| rng.random_range(0..n_ids)).collect();
        let gt: Vec<LabelId> = (0..len).map(|_| rng.random_range(0..n_ids)).collect();
        let mut cm = ConfusionMatrix::new(&taxonomy);
        cm.accumulate(&pred, &gt).unwrap();

        let mut oracle_sum = 0.0;
        let mut oracle_defined = 0usize;
        for class in 1..n_ids {
            let expected = oracle_iou(&pred, &gt, class);
            let got = cm.iou(class).unwrap();
            assert_eq!(got, expected, "round {round} class {class}: exact match required");
            if let Some(value) = expected {
                oracle_sum += value;
                oracle_defined += 1;
            }
        }
        let scored: Vec<LabelId> = (1..n_ids).collect();
        match cm.miou(&scored) {
            Ok(report) => {
                assert_eq!(report.miou, oracle_sum / oracle_defined as f64, "round {round} miou");
            }
            Err(MetricsError::NoDefinedClasses) => assert_eq!(oracle_defined, 0),
            Err(other) => panic!("round {round}: {other}"),
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!("ACCEPTANCE 1 PASS: iou/miou equal the set oracle exactly on 1000 random arrays ({elapsed:?})");
}

#[test]
fn criterion_02_spot_values_from_the_definitions() {
    // TP=1, FP=1, FN=2 => IoU = 1/4 exactly.
    let mut cm = ConfusionMatrix::new(&common4());
    cm.accumulate(&[1], &[1]).unwrap();
    cm.accumulate(&[1], &[2]).unwrap();
    cm.accumulate(&[2, 3], &[1, 1]).unwrap();
    assert_eq!(cm.iou(1).unwrap(), Some(0.25));

    // Per-class IoUs {0.5, 1.0} => mIoU = 0.75 exactly.
    let mut cm = ConfusionMatrix::new(&common4());
    cm.accumulate(&[1, 3, 2], &[1, 1, 2]).unwrap(); // class 1: TP 1 FN 1; class 2: perfect
    let report = cm.miou(&[1, 2]).unwrap();
    assert_eq!(cm.iou(1).unwrap(), Some(0.5));
    assert_eq!(cm.iou(2).unwrap(), Some(1.0));
    assert_eq!(report.miou, 0.75);
    println!("ACCEPTANCE 2 PASS: IoU 0.25 and mIoU 0.75 spot values are exact");
}

#[test]
fn criterion_03_projection_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut positive_pixels = 0usize;
    for _ in 0..100 {
        let width = rng.random_range(8..32);
        let height = rng.random_range(8..32);
        let intr = CameraIntrinsics::new(
            width,
            height,
            rng.random_range(20.0..400.0),
            rng.random_range(20.0..400.0),
            rng.random_range(0.0..(width as f64 - 0.01)),
            rng.random_range(0.0..(height as f64 - 0.01)),
        )
        .unwrap();
        let axis = Point3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0f64).max(0.1),
        )
        .unwrap();
        let pose = Pose::new(
            Mat3::from_axis_angle(axis, rng.random_range(0.0..std::f64::consts::TAU)),
            Point3::new(
                rng.random_range(-40.0..40.0),
                rng.random_range(-40.0..40.0),
                rng.random_range(-5.0..5.0),
            )
            .unwrap(),
        )
        .unwrap();
        let depths: Vec<f64> = (0..(width * height) as usize)
            .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.1..60.0) })
            .collect();
        let image = DepthImage::new(width, height, depths).unwrap();
        let cloud = backproject(&image, &intr, &pose).unwrap();

        let mut index = 0usize;
        for v in 0..height {
            for u in 0..width {
                let d = image.at(u, v);
                if d <= 0.0 {
                    continue;
                }
                let res = project_point(cloud.positions()[index], &intr, &pose);
                assert!((res.u - u as f64).abs() < 1e-6, "u error {}", (res.u - u as f64).abs());
                assert!((res.v - v as f64).abs() < 1e-6, "v error {}", (res.v - v as f64).abs());
                assert!((res.depth - d).abs() < 1e-9, "depth error {}", (res.depth - d).abs());
                index += 1;
            }
        }
        positive_pixels += index;
    }
    assert!(positive_pixels >= 10_000, "only {positive_pixels} positive pixels exercised");
    println!(
        "ACCEPTANCE 3 PASS: {positive_pixels} pixels round-trip within 1e-6 px / 1e-9 m over 100 images"
    );
}

#[test]
fn criterion_04_fusion_reproduces_semantic_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let config = DatasetConfig {
        seed: 404,
        vehicle_range: (10, 20),
        pedestrian_range: (4, 8),
        town_extent: 120.0,
        camera: CameraIntrinsics::with_hfov(96, 72, 90.0).unwrap(),
        lidar: LidarSpec {
            channels: 4,
            points_per_channel: 64,
            ..LidarSpec::default()
        },
        ..DatasetConfig::default()
    };
    let manifest = generate_dataset(&config, 10, dir.path()).unwrap();
    let mut checked = 0usize;
    for entry in manifest.entries() {
        let meta = synthseg_core::synthworld::FrameMeta::load(&manifest.meta_path(entry)).unwrap();
        let depth = synthseg_core::io::read_pgm16(&manifest.resolve(&entry.depth)).unwrap();
        let semantic = synthseg_core::io::read_pgm8(&manifest.resolve(&entry.semantic)).unwrap();
        let color = synthseg_core::io::read_ppm(&manifest.resolve(&entry.color)).unwrap();
        let cloud = backproject(&depth, &meta.intrinsics, &meta.camera_pose).unwrap();
        let fused = fuse(&cloud, &semantic, &color, &meta.intrinsics, &meta.camera_pose).unwrap();

        let mut index = 0usize;
        for v in 0..depth.height() {
            for u in 0..depth.width() {
                if depth.at(u, v) > 0.0 {
                    assert_eq!(
                        fused.labels().unwrap()[index],
                        semantic.at(u, v),
                        "frame {} pixel ({u},{v}) label mismatch",
                        entry.frame_id
                    );
                    index += 1;
                }
            }
        }
        assert_eq!(index, fused.len());
        checked += index;
    }
    println!(
        "ACCEPTANCE 4 PASS: fused labels match the semantic render for 100% of {checked} in-frustum points over 10 frames"
    );
}

#[test]
fn criterion_05_fps_matches_greedy_oracle() {
    /// Independent greedy oracle recomputing distances from scratch.
    fn oracle(points: &[Point3], k: usize, start: usize) -> Vec<usize> {
        let mut chosen = vec![start];
        while chosen.len() < k {
            let mut best = 0usize;
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

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for round in 0..500 {
        let n = rng.random_range(1..=64);
        let points: Vec<Point3> = (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                )
                .unwrap()
            })
            .collect();
        let k = rng.random_range(1..=n);
        let start = rng.random_range(0..n);
        assert_eq!(
            farthest_point_sample(&points, k, start).unwrap(),
            oracle(&points, k, start),
            "round {round} (n={n}, k={k}, start={start})"
        );
    }
    println!("ACCEPTANCE 5 PASS: FPS equals the greedy oracle index-for-index on 500 random sets");
}

/// Tiny on-disk dataset for the pipe criteria.
fn pipe_dataset(dir: &Path, frames: usize, points: usize) -> DatasetManifest {
    let mut entries = Vec::new();
    for i in 0..frames {
        let positions: Vec<Point3> = (0..points)
            .map(|p| Point3::new(p as f64 * 0.05, i as f64, (p % 7) as f64 * 0.1).unwrap())
            .collect();
        let labels: Vec<LabelId> = (0..points).map(|p| (p % 4 + 1) as LabelId).collect();
        let colors: Vec<Rgb> = (0..points).map(|p| Rgb::new(p as u8, i as u8, 3)).collect();
        let cloud = PointCloud::from_positions(positions)
            .with_colors(colors)
            .unwrap()
            .with_labels(labels, "common4")
            .unwrap();
        let name = format!("frame_{i:03}.ply");
        synthseg_core::io::write_ply(&cloud, &dir.join(&name)).unwrap();
        entries.push(FrameEntry {
            frame_id: format!("frame_{i:03}"),
            ply: name.into(),
            depth: "unused".into(),
            semantic: "unused".into(),
            color: "unused".into(),
            point_count: points as u64,
            taxonomy: "common4".into(),
        });
    }
    DatasetManifest::new(dir, entries)
}

#[test]
fn criterion_06_pipe_boundedness_and_exact_accounting() {
    let _guard = timing_guard();
    let dir = tempfile::tempdir().unwrap();
    let manifest = pipe_dataset(dir.path(), 6, 256);

    // Stalled consumer: 30 s soak with queue_limit 4, buffer_limit 2.
    let config = PipeConfig {
        queue_limit: 4,
        buffer_limit: 2,
        sample_size: 32,
        poll_interval: Duration::from_millis(1),
        modality: Modality::RgbD,
        ..PipeConfig::default()
    };
    let pipe = BatchPipe::start(&manifest, config).unwrap();
    std::thread::sleep(Duration::from_secs(30));
    let stats = pipe.stats();
    assert_eq!(stats.batches_consumed, 0);
    assert!(
        stats.peak_resident_batches <= 7,
        "stalled peak {} exceeds queue+buffer+1 = 7",
        stats.peak_resident_batches
    );
    pipe.shutdown();
    let quiesced = pipe.stats();
    assert_eq!(
        quiesced.batches_produced,
        quiesced.batches_consumed + quiesced.batches_discarded,
        "shutdown accounting must reconcile"
    );

    // Active consumer: 10_000 batches, no loss, no duplication. The
    // deterministic production cycle makes any drop/dup/reorder visible as
    // a source_frame mismatch.
    let expected_order = {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut order: Vec<usize> = (0..manifest.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        order
    };
    let pipe = BatchPipe::start(&manifest, config).unwrap();
    let deadline = Duration::from_secs(120);
    for i in 0..10_000usize {
        let batch = pipe.get_batch(deadline).expect("liveness: batches keep arriving");
        let want = &manifest.entries()[expected_order[i % expected_order.len()]].frame_id;
        assert_eq!(&batch.source_frame, want, "batch {i} out of order (lost or duplicated)");
    }
    pipe.shutdown();
    let stats = pipe.stats();
    assert_eq!(stats.batches_consumed, 10_000);
    assert_eq!(
        stats.batches_produced,
        stats.batches_consumed + stats.batches_discarded
    );
    assert!(stats.peak_resident_batches <= 7);
    println!(
        "ACCEPTANCE 6 PASS: peak resident {} <= 7 during a 30 s stall; 10000 batches delivered with exact accounting",
        stats.peak_resident_batches
    );
}

#[test]
fn criterion_07_prefetch_speedup_over_synchronous() {
    let _guard = timing_guard();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = pipe_dataset(dir.path(), 8, 512);
    let config = PipeConfig {
        queue_limit: 4,
        buffer_limit: 2,
        sample_size: 64,
        poll_interval: Duration::from_millis(1),
        io_delay: Duration::from_millis(5),
        modality: Modality::RgbD,
        ..PipeConfig::default()
    };
    let report = bench_prefetch(&manifest, config, 150, Duration::from_millis(5)).unwrap();
    let elapsed = start.elapsed();
    assert!(
        report.speedup() >= 1.5,
        "prefetch speedup {:.2}x below 1.5x (sync {:.1}/s, prefetched {:.1}/s)",
        report.speedup(),
        report.synchronous_batches_per_sec,
        report.prefetched_batches_per_sec
    );
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 7 PASS: prefetched {:.1} b/s vs synchronous {:.1} b/s = {:.2}x >= 1.5x ({elapsed:?})",
        report.prefetched_batches_per_sec,
        report.synchronous_batches_per_sec,
        report.speedup()
    );
}

#[test]
fn criterion_08_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for draw in 0..100 {
        let hidden = rng.random_range(2..7);
        let classes = rng.random_range(2..6);
        let model = MlpClassifier::new(
            hidden,
            classes,
            "t",
            Modality::RgbD,
            FeatureParams::default(),
            draw,
        );
        let n_points = rng.random_range(2..12);
        let features: Vec<[f64; FEATURE_DIM]> = (0..n_points)
            .map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0)))
            .collect();
        let labels: Vec<LabelId> =
            (0..n_points).map(|_| rng.random_range(1..classes as LabelId)).collect();
        let mut weights = vec![1.0; classes];
        weights[0] = 0.0;

        let (_, grad) = loss_and_grad(&model, &features, &labels, &weights).unwrap();
        let h = 1e-5;
        for pi in 0..model.param_count() {
            let mut plus = model.clone();
            plus.params_mut()[pi] += h;
            let (lp, _) = loss_and_grad(&plus, &features, &labels, &weights).unwrap();
            let mut minus = model.clone();
            minus.params_mut()[pi] -= h;
            let (lm, _) = loss_and_grad(&minus, &features, &labels, &weights).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let denom = numeric.abs().max(grad[pi].abs()).max(1e-8);
            let rel = (numeric - grad[pi]).abs() / denom;
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4, "max relative gradient error {worst}");
    println!("ACCEPTANCE 8 PASS: max relative gradient error {worst:.2e} < 1e-4 over 100 draws");
}

#[test]
fn criterion_09_end_to_end_smoke_via_the_cli() {
    let _guard = timing_guard();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_synthseg");
    let run = |args: &[&str]| {
        let out = std::process::Command::new(bin).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "command {:?} failed:\n{}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8_lossy(&out.stdout).into_owned()
    };

    let raw = dir.path().join("raw");
    run(&["generate", "--out", &raw.display().to_string(), "--scenes", "20", "--seed", "7"]);
    let fused = dir.path().join("fused");
    run(&[
        "fuse",
        "--manifest",
        &raw.join("manifest.tsv").display().to_string(),
        "--out",
        &fused.display().to_string(),
    ]);
    let model = dir.path().join("model.bin");
    run(&[
        "train",
        "--manifest",
        &fused.join("manifest.tsv").display().to_string(),
        "--model-out",
        &model.display().to_string(),
        "--epochs",
        "50",
        "--train-fraction",
        "0.8",
        "--seed",
        "7",
        "--scored-classes",
        "Building,Road,Sidewalk,Vegetation,Car",
    ]);
    let csv = run(&[
        "eval",
        "--model",
        &model.display().to_string(),
        "--manifest",
        &model.with_extension("val.tsv").display().to_string(),
        "--classes",
        "Building,Road,Sidewalk,Vegetation,Car",
        "--csv",
    ]);
    let miou: f64 = csv
        .lines()
        .find_map(|l| l.strip_prefix("miou,"))
        .expect("eval prints a miou line")
        .parse()
        .unwrap();
    let elapsed = start.elapsed();
    assert!(miou >= 0.6, "validation mIoU {miou} below the 0.6 regression floor");
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 9 PASS: generate(20) -> fuse -> split 80/20 -> train(<=50 epochs) -> eval: val mIoU {miou:.4} >= 0.6 in {elapsed:?}"
    );
}

/// Builds fixture clouds and writes them as a dataset; `colored` controls
/// whether the two classes differ by color (same plane) or by geometry
/// (same colors).
fn modality_fixture(dir: &Path, color_separable: bool, seed: u64) -> DatasetManifest {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..8 {
        let mut positions = Vec::new();
        let mut labels = Vec::new();
        let mut colors = Vec::new();
        for _ in 0..400 {
            let x = rng.random_range(-12.0..12.0);
            let y = rng.random_range(-12.0..12.0);
            let first = rng.random_bool(0.5);
            if color_separable {
                // Identical geometry (one plane), different colors.
                positions.push(Point3::new(x, y, 0.0).unwrap());
                if first {
                    labels.push(2);
                    colors.push(Rgb::new(210, 40, 40));
                } else {
                    labels.push(4);
                    colors.push(Rgb::new(40, 210, 40));
                }
            } else {
                // Identical colors, different geometry.
                colors.push(Rgb::new(128, 128, 128));
                if first {
                    positions.push(Point3::new(x, y, 0.0).unwrap());
                    labels.push(2);
                } else {
                    positions.push(Point3::new(x, y, rng.random_range(2.0..4.0)).unwrap());
                    labels.push(1);
                }
            }
        }
        let cloud = PointCloud::from_positions(positions)
            .with_colors(colors)
            .unwrap()
            .with_labels(labels, "common4")
            .unwrap();
        let name = format!("fixture_{i:02}.ply");
        synthseg_core::io::write_ply(&cloud, &dir.join(&name)).unwrap();
        entries.push(FrameEntry {
            frame_id: format!("fixture_{i:02}"),
            ply: name.into(),
            depth: "unused".into(),
            semantic: "unused".into(),
            color: "unused".into(),
            point_count: 400,
            taxonomy: "common4".into(),
        });
    }
    DatasetManifest::new(dir, entries)
}

fn train_fixture(manifest: &DatasetManifest, modality: Modality, scored: Vec<LabelId>) -> f64 {
    let (train_m, val_m) = synthseg_core::sampler::split_manifest(
        manifest,
        &synthseg_core::sampler::SplitSpec { train_fraction: 0.75, seed: 2 },
    )
    .unwrap();
    let config = TrainConfig {
        hidden: 16,
        learning_rate: 0.01,
        max_epochs: 25,
        sample_size: 400,
        modality,
        feature_params: FeatureParams { radius: 1.2, max_neighbors: 16 },
        seed: 9,
        scored_classes: Some(scored),
        poll_interval: Duration::from_millis(1),
        ..TrainConfig::default()
    };
    let (_, log) = train(&train_m, &val_m, &common4(), &config).unwrap();
    log.last().unwrap().val_miou
}

#[test]
fn criterion_10_modality_direction() {
    // Color-only-separable fixture: RGB-D must strictly beat D.
    let dir = tempfile::tempdir().unwrap();
    let color_manifest = modality_fixture(dir.path(), true, 10);
    let rgbd_color = train_fixture(&color_manifest, Modality::RgbD, vec![2, 4]);
    let d_color = train_fixture(&color_manifest, Modality::D, vec![2, 4]);
    assert!(
        rgbd_color > d_color,
        "RGB-D {rgbd_color:.4} must strictly exceed D {d_color:.4} on the color fixture"
    );

    // Geometry-only fixture: D stays within 10% of RGB-D.
    let dir2 = tempfile::tempdir().unwrap();
    let geo_manifest = modality_fixture(dir2.path(), false, 11);
    let rgbd_geo = train_fixture(&geo_manifest, Modality::RgbD, vec![1, 2]);
    let d_geo = train_fixture(&geo_manifest, Modality::D, vec![1, 2]);
    assert!(
        d_geo >= 0.9 * rgbd_geo,
        "D {d_geo:.4} must stay within 10% of RGB-D {rgbd_geo:.4} on the geometry fixture"
    );
    println!(
        "ACCEPTANCE 10 PASS: color fixture RGB-D {rgbd_color:.3} > D {d_color:.3}; geometry fixture D {d_geo:.3} >= 0.9 x RGB-D {rgbd_geo:.3}"
    );
}

#[test]
fn criterion_11_remap_totality_exhaustive() {
    // The explicit pairs of every built-in table, written down independently
    // of the table construction; every other source id must sink to 0.
    fn expected_pairs(table: &RemapTable) -> Vec<(String, String)> {
        match (table.source().name(), table.target().name()) {
            ("semantic3d8", "common4") => vec![
                ("Buildings", "Building"),
                ("Man-made Terrain", "Road"),
                ("Cars", "Car"),
                ("High Vegetation", "Vegetation"),
                ("Low Vegetation", "Vegetation"),
            ],
            ("carla12", "common4") => vec![
                ("Building", "Building"),
                ("Road", "Road"),
                ("Road-line", "Road"),
                ("Car", "Car"),
                ("Vegetation", "Vegetation"),
            ],
            ("kitti19", "common4") => vec![
                ("Building", "Building"),
                ("Road", "Road"),
                ("Car", "Car"),
                ("Motorcycle", "Car"),
                ("Bus", "Car"),
                ("Bicycle", "Car"),
                ("Vegetation", "Vegetation"),
            ],
            ("kitti19", "carla12") => vec![
                ("Road", "Road"),
                ("Sidewalk", "Sidewalk"),
                ("Building", "Building"),
                ("Wall", "Wall"),
                ("Fence", "Fence"),
                ("Pole", "Pole"),
                ("Traffic-sign", "Traffic-sign"),
                ("Vegetation", "Vegetation"),
                ("Person", "Pedestrian"),
                ("Car", "Car"),
            ],
            other => panic!("unexpected builtin table {other:?}"),
        }
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
    }

    let tables = builtin_remaps();
    assert_eq!(tables.len(), 4);
    // All four built-in taxonomies appear as sources.
    let _ = (carla12(), kitti19(), semantic3d8(), common4());
    let mut checked = 0usize;
    for table in &tables {
        let pairs = expected_pairs(table);
        let explicit: std::collections::HashMap<LabelId, LabelId> = pairs
            .iter()
            .map(|(from, to)| {
                (
                    table.source().id_of(from).unwrap(),
                    table.target().id_of(to).unwrap(),
                )
            })
            .collect();
        for id in 0..table.source().class_count() as LabelId {
            let got = table.remap(id).expect("total over every source id");
            assert!(table.target().contains(got));
            match explicit.get(&id) {
                Some(&want) => assert_eq!(got, want, "{} id {id}", table.source().name()),
                None => assert_eq!(got, 0, "{} id {id} must sink to unlabelled", table.source().name()),
            }
            checked += 1;
        }
    }
    println!("ACCEPTANCE 11 PASS: all {checked} source ids across 4 built-in tables remap totally, unlisted ids to unlabelled");
}

/// The remap invariant also holds for user-supplied tables loaded from the
/// text format (exercised against a fresh custom taxonomy).
#[test]
fn criterion_11b_custom_table_totality() {
    let custom = Taxonomy::from_text(
        "custom3",
        "0\tunlabelled\t0,0,0\n1\tGround\t10,10,10\n2\tThing\t20,20,20\n3\tStuff\t30,30,30\n",
    )
    .unwrap();
    let table = RemapTable::from_text(custom.clone(), common4(), "1\t2\n").unwrap();
    assert_eq!(table.remap(0).unwrap(), 0);
    assert_eq!(table.remap(1).unwrap(), 2);
    assert_eq!(table.remap(2).unwrap(), 0);
    assert_eq!(table.remap(3).unwrap(), 0);
    println!("ACCEPTANCE 11b PASS: custom text-format tables are total with the unlabelled sink");
}
