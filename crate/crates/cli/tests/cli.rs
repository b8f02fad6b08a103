//! End-to-end tests of the `synthseg` binary: subcommand wiring, exit
//! codes, determinism and output formats.

use std::path::Path;
use std::process::{Command, Output};

fn synthseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Small, fast generation settings shared by the tests.
fn generate_small(out: &Path, seed: u64) {
    let out_s = out.display().to_string();
    let seed_s = seed.to_string();
    let result = synthseg(&[
        "generate",
        "--out",
        &out_s,
        "--scenes",
        "3",
        "--seed",
        &seed_s,
        "--image-width",
        "96",
        "--image-height",
        "72",
        "--lidar-channels",
        "8",
        "--lidar-steps",
        "128",
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
}

#[test]
fn generate_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    generate_small(&a, 42);
    generate_small(&b, 42);
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 16); // 3 frames x 5 files + manifest
    for name in names {
        let left = std::fs::read(a.join(&name)).unwrap();
        let right = std::fs::read(b.join(&name)).unwrap();
        assert_eq!(left, right, "{name} differs across identical runs");
    }
}

#[test]
fn remap_then_stats_shows_common4_rows() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    generate_small(&raw, 7);
    let remapped = dir.path().join("common4");
    let manifest = raw.join("manifest.tsv").display().to_string();
    let result = synthseg(&[
        "remap",
        "--manifest",
        &manifest,
        "--target",
        "common4",
        "--out",
        &remapped.display().to_string(),
    ]);
    assert!(result.status.success(), "{}", stderr(&result));

    let result = synthseg(&[
        "stats",
        "--manifest",
        &remapped.join("manifest.tsv").display().to_string(),
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
    let text = stdout(&result);
    // Header + 5 class rows (unlabelled + 4) + total.
    for name in ["Unlabelled", "Building", "Road", "Car", "Vegetation", "total"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
    assert_eq!(text.lines().filter(|l| !l.starts_with("config:")).count(), 7);
}

#[test]
fn pipeline_train_eval_predict() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    generate_small(&raw, 11);
    let fused = dir.path().join("fused");
    let ok = synthseg(&[
        "fuse",
        "--manifest",
        &raw.join("manifest.tsv").display().to_string(),
        "--out",
        &fused.display().to_string(),
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));

    let model = dir.path().join("model.bin");
    let ok = synthseg(&[
        "train",
        "--manifest",
        &fused.join("manifest.tsv").display().to_string(),
        "--model-out",
        &model.display().to_string(),
        "--epochs",
        "2",
        "--hidden",
        "8",
        "--sample-size",
        "256",
        "--train-fraction",
        "0.7",
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert!(model.exists());
    assert!(model.with_extension("csv").exists(), "training log written");

    // The config echo makes the run reproducible.
    let text = stdout(&ok);
    assert!(text.starts_with("config: command=train"));
    assert!(text.contains("sample_size=256"));

    let ok = synthseg(&[
        "eval",
        "--model",
        &model.display().to_string(),
        "--manifest",
        &fused.join("manifest.tsv").display().to_string(),
        "--classes",
        "Building,Road,Sidewalk,Vegetation,Car",
        "--csv",
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    let csv = stdout(&ok);
    assert!(csv.lines().any(|l| l.starts_with("miou,")), "csv output:\n{csv}");

    // Predict paints palette colors onto the output cloud.
    let input = fused.join("frame_000000.ply");
    let out_ply = dir.path().join("pred.ply");
    let ok = synthseg(&[
        "predict",
        "--model",
        &model.display().to_string(),
        "--input",
        &input.display().to_string(),
        "--output",
        &out_ply.display().to_string(),
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    let cloud = synthseg_core::io::read_ply(&out_ply).unwrap();
    let taxonomy = synthseg_core::taxonomy::carla12();
    let labels = cloud.labels().unwrap();
    let colors = cloud.colors().unwrap();
    for (label, color) in labels.iter().zip(colors) {
        assert_eq!(taxonomy.color_of(*label).unwrap(), *color);
    }
}

#[test]
fn scenario_generation_produces_frames() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("crash.scenario");
    std::fs::write(
        &script,
        "\
duration=3
frame_rate=10
camera.width=64
camera.height=48
lidar.channels=4
lidar.points_per_channel=64
ego.spawn=2 -20 0 90
ego.speed=5
ego.path=2 20
actor.0.kind=car
actor.0.spawn=-15 2 0 0
actor.0.behaviour=straight 6 0
trigger.0.actor=0
trigger.0.center=2 -20
trigger.0.radius=50
",
    )
    .unwrap();
    let out = dir.path().join("scenario_out");
    let ok = synthseg(&[
        "generate",
        "--out",
        &out.display().to_string(),
        "--scenario",
        &script.display().to_string(),
        "--seed",
        "3",
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    let manifest = synthseg_core::manifest::DatasetManifest::load(&out.join("manifest.tsv")).unwrap();
    assert_eq!(manifest.len(), 3);
}

#[test]
fn bench_pipe_reports_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    generate_small(&raw, 5);
    let ok = synthseg(&[
        "bench-pipe",
        "--manifest",
        &raw.join("manifest.tsv").display().to_string(),
        "--batches",
        "30",
        "--latency-ms",
        "2",
        "--train-ms",
        "2",
        "--sample-size",
        "128",
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    let text = stdout(&ok);
    assert!(text.contains("synchronous:"));
    assert!(text.contains("prefetched:"));
    assert!(text.contains("speedup:"));
}

#[test]
fn exit_codes_follow_the_contract() {
    // Unknown flag: usage, exit 1.
    let out = synthseg(&["generate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    // Missing manifest file: data error, exit 2.
    let out = synthseg(&["stats", "--manifest", "/nonexistent/manifest.tsv"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    // Unknown config file key: usage, exit 1, message names the key.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "bogus_key=3\n").unwrap();
    let raw = dir.path().join("raw");
    generate_small(&raw, 1);
    let out = synthseg(&[
        "bench-pipe",
        "--manifest",
        &raw.join("manifest.tsv").display().to_string(),
        "--config",
        &cfg.display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bogus_key"), "{}", stderr(&out));

    // Invalid scene count: usage, exit 1.
    let out = synthseg(&["generate", "--out", "/tmp/x", "--scenes", "0"]);
    assert_eq!(out.status.code(), Some(1));

    // --help exits 0.
    let out = synthseg(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_file_overrides_defaults_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    generate_small(&raw, 2);
    let cfg = dir.path().join("pipe.cfg");
    std::fs::write(&cfg, "sample_size=64\nqueue_limit=3\nmodality=d\n").unwrap();
    let manifest = raw.join("manifest.tsv").display().to_string();

    // File value applies...
    let out = synthseg(&[
        "bench-pipe",
        "--manifest",
        &manifest,
        "--batches",
        "5",
        "--latency-ms",
        "1",
        "--train-ms",
        "0",
        "--config",
        &cfg.display().to_string(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("sample_size=64"), "{text}");
    assert!(text.contains("queue_limit=3"), "{text}");
    assert!(text.contains("modality=d"), "{text}");

    // ...unless a flag overrides it.
    let out = synthseg(&[
        "bench-pipe",
        "--manifest",
        &manifest,
        "--batches",
        "5",
        "--latency-ms",
        "1",
        "--train-ms",
        "0",
        "--config",
        &cfg.display().to_string(),
        "--sample-size",
        "32",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("sample_size=32"));
}
