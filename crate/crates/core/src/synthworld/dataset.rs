//! Multi-scene dataset generation: write sensor frames to disk and index
//! them with a manifest.
//!
//! Each frame produces five files next to the manifest:
//! `<id>.ply` (LiDAR cloud, sensor frame, labeled), `<id>_depth.pgm`
//! (16-bit millimeter depth), `<id>_semantic.pgm`, `<id>_color.ppm` and
//! `<id>.meta` -- a `key=value` sidecar holding the camera intrinsics and
//! the camera/LiDAR poses, which downstream fusion needs to relate the
//! images to the cloud.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{Mat3, Point3, Pose};
use crate::image::CameraIntrinsics;
use crate::io;
use crate::manifest::{DatasetManifest, FrameEntry};

use super::sensor::{capture_frame, LidarSpec, SensorFrame};
use super::{generate_scene, SceneConfig, SceneError, WEATHER_COUNT};

/// Ranges and fixed parameters for a whole generated dataset. Per scene,
/// actor counts are drawn from the ranges, the weather cycles through all
/// presets and the ego spawns at a fresh road location.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub seed: u64,
    /// Inclusive range of vehicles per scene.
    pub vehicle_range: (u32, u32),
    /// Inclusive range of pedestrians per scene.
    pub pedestrian_range: (u32, u32),
    pub town_extent: f64,
    pub building_density: f64,
    pub vegetation_density: f64,
    pub camera: CameraIntrinsics,
    pub lidar: LidarSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            seed: 0,
            vehicle_range: (40, 80),
            pedestrian_range: (10, 30),
            town_extent: 160.0,
            building_density: 0.5,
            vegetation_density: 0.5,
            camera: CameraIntrinsics::with_hfov(800, 600, 90.0).expect("valid default camera"),
            lidar: LidarSpec::default(),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.vehicle_range.0 > self.vehicle_range.1 {
            return Err(SceneError::InvalidConfig("vehicle range is inverted".into()));
        }
        if self.pedestrian_range.0 > self.pedestrian_range.1 {
            return Err(SceneError::InvalidConfig("pedestrian range is inverted".into()));
        }
        self.lidar.validate()
    }
}

/// Pose/intrinsics sidecar stored next to each frame's PLY.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMeta {
    pub intrinsics: CameraIntrinsics,
    pub camera_pose: Pose,
    pub lidar_pose: Pose,
    pub weather_id: u8,
}

fn pose_to_text(pose: &Pose) -> String {
    let r = pose.rotation().rows();
    let t = pose.translation();
    let mut parts = Vec::with_capacity(12);
    for row in r {
        for v in row {
            parts.push(format!("{v}"));
        }
    }
    for v in [t.x(), t.y(), t.z()] {
        parts.push(format!("{v}"));
    }
    parts.join(" ")
}

fn pose_from_text(text: &str, path: &Path) -> Result<Pose, SceneError> {
    let nums: Vec<f64> = text
        .split_whitespace()
        .map(|w| w.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| SceneError::MetaParse {
            path: path.display().to_string(),
            what: format!("bad pose '{text}'"),
        })?;
    if nums.len() != 12 {
        return Err(SceneError::MetaParse {
            path: path.display().to_string(),
            what: format!("pose needs 12 numbers, got {}", nums.len()),
        });
    }
    let rotation = Mat3::from_rows([
        [nums[0], nums[1], nums[2]],
        [nums[3], nums[4], nums[5]],
        [nums[6], nums[7], nums[8]],
    ]);
    let translation = Point3::new(nums[9], nums[10], nums[11]).map_err(|e| SceneError::MetaParse {
        path: path.display().to_string(),
        what: e.to_string(),
    })?;
    Ok(Pose::new(rotation, translation)?)
}

impl FrameMeta {
    pub fn to_text(&self) -> String {
        format!(
            "width={}\nheight={}\nfx={}\nfy={}\ncx={}\ncy={}\ncamera_pose={}\nlidar_pose={}\nweather={}\n",
            self.intrinsics.width(),
            self.intrinsics.height(),
            self.intrinsics.fx(),
            self.intrinsics.fy(),
            self.intrinsics.cx(),
            self.intrinsics.cy(),
            pose_to_text(&self.camera_pose),
            pose_to_text(&self.lidar_pose),
            self.weather_id,
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), SceneError> {
        io::write_atomic(path, self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FrameMeta, SceneError> {
        let text = std::fs::read_to_string(path)?;
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                fields.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |key: &str| -> Result<String, SceneError> {
            fields.get(key).cloned().ok_or_else(|| SceneError::MetaParse {
                path: path.display().to_string(),
                what: format!("missing key '{key}'"),
            })
        };
        let num = |key: &str| -> Result<f64, SceneError> {
            get(key)?.parse::<f64>().map_err(|_| SceneError::MetaParse {
                path: path.display().to_string(),
                what: format!("bad number for '{key}'"),
            })
        };
        let intrinsics = CameraIntrinsics::new(
            num("width")? as u32,
            num("height")? as u32,
            num("fx")?,
            num("fy")?,
            num("cx")?,
            num("cy")?,
        )?;
        Ok(FrameMeta {
            intrinsics,
            camera_pose: pose_from_text(&get("camera_pose")?, path)?,
            lidar_pose: pose_from_text(&get("lidar_pose")?, path)?,
            weather_id: num("weather")? as u8,
        })
    }
}

/// File name stems for one frame id.
fn frame_paths(frame_id: &str) -> (PathBuf, PathBuf, PathBuf, PathBuf) {
    (
        PathBuf::from(format!("{frame_id}.ply")),
        PathBuf::from(format!("{frame_id}_depth.pgm")),
        PathBuf::from(format!("{frame_id}_semantic.pgm")),
        PathBuf::from(format!("{frame_id}_color.ppm")),
    )
}

/// Writes captured frames into `out_dir` (created if missing) and returns
/// the manifest, which is also saved as `out_dir/manifest.tsv`.
pub fn write_frames(frames: &[SensorFrame], out_dir: &Path) -> Result<DatasetManifest, SceneError> {
    std::fs::create_dir_all(out_dir)?;
    let mut entries = Vec::with_capacity(frames.len());
    for frame in frames {
        let (ply, depth, semantic, color) = frame_paths(&frame.frame_id);
        io::write_ply(&frame.lidar, &out_dir.join(&ply))?;
        io::write_pgm16(&frame.depth, &out_dir.join(&depth))?;
        io::write_pgm8(&frame.semantic, &out_dir.join(&semantic))?;
        io::write_ppm(&frame.color, &out_dir.join(&color))?;
        let meta = FrameMeta {
            intrinsics: frame.intrinsics,
            camera_pose: frame.camera_pose,
            lidar_pose: frame.lidar_pose,
            weather_id: frame.weather_id,
        };
        meta.save(&out_dir.join(format!("{}.meta", frame.frame_id)))?;
        entries.push(FrameEntry {
            frame_id: frame.frame_id.clone(),
            ply,
            depth,
            semantic,
            color,
            point_count: frame.lidar.len() as u64,
            taxonomy: frame
                .lidar
                .taxonomy()
                .unwrap_or("carla12")
                .to_string(),
        });
    }
    let manifest = DatasetManifest::new(out_dir, entries);
    manifest.save(&out_dir.join("manifest.tsv"))?;
    Ok(manifest)
}

fn scene_seed(dataset_seed: u64, index: usize) -> u64 {
    // Distinct, well-separated per-scene seeds.
    dataset_seed
        .wrapping_mul(0x5851_F42D_4C95_7F2D)
        .wrapping_add(index as u64 + 1)
}

/// Generates `scene_count` independent scenes, captures one frame per scene
/// from a fresh ego spawn and writes everything plus the manifest into
/// `out_dir`. Fully deterministic in `config.seed`.
pub fn generate_dataset(
    config: &DatasetConfig,
    scene_count: usize,
    out_dir: &Path,
) -> Result<DatasetManifest, SceneError> {
    config.validate()?;
    if scene_count == 0 {
        return Err(SceneError::InvalidConfig("scene_count must be >= 1".into()));
    }
    let mut frames = Vec::with_capacity(scene_count);
    for index in 0..scene_count {
        let seed = scene_seed(config.seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scene_config = SceneConfig {
            seed,
            vehicle_count: rng.random_range(config.vehicle_range.0..=config.vehicle_range.1),
            pedestrian_count: rng
                .random_range(config.pedestrian_range.0..=config.pedestrian_range.1),
            weather_id: (index % WEATHER_COUNT) as u8,
            town_extent: config.town_extent,
            building_density: config.building_density,
            vegetation_density: config.vegetation_density,
        };
        let scene = generate_scene(&scene_config)?;
        let (spawn, yaw) = scene
            .road_pose(&mut rng)
            .ok_or_else(|| SceneError::InvalidConfig("scene has no roads".into()))?;
        let ego = Pose::from_yaw(yaw, spawn);
        frames.push(capture_frame(
            &scene,
            &ego,
            &config.camera,
            &config.lidar,
            scene_config.weather_id,
            format!("frame_{index:06}"),
        )?);
    }
    write_frames(&frames, out_dir)
}
