//! `synthseg generate`: write a synthetic dataset (one frame per scene) or
//! capture the frames of a scripted scenario.

use std::path::PathBuf;

use clap::Args;
use synthseg_core::image::CameraIntrinsics;
use synthseg_core::synthworld::{
    generate_dataset, generate_scene, run_scenario, write_frames, DatasetConfig, LidarSpec,
    ScenarioScript, SceneConfig,
};

use super::{echo_config, CmdError, CmdResult};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output dataset directory (created if missing)
    #[arg(long)]
    pub out: PathBuf,
    /// Number of scenes (one captured frame each)
    #[arg(long, default_value_t = 1)]
    pub scenes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scenario script; when given, the script's frames are captured over
    /// one base scene and --scenes is ignored
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Town side length in meters
    #[arg(long, default_value_t = 160.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 40)]
    pub vehicles_min: u32,
    #[arg(long, default_value_t = 80)]
    pub vehicles_max: u32,
    #[arg(long, default_value_t = 10)]
    pub pedestrians_min: u32,
    #[arg(long, default_value_t = 30)]
    pub pedestrians_max: u32,
    #[arg(long, default_value_t = 0.5)]
    pub building_density: f64,
    #[arg(long, default_value_t = 0.5)]
    pub vegetation_density: f64,
    #[arg(long, default_value_t = 800)]
    pub image_width: u32,
    #[arg(long, default_value_t = 600)]
    pub image_height: u32,
    /// Horizontal field of view in degrees
    #[arg(long, default_value_t = 90.0)]
    pub hfov: f64,
    #[arg(long, default_value_t = 32)]
    pub lidar_channels: u32,
    #[arg(long, default_value_t = 1024)]
    pub lidar_steps: u32,
    #[arg(long, default_value_t = 50.0)]
    pub lidar_range: f64,
}

pub fn run(args: &GenerateArgs) -> CmdResult {
    if args.scenes == 0 {
        return Err(CmdError::usage("--scenes must be >= 1"));
    }
    if args.vehicles_min > args.vehicles_max || args.pedestrians_min > args.pedestrians_max {
        return Err(CmdError::usage("actor count ranges are inverted"));
    }
    echo_config(
        "generate",
        &[
            ("out", args.out.display().to_string()),
            ("scenes", args.scenes.to_string()),
            ("seed", args.seed.to_string()),
            (
                "scenario",
                args.scenario
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "none".into()),
            ),
            ("extent", args.extent.to_string()),
            ("vehicles", format!("{}..{}", args.vehicles_min, args.vehicles_max)),
            ("pedestrians", format!("{}..{}", args.pedestrians_min, args.pedestrians_max)),
            ("building_density", args.building_density.to_string()),
            ("vegetation_density", args.vegetation_density.to_string()),
            ("image", format!("{}x{}", args.image_width, args.image_height)),
            ("hfov", args.hfov.to_string()),
            (
                "lidar",
                format!(
                    "{}x{} range {}",
                    args.lidar_channels, args.lidar_steps, args.lidar_range
                ),
            ),
        ],
    );

    let manifest = if let Some(script_path) = &args.scenario {
        let script = ScenarioScript::load(script_path)?;
        // The scenario runs over one deterministic base scene; sensor
        // parameters come from the script itself.
        let scene = generate_scene(&SceneConfig {
            seed: args.seed,
            vehicle_count: (args.vehicles_min + args.vehicles_max) / 2,
            pedestrian_count: (args.pedestrians_min + args.pedestrians_max) / 2,
            weather_id: script.weather_id,
            town_extent: args.extent,
            building_density: args.building_density,
            vegetation_density: args.vegetation_density,
        })?;
        let frames = run_scenario(&script, &scene)?;
        write_frames(&frames, &args.out)?
    } else {
        let config = DatasetConfig {
            seed: args.seed,
            vehicle_range: (args.vehicles_min, args.vehicles_max),
            pedestrian_range: (args.pedestrians_min, args.pedestrians_max),
            town_extent: args.extent,
            building_density: args.building_density,
            vegetation_density: args.vegetation_density,
            camera: CameraIntrinsics::with_hfov(args.image_width, args.image_height, args.hfov)?,
            lidar: LidarSpec {
                channels: args.lidar_channels,
                points_per_channel: args.lidar_steps,
                max_range: args.lidar_range,
                ..LidarSpec::default()
            },
        };
        generate_dataset(&config, args.scenes, &args.out)?
    };

    let points: u64 = manifest.entries().iter().map(|e| e.point_count).sum();
    println!(
        "wrote {} frames ({points} LiDAR points) to {}",
        manifest.len(),
        args.out.display()
    );
    Ok(())
}
