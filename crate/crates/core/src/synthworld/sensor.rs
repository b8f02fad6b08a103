//! Simulated sensors: a spinning LiDAR and pixel-aligned depth, semantic
//! and color cameras.
//!
//! The three camera images come from a single ray-casting pass, so for
//! every pixel the semantic label is exactly the label of the primitive
//! that produced the depth sample, and the color is that primitive's
//! weather-tinted palette color.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloud::{LabelId, PointCloud, Rgb};
use crate::geom::{Mat3, Point3, Pose};
use crate::image::{CameraIntrinsics, ColorImage, DepthImage, SemanticImage};
use crate::taxonomy::carla12;

use super::raycast::{Hit, Ray, RayCaster};
use super::{brightness_jitter, weather_preset, Scene, SceneError};

/// Camera hits beyond this range are treated as misses, keeping depths well
/// inside the 16-bit millimeter file encoding.
pub const CAMERA_MAX_DEPTH: f64 = 60.0;

/// Spinning LiDAR parameters: one ray per (channel, azimuth step), a full
/// 360 degree sweep per frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarSpec {
    pub channels: u32,
    pub points_per_channel: u32,
    /// Vertical field of view in degrees: (lower, upper), lower < upper.
    pub vertical_fov_deg: (f64, f64),
    pub max_range: f64,
    /// Standard deviation of optional Gaussian range jitter (meters).
    /// Zero (the default) disables the noise model entirely.
    pub range_noise_std: f64,
    pub noise_seed: u64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        LidarSpec {
            channels: 32,
            points_per_channel: 1024,
            vertical_fov_deg: (-30.0, 10.0),
            max_range: 50.0,
            range_noise_std: 0.0,
            noise_seed: 0,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.channels < 1 || self.points_per_channel < 1 {
            return Err(SceneError::InvalidConfig(
                "lidar needs at least one channel and one azimuth step".into(),
            ));
        }
        if !(self.max_range > 0.0) {
            return Err(SceneError::InvalidConfig("lidar max_range must be positive".into()));
        }
        if self.vertical_fov_deg.0 >= self.vertical_fov_deg.1 {
            return Err(SceneError::InvalidConfig(format!(
                "lidar vertical fov lower {} must be below upper {}",
                self.vertical_fov_deg.0, self.vertical_fov_deg.1
            )));
        }
        if self.range_noise_std < 0.0 {
            return Err(SceneError::InvalidConfig("range noise must be >= 0".into()));
        }
        Ok(())
    }
}

/// Casts one ray per (channel, azimuth step) and returns the labeled hit
/// points in the sensor frame. Misses and hits beyond `max_range` produce
/// no point.
pub fn simulate_lidar(
    scene: &Scene,
    sensor_pose: &Pose,
    spec: &LidarSpec,
) -> Result<PointCloud, SceneError> {
    spec.validate()?;
    let caster = RayCaster::new(scene);
    let world_to_sensor = sensor_pose.inverse();
    let origin = sensor_pose.translation();
    let (lo, hi) = spec.vertical_fov_deg;
    let elev_step = (hi - lo) / (spec.channels.max(2) - 1) as f64;

    let mut noise = (spec.range_noise_std > 0.0)
        .then(|| ChaCha8Rng::seed_from_u64(spec.noise_seed));

    let mut positions = Vec::new();
    let mut labels = Vec::new();
    for ch in 0..spec.channels {
        let elev = (lo + ch as f64 * elev_step).to_radians();
        let (sin_e, cos_e) = elev.sin_cos();
        for step in 0..spec.points_per_channel {
            let azim = step as f64 * std::f64::consts::TAU / spec.points_per_channel as f64;
            let (sin_a, cos_a) = azim.sin_cos();
            let dir_local = Point3::raw(cos_e * cos_a, cos_e * sin_a, sin_e);
            let ray = Ray {
                origin,
                dir: sensor_pose.rotate(dir_local),
            };
            // dir is unit length, so t is the range in meters.
            let jitter = noise
                .as_mut()
                .map(|rng| gaussian(rng) * spec.range_noise_std)
                .unwrap_or(0.0);
            if let Some(hit) = caster.cast(&ray) {
                let range = hit.t + jitter;
                if range <= spec.max_range && range > 0.0 {
                    let world = ray.origin.add(ray.dir.scale(range));
                    positions.push(world_to_sensor.apply(world));
                    labels.push(hit.label);
                }
            }
        }
    }
    Ok(PointCloud::from_positions(positions)
        .with_labels(labels, "carla12")
        .expect("lengths match"))
}

/// Box-Muller standard normal draw.
fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn shade(scene: &Scene, weather_id: u8, hit: &Hit, palette: &[Rgb]) -> Rgb {
    let base = palette[hit.label as usize];
    let preset = weather_preset(weather_id);
    let jitter = brightness_jitter(scene.seed, hit.entity);
    let channel = |v: u8, tint: f64| -> u8 { (v as f64 * tint * jitter).round().clamp(0.0, 255.0) as u8 };
    Rgb::new(
        channel(base.r, preset.tint[0]),
        channel(base.g, preset.tint[1]),
        channel(base.b, preset.tint[2]),
    )
}

/// Renders depth, semantic and color images in one pass; the three outputs
/// are pixel-aligned by construction. Depth is the camera-frame z of the
/// hit (0 for misses or hits beyond [`CAMERA_MAX_DEPTH`]); missed pixels
/// are unlabelled and take the weather's sky color.
pub fn render_frame(
    scene: &Scene,
    camera_pose: &Pose,
    intr: &CameraIntrinsics,
    weather_id: u8,
) -> (DepthImage, SemanticImage, ColorImage) {
    let caster = RayCaster::new(scene);
    let palette: Vec<Rgb> = carla12().classes().iter().map(|c| c.color).collect();
    let sky = weather_preset(weather_id).sky;
    let origin = camera_pose.translation();
    let width = intr.width();

    let rows: Vec<Vec<(f64, LabelId, Rgb)>> = (0..intr.height())
        .into_par_iter()
        .map(|v| {
            let mut row = Vec::with_capacity(width as usize);
            for u in 0..width {
                // Unnormalized direction with z = 1 in the camera frame:
                // the ray parameter t is then exactly the pinhole depth.
                let dir_cam = Point3::raw(
                    (u as f64 - intr.cx()) / intr.fx(),
                    (v as f64 - intr.cy()) / intr.fy(),
                    1.0,
                );
                let ray = Ray { origin, dir: camera_pose.rotate(dir_cam) };
                match caster.cast(&ray) {
                    Some(hit) if hit.t <= CAMERA_MAX_DEPTH => {
                        row.push((hit.t, hit.label, shade(scene, weather_id, &hit, &palette)));
                    }
                    _ => row.push((0.0, 0, sky)),
                }
            }
            row
        })
        .collect();

    let mut depths = Vec::with_capacity(intr.pixel_count());
    let mut labels = Vec::with_capacity(intr.pixel_count());
    let mut pixels = Vec::with_capacity(intr.pixel_count());
    for row in rows {
        for (d, l, c) in row {
            depths.push(d);
            labels.push(l);
            pixels.push(c);
        }
    }
    (
        DepthImage::new(intr.width(), intr.height(), depths).expect("valid by construction"),
        SemanticImage::new(intr.width(), intr.height(), labels).expect("valid by construction"),
        ColorImage::new(intr.width(), intr.height(), pixels).expect("valid by construction"),
    )
}

pub fn render_depth(
    scene: &Scene,
    camera_pose: &Pose,
    intr: &CameraIntrinsics,
    weather_id: u8,
) -> DepthImage {
    render_frame(scene, camera_pose, intr, weather_id).0
}

pub fn render_semantic(
    scene: &Scene,
    camera_pose: &Pose,
    intr: &CameraIntrinsics,
    weather_id: u8,
) -> SemanticImage {
    render_frame(scene, camera_pose, intr, weather_id).1
}

pub fn render_color(
    scene: &Scene,
    camera_pose: &Pose,
    intr: &CameraIntrinsics,
    weather_id: u8,
) -> ColorImage {
    render_frame(scene, camera_pose, intr, weather_id).2
}

/// Everything one time step produces: the three camera images, the LiDAR
/// cloud (sensor frame) and the poses that relate them to the world.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub frame_id: String,
    pub depth: DepthImage,
    pub semantic: SemanticImage,
    pub color: ColorImage,
    pub lidar: PointCloud,
    pub camera_pose: Pose,
    pub lidar_pose: Pose,
    pub intrinsics: CameraIntrinsics,
    pub weather_id: u8,
}

/// Camera mount in the ego frame: 0.5 m forward, 1.6 m up, looking forward.
/// Maps camera axes (z forward, x right, y down) into the ego frame
/// (x forward, y left, z up).
pub fn camera_mount() -> Pose {
    let rotation = Mat3::from_rows([
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]);
    Pose::new(rotation, Point3::raw(0.5, 0.0, 1.6)).expect("valid mount rotation")
}

/// LiDAR mount in the ego frame: 2 m above the ego origin, upright.
pub fn lidar_mount() -> Pose {
    Pose::from_translation(Point3::raw(0.0, 0.0, 2.0))
}

/// Captures one frame with the default sensor mounts at `ego_pose`.
pub fn capture_frame(
    scene: &Scene,
    ego_pose: &Pose,
    intr: &CameraIntrinsics,
    lidar_spec: &LidarSpec,
    weather_id: u8,
    frame_id: impl Into<String>,
) -> Result<SensorFrame, SceneError> {
    let camera_pose = ego_pose.compose(&camera_mount());
    let lidar_pose = ego_pose.compose(&lidar_mount());
    let (depth, semantic, color) = render_frame(scene, &camera_pose, intr, weather_id);
    let lidar = simulate_lidar(scene, &lidar_pose, lidar_spec)?;
    Ok(SensorFrame {
        frame_id: frame_id.into(),
        depth,
        semantic,
        color,
        lidar,
        camera_pose,
        lidar_pose,
        intrinsics: *intr,
        weather_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthworld::{generate_scene, labels, GroundRect, SceneConfig, Shape, Solid, CURB_HEIGHT};

    fn empty_scene() -> Scene {
        Scene { seed: 0, ground: vec![], solids: vec![], roads: vec![] }
    }

    fn ground_only() -> Scene {
        Scene {
            seed: 0,
            ground: vec![GroundRect {
                min_x: -100.0,
                min_y: -100.0,
                max_x: 100.0,
                max_y: 100.0,
                elevation: 0.0,
                label: labels::ROAD,
            }],
            solids: vec![],
            roads: vec![],
        }
    }

    #[test]
    fn empty_scene_yields_empty_cloud() {
        let cloud = simulate_lidar(&empty_scene(), &Pose::identity(), &LidarSpec::default()).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn single_downward_ray_hits_ground_below_sensor() {
        // One channel pitched -90 degrees from a sensor 2 m above the road:
        // the return is (0, 0, -2) in the sensor frame, labeled Road.
        let spec = LidarSpec {
            channels: 1,
            points_per_channel: 1,
            vertical_fov_deg: (-90.0, 0.0),
            max_range: 50.0,
            ..LidarSpec::default()
        };
        let pose = Pose::from_translation(Point3::new(0.0, 0.0, 2.0).unwrap());
        let cloud = simulate_lidar(&ground_only(), &pose, &spec).unwrap();
        assert_eq!(cloud.len(), 1);
        assert!(cloud.positions()[0].distance(Point3::new(0.0, 0.0, -2.0).unwrap()) < 1e-9);
        assert_eq!(cloud.labels().unwrap(), &[labels::ROAD]);
    }

    #[test]
    fn nearest_hit_rule_between_solids() {
        let mut scene = ground_only();
        scene.solids = vec![
            Solid {
                shape: Shape::Box { half_x: 1.0, half_y: 6.0, height: 6.0 },
                position: Point3::raw(20.0, 0.0, 0.0),
                yaw: 0.0,
                label: labels::BUILDING,
            },
            Solid {
                shape: Shape::Box { half_x: 0.2, half_y: 6.0, height: 6.0 },
                position: Point3::raw(10.0, 0.0, 0.0),
                yaw: 0.0,
                label: labels::WALL,
            },
        ];
        let spec = LidarSpec {
            channels: 1,
            points_per_channel: 1,
            vertical_fov_deg: (0.0, 1.0),
            ..LidarSpec::default()
        };
        // channels=1 uses the lower fov bound: a level ray along +x.
        let pose = Pose::from_translation(Point3::new(0.0, 0.0, 2.0).unwrap());
        let cloud = simulate_lidar(&scene, &pose, &spec).unwrap();
        assert_eq!(cloud.labels().unwrap(), &[labels::WALL]);
    }

    #[test]
    fn points_stay_within_max_range() {
        let scene = generate_scene(&SceneConfig { seed: 3, ..SceneConfig::default() }).unwrap();
        let spec = LidarSpec { max_range: 25.0, ..LidarSpec::default() };
        let pose = Pose::from_translation(Point3::new(2.0, 10.0, 2.0).unwrap());
        let cloud = simulate_lidar(&scene, &pose, &spec).unwrap();
        assert!(!cloud.is_empty());
        for p in cloud.positions() {
            assert!(p.norm() <= 25.0 + 1e-9);
        }
    }

    #[test]
    fn render_principal_point_depth_at_wall() {
        // Camera 5 m in front of a wall, facing it: depth at the principal
        // point is exactly 5.
        let mut scene = empty_scene();
        scene.solids = vec![Solid {
            shape: Shape::Box { half_x: 0.5, half_y: 20.0, height: 20.0 },
            position: Point3::raw(5.5, 0.0, -10.0),
            yaw: 0.0,
            label: labels::WALL,
        }];
        let intr = CameraIntrinsics::new(9, 9, 4.0, 4.0, 4.0, 4.0).unwrap();
        // Camera at origin looking along +x (ego identity, default mount
        // rotation), placed via a raw pose without the mount offset.
        let cam_pose = Pose::new(
            Mat3::from_rows([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
            Point3::ORIGIN,
        )
        .unwrap();
        let (depth, semantic, _) = {
            let (d, s, c) = render_frame(&scene, &cam_pose, &intr, 0);
            (d, s, c)
        };
        assert!((depth.at(4, 4) - 5.0).abs() < 1e-9);
        assert_eq!(semantic.at(4, 4), labels::WALL);
    }

    #[test]
    fn renders_are_pixel_aligned_and_miss_pixels_take_sky() {
        let scene = generate_scene(&SceneConfig { seed: 5, ..SceneConfig::default() }).unwrap();
        let intr = CameraIntrinsics::with_hfov(64, 48, 90.0).unwrap();
        let ego = Pose::from_yaw(0.3, Point3::new(2.0, 5.0, 0.0).unwrap());
        let cam = ego.compose(&camera_mount());
        let weather = 2;
        let (depth, semantic, color) = render_frame(&scene, &cam, &intr, weather);
        let sky = weather_preset(weather).sky;
        let mut misses = 0;
        for v in 0..intr.height() {
            for u in 0..intr.width() {
                if depth.at(u, v) == 0.0 {
                    misses += 1;
                    assert_eq!(semantic.at(u, v), 0);
                    assert_eq!(color.at(u, v), sky);
                } else {
                    assert!(depth.at(u, v) <= CAMERA_MAX_DEPTH);
                }
            }
        }
        // Looking forward from a road there is always some sky.
        assert!(misses > 0);
        // Wrapper functions agree with the single-pass render.
        assert_eq!(render_depth(&scene, &cam, &intr, weather), depth);
        assert_eq!(render_semantic(&scene, &cam, &intr, weather), semantic);
        assert_eq!(render_color(&scene, &cam, &intr, weather), color);
    }

    #[test]
    fn semantic_matches_depth_owner_per_pixel() {
        // The alignment contract, checked against independent single casts.
        let scene = generate_scene(&SceneConfig { seed: 8, ..SceneConfig::default() }).unwrap();
        let intr = CameraIntrinsics::with_hfov(32, 24, 90.0).unwrap();
        let cam = Pose::from_yaw(1.0, Point3::new(-2.0, 3.0, 0.0).unwrap()).compose(&camera_mount());
        let (depth, semantic, _) = render_frame(&scene, &cam, &intr, 0);
        let caster = RayCaster::new(&scene);
        for v in 0..intr.height() {
            for u in 0..intr.width() {
                let dir_cam = Point3::raw(
                    (u as f64 - intr.cx()) / intr.fx(),
                    (v as f64 - intr.cy()) / intr.fy(),
                    1.0,
                );
                let ray = Ray { origin: cam.translation(), dir: cam.rotate(dir_cam) };
                match caster.cast(&ray) {
                    Some(hit) if hit.t <= CAMERA_MAX_DEPTH => {
                        assert_eq!(semantic.at(u, v), hit.label);
                        assert!((depth.at(u, v) - hit.t).abs() < 1e-12);
                    }
                    _ => assert_eq!(depth.at(u, v), 0.0),
                }
            }
        }
    }

    #[test]
    fn weather_changes_color_not_geometry() {
        let scene = generate_scene(&SceneConfig { seed: 4, ..SceneConfig::default() }).unwrap();
        let intr = CameraIntrinsics::with_hfov(32, 24, 90.0).unwrap();
        let cam = Pose::from_translation(Point3::new(2.0, 2.0, 0.0).unwrap()).compose(&camera_mount());
        let (d0, s0, c0) = render_frame(&scene, &cam, &intr, 0);
        let (d8, s8, c8) = render_frame(&scene, &cam, &intr, 8);
        assert_eq!(d0, d8);
        assert_eq!(s0, s8);
        assert_ne!(c0, c8);
    }

    #[test]
    fn range_noise_perturbs_points_deterministically() {
        let spec = LidarSpec {
            channels: 4,
            points_per_channel: 64,
            range_noise_std: 0.02,
            noise_seed: 7,
            ..LidarSpec::default()
        };
        let pose = Pose::from_translation(Point3::new(0.0, 0.0, 2.0).unwrap());
        let a = simulate_lidar(&ground_only(), &pose, &spec).unwrap();
        let b = simulate_lidar(&ground_only(), &pose, &spec).unwrap();
        assert_eq!(a, b);
        let clean = simulate_lidar(
            &ground_only(),
            &pose,
            &LidarSpec { range_noise_std: 0.0, ..spec },
        )
        .unwrap();
        assert_ne!(a, clean);
    }

    #[test]
    fn capture_frame_uses_mount_poses() {
        let scene = generate_scene(&SceneConfig { seed: 2, ..SceneConfig::default() }).unwrap();
        let intr = CameraIntrinsics::with_hfov(32, 24, 90.0).unwrap();
        let ego = Pose::from_yaw(0.5, Point3::new(2.0, -10.0, 0.0).unwrap());
        let frame = capture_frame(&scene, &ego, &intr, &LidarSpec::default(), 1, "f0").unwrap();
        assert_eq!(frame.camera_pose, ego.compose(&camera_mount()));
        assert_eq!(frame.lidar_pose, ego.compose(&lidar_mount()));
        assert!(!frame.lidar.is_empty());
        // LiDAR sits above the ego; sidewalk points appear below it.
        let min_z = frame
            .lidar
            .positions()
            .iter()
            .map(|p| p.z())
            .fold(f64::INFINITY, f64::min);
        assert!(min_z < -(2.0 - CURB_HEIGHT) + 1e-6);
    }
}
