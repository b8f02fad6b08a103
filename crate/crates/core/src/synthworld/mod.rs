//! Procedural urban scene generation and sensor simulation.
//!
//! Scenes are built from geometric primitives on a road grid: ground
//! rectangles for roads, road lines and sidewalks (sidewalks sit one curb
//! height above the road), boxes for buildings, walls, fences and cars,
//! cylinders for poles and pedestrians and ellipsoid clusters for
//! vegetation. Everything is labeled in the `carla12` taxonomy and fully
//! determined by the scene seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cloud::LabelId;
use crate::geom::Point3;

pub mod dataset;
pub mod raycast;
pub mod scenario;
pub mod sensor;

pub use dataset::{generate_dataset, write_frames, DatasetConfig, FrameMeta};
pub use raycast::{EntityRef, Hit, Ray, RayCaster};
pub use scenario::{run_scenario, ActorKind, ActorSpec, Behaviour, EgoSpec, ScenarioScript, Trigger};
pub use sensor::{
    camera_mount, capture_frame, lidar_mount, render_color, render_depth, render_frame,
    render_semantic, simulate_lidar, LidarSpec, SensorFrame,
};

/// carla12 label ids used by the generator.
pub mod labels {
    use crate::cloud::LabelId;

    pub const UNLABELED: LabelId = 0;
    pub const BUILDING: LabelId = 1;
    pub const FENCE: LabelId = 2;
    pub const OTHER: LabelId = 3;
    pub const PEDESTRIAN: LabelId = 4;
    pub const POLE: LabelId = 5;
    pub const ROAD_LINE: LabelId = 6;
    pub const ROAD: LabelId = 7;
    pub const SIDEWALK: LabelId = 8;
    pub const VEGETATION: LabelId = 9;
    pub const CAR: LabelId = 10;
    pub const WALL: LabelId = 11;
    pub const TRAFFIC_SIGN: LabelId = 12;
}

/// Height of the curb separating sidewalks from roads (meters).
pub const CURB_HEIGHT: f64 = 0.15;

const BLOCK: f64 = 40.0;
const ROAD_HALF: f64 = 4.0;
const SIDEWALK_W: f64 = 2.0;
const LINE_HALF: f64 = 0.1;
const LINE_LIFT: f64 = 0.002;
/// Clearance around a crossing road within which sidewalks are interrupted.
const CLEAR: f64 = ROAD_HALF + SIDEWALK_W;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("actor '{actor}' spawns inside an existing solid")]
    SpawnCollision { actor: String },
    #[error("scenario parse error at line {line}: {what}")]
    ScriptParse { line: usize, what: String },
    #[error("meta file {path}: {what}")]
    MetaParse { path: String, what: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ply(#[from] crate::io::PlyError),
    #[error(transparent)]
    Pnm(#[from] crate::io::PnmError),
    #[error(transparent)]
    Manifest(#[from] crate::manifest::ManifestError),
    #[error(transparent)]
    Image(#[from] crate::image::ImageError),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
}

/// Parameters of one generated scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub seed: u64,
    pub vehicle_count: u32,
    pub pedestrian_count: u32,
    /// One of the 14 color tint presets, 0..=13.
    pub weather_id: u8,
    /// Side length of the square town (meters).
    pub town_extent: f64,
    pub building_density: f64,
    pub vegetation_density: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            seed: 0,
            vehicle_count: 60,
            pedestrian_count: 20,
            weather_id: 0,
            town_extent: 160.0,
            building_density: 0.5,
            vegetation_density: 0.5,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.weather_id as usize >= WEATHER_COUNT {
            return Err(SceneError::InvalidConfig(format!(
                "weather_id {} out of range 0..{}",
                self.weather_id,
                WEATHER_COUNT - 1
            )));
        }
        if !(self.town_extent > 0.0) {
            return Err(SceneError::InvalidConfig("town_extent must be positive".into()));
        }
        for (name, v) in [
            ("building_density", self.building_density),
            ("vegetation_density", self.vegetation_density),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SceneError::InvalidConfig(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Axis a road runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// One straight road segment of the grid, used for ego/car placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Road {
    pub axis: Axis,
    /// Cross-axis coordinate of the road center line.
    pub center: f64,
    pub from: f64,
    pub to: f64,
}

/// Horizontal labeled rectangle at a fixed elevation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundRect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub elevation: f64,
    pub label: LabelId,
}

/// Solid primitive shapes, defined in a local frame placed by the owning
/// [`Solid`]'s position and yaw.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// x in [-half_x, half_x], y in [-half_y, half_y], z in [0, height].
    Box { half_x: f64, half_y: f64, height: f64 },
    /// Vertical axis from z = 0 to z = height.
    Cylinder { radius: f64, height: f64 },
    /// Union of ellipsoids: (local center, semi-axes).
    Blobs { lobes: Vec<(Point3, [f64; 3])> },
}

/// A labeled primitive placed in the world.
#[derive(Debug, Clone, PartialEq)]
pub struct Solid {
    pub shape: Shape,
    /// Local origin in world coordinates (z is the base elevation).
    pub position: Point3,
    /// Rotation about +z, radians.
    pub yaw: f64,
    pub label: LabelId,
}

/// A generated world: ground rectangles plus labeled solids.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Seed the scene was generated from; drives per-primitive color jitter.
    pub seed: u64,
    pub ground: Vec<GroundRect>,
    pub solids: Vec<Solid>,
    /// Road center lines for placing the ego vehicle and traffic.
    pub roads: Vec<Road>,
}

impl Scene {
    /// A pose on a random road: position on a lane, heading along the road.
    pub fn road_pose(&self, rng: &mut impl Rng) -> Option<(Point3, f64)> {
        if self.roads.is_empty() {
            return None;
        }
        let road = &self.roads[rng.random_range(0..self.roads.len())];
        let along = rng.random_range(road.from + 5.0..road.to - 5.0);
        let lane = if rng.random_bool(0.5) { 2.0 } else { -2.0 };
        let forward = rng.random_bool(0.5);
        Some(match road.axis {
            Axis::Y => {
                let yaw = if forward {
                    std::f64::consts::FRAC_PI_2
                } else {
                    -std::f64::consts::FRAC_PI_2
                };
                (Point3::raw(road.center + lane, along, 0.0), yaw)
            }
            Axis::X => {
                let yaw = if forward { 0.0 } else { std::f64::consts::PI };
                (Point3::raw(along, road.center + lane, 0.0), yaw)
            }
        })
    }
}

/// Per-weather color modulation: channel tints plus the sky color returned
/// for rays that miss everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherPreset {
    pub tint: [f64; 3],
    pub sky: crate::cloud::Rgb,
}

pub const WEATHER_COUNT: usize = 14;

const fn preset(tr: f64, tg: f64, tb: f64, sr: u8, sg: u8, sb: u8) -> WeatherPreset {
    WeatherPreset {
        tint: [tr, tg, tb],
        sky: crate::cloud::Rgb { r: sr, g: sg, b: sb },
    }
}

/// 14 opaque tint presets cycled by the dataset generator. Several presets
/// darken and desaturate strongly, which is what makes color-only
/// classification ambiguous on those frames.
const WEATHER_PRESETS: [WeatherPreset; WEATHER_COUNT] = [
    preset(1.00, 1.00, 1.00, 135, 206, 235),
    preset(1.05, 0.85, 0.70, 250, 150, 100),
    preset(0.60, 0.60, 0.65, 160, 165, 175),
    preset(0.50, 0.52, 0.58, 120, 128, 140),
    preset(0.38, 0.40, 0.48, 90, 96, 110),
    preset(0.70, 0.70, 0.72, 200, 200, 205),
    preset(0.80, 0.75, 0.85, 180, 160, 200),
    preset(0.65, 0.55, 0.60, 110, 80, 120),
    preset(0.22, 0.22, 0.30, 15, 15, 35),
    preset(1.10, 1.08, 1.00, 150, 210, 240),
    preset(0.75, 0.75, 0.78, 170, 180, 190),
    preset(0.85, 0.85, 0.92, 140, 170, 200),
    preset(0.55, 0.57, 0.62, 130, 137, 148),
    preset(0.30, 0.32, 0.40, 60, 66, 80),
];

pub fn weather_preset(weather_id: u8) -> &'static WeatherPreset {
    &WEATHER_PRESETS[weather_id as usize % WEATHER_COUNT]
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic per-primitive brightness factor in [0.85, 1.15].
pub(crate) fn brightness_jitter(seed: u64, entity: EntityRef) -> f64 {
    let key = match entity {
        EntityRef::Ground(i) => 0x8000_0000_0000_0000 | i as u64,
        EntityRef::Solid(i) => i as u64,
    };
    let h = splitmix64(seed ^ key.wrapping_mul(0x9E37_79B9));
    0.85 + 0.30 * (h as f64 / u64::MAX as f64)
}

/// Intervals along one axis that lie between road clear zones.
fn open_spans(extent_half: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut spans = Vec::new();
    let mut lo = -extent_half;
    for &g in cuts {
        let hi = g - CLEAR;
        if hi - lo > 4.0 {
            spans.push((lo, hi));
        }
        lo = g + CLEAR;
    }
    if extent_half - lo > 4.0 {
        spans.push((lo, extent_half));
    }
    spans
}

/// Builds the deterministic town for `config`. The same config (seed
/// included) always yields a bit-identical scene.
pub fn generate_scene(config: &SceneConfig) -> Result<Scene, SceneError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let e2 = config.town_extent / 2.0;

    // Road grid positions: multiples of the block size that leave room for
    // the road and its sidewalks. Position 0 always exists.
    let mut grid = vec![0.0];
    let mut k = 1.0;
    while k * BLOCK + CLEAR + 2.0 <= e2 {
        grid.push(k * BLOCK);
        grid.push(-k * BLOCK);
        k += 1.0;
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut ground = Vec::new();
    let mut roads = Vec::new();
    let spans = open_spans(e2, &grid);
    for &g in &grid {
        // Road running along y at x = g, and along x at y = g.
        roads.push(Road { axis: Axis::Y, center: g, from: -e2, to: e2 });
        roads.push(Road { axis: Axis::X, center: g, from: -e2, to: e2 });
        ground.push(GroundRect {
            min_x: g - ROAD_HALF,
            min_y: -e2,
            max_x: g + ROAD_HALF,
            max_y: e2,
            elevation: 0.0,
            label: labels::ROAD,
        });
        ground.push(GroundRect {
            min_x: -e2,
            min_y: g - ROAD_HALF,
            max_x: e2,
            max_y: g + ROAD_HALF,
            elevation: 0.0,
            label: labels::ROAD,
        });
        // Center lines, lifted a hair above the road so they win the cast.
        ground.push(GroundRect {
            min_x: g - LINE_HALF,
            min_y: -e2,
            max_x: g + LINE_HALF,
            max_y: e2,
            elevation: LINE_LIFT,
            label: labels::ROAD_LINE,
        });
        ground.push(GroundRect {
            min_x: -e2,
            min_y: g - LINE_HALF,
            max_x: e2,
            max_y: g + LINE_HALF,
            elevation: LINE_LIFT,
            label: labels::ROAD_LINE,
        });
        // Sidewalk strips on both sides, interrupted at crossings.
        for side in [-1.0, 1.0] {
            let near = g + side * ROAD_HALF;
            let far = g + side * (ROAD_HALF + SIDEWALK_W);
            let (lo, hi) = (near.min(far), near.max(far));
            for &(s0, s1) in &spans {
                ground.push(GroundRect {
                    min_x: lo,
                    min_y: s0,
                    max_x: hi,
                    max_y: s1,
                    elevation: CURB_HEIGHT,
                    label: labels::SIDEWALK,
                });
                ground.push(GroundRect {
                    min_x: s0,
                    min_y: lo,
                    max_x: s1,
                    max_y: hi,
                    elevation: CURB_HEIGHT,
                    label: labels::SIDEWALK,
                });
            }
        }
    }

    // Block interiors: unlabeled terrain at sidewalk height.
    let mut blocks = Vec::new();
    for &(x0, x1) in &spans {
        for &(y0, y1) in &spans {
            blocks.push((x0, y0, x1, y1));
            ground.push(GroundRect {
                min_x: x0,
                min_y: y0,
                max_x: x1,
                max_y: y1,
                elevation: CURB_HEIGHT,
                label: labels::UNLABELED,
            });
        }
    }

    let mut solids = Vec::new();

    // Buildings: count per block scales with density.
    let per_block_buildings = (config.building_density * 3.0).round() as usize;
    for &(x0, y0, x1, y1) in &blocks {
        for _ in 0..per_block_buildings {
            let half_x = rng.random_range(3.0..9.0f64).min((x1 - x0) / 2.0 - 0.5);
            let half_y = rng.random_range(3.0..9.0f64).min((y1 - y0) / 2.0 - 0.5);
            if half_x < 1.0 || half_y < 1.0 {
                continue;
            }
            let cx = rng.random_range(x0 + half_x..x1 - half_x);
            let cy = rng.random_range(y0 + half_y..y1 - half_y);
            solids.push(Solid {
                shape: Shape::Box {
                    half_x,
                    half_y,
                    height: rng.random_range(5.0..22.0),
                },
                position: Point3::raw(cx, cy, CURB_HEIGHT),
                yaw: 0.0,
                label: labels::BUILDING,
            });
        }
    }

    // Walls and fences along some block borders.
    for &(x0, y0, x1, y1) in &blocks {
        for (along_x, fixed, lo, hi) in [
            (true, y0 + 0.5, x0, x1),
            (true, y1 - 0.5, x0, x1),
            (false, x0 + 0.5, y0, y1),
            (false, x1 - 0.5, y0, y1),
        ] {
            let roll: f64 = rng.random();
            let (label, thickness, height) = if roll < 0.2 {
                (labels::WALL, 0.15, 2.0)
            } else if roll < 0.4 {
                (labels::FENCE, 0.06, 1.2)
            } else {
                continue;
            };
            let half_len = (hi - lo) / 2.0 - 1.0;
            if half_len < 2.0 {
                continue;
            }
            let center = (lo + hi) / 2.0;
            let (cx, cy, half_x, half_y) = if along_x {
                (center, fixed, half_len, thickness)
            } else {
                (fixed, center, thickness, half_len)
            };
            solids.push(Solid {
                shape: Shape::Box { half_x, half_y, height },
                position: Point3::raw(cx, cy, CURB_HEIGHT),
                yaw: 0.0,
                label,
            });
        }
    }

    // Vegetation clusters.
    let per_block_vegetation = (config.vegetation_density * 4.0).round() as usize;
    for &(x0, y0, x1, y1) in &blocks {
        for _ in 0..per_block_vegetation {
            let cx = rng.random_range(x0 + 2.0..x1 - 2.0);
            let cy = rng.random_range(y0 + 2.0..y1 - 2.0);
            let lobes = if rng.random_bool(0.3) {
                // A low bush.
                vec![(
                    Point3::raw(0.0, 0.0, 0.6),
                    [rng.random_range(0.6..1.2), rng.random_range(0.6..1.2), 0.6],
                )]
            } else {
                let count = rng.random_range(2..=4);
                (0..count)
                    .map(|_| {
                        (
                            Point3::raw(
                                rng.random_range(-1.0..1.0),
                                rng.random_range(-1.0..1.0),
                                rng.random_range(1.6..3.8),
                            ),
                            [
                                rng.random_range(0.8..2.2),
                                rng.random_range(0.8..2.2),
                                rng.random_range(0.8..1.8),
                            ],
                        )
                    })
                    .collect()
            };
            solids.push(Solid {
                shape: Shape::Blobs { lobes },
                position: Point3::raw(cx, cy, CURB_HEIGHT),
                yaw: rng.random_range(0.0..std::f64::consts::TAU),
                label: labels::VEGETATION,
            });
        }
    }

    // Street poles along roads, skipping crossing zones.
    for road in &roads {
        let mut along = road.from + 7.0;
        let mut side = 1.0;
        while along < road.to - 7.0 {
            let near_crossing = grid.iter().any(|&g| (along - g).abs() < CLEAR + 1.0);
            if !near_crossing {
                let cross = road.center + side * (ROAD_HALF + 0.4);
                let (cx, cy) = match road.axis {
                    Axis::Y => (cross, along),
                    Axis::X => (along, cross),
                };
                solids.push(Solid {
                    shape: Shape::Cylinder { radius: 0.12, height: 5.0 },
                    position: Point3::raw(cx, cy, CURB_HEIGHT),
                    yaw: 0.0,
                    label: labels::POLE,
                });
                side = -side;
            }
            along += 15.0;
        }
    }

    // Street trees on the outer sidewalk edge; these keep vegetation in
    // view of road-level sensors, not just deep inside the blocks.
    for road in &roads {
        let mut along = road.from + 11.0;
        while along < road.to - 7.0 {
            let near_crossing = grid.iter().any(|&g| (along - g).abs() < CLEAR + 2.5);
            if !near_crossing && rng.random_bool(0.8 * config.vegetation_density) {
                for side in [-1.0, 1.0] {
                    if !rng.random_bool(0.6) {
                        continue;
                    }
                    let cross = road.center + side * (ROAD_HALF + SIDEWALK_W + 1.2);
                    let (cx, cy) = match road.axis {
                        Axis::Y => (cross, along),
                        Axis::X => (along, cross),
                    };
                    let crown = rng.random_range(1.2..2.4);
                    solids.push(Solid {
                        shape: Shape::Blobs {
                            lobes: vec![
                                // Trunk-ish narrow lobe plus the crown.
                                (Point3::raw(0.0, 0.0, 1.2), [0.25, 0.25, 1.3]),
                                (
                                    Point3::raw(0.0, 0.0, rng.random_range(2.8..3.6)),
                                    [crown, crown, rng.random_range(1.0..1.6)],
                                ),
                            ],
                        },
                        position: Point3::raw(cx, cy, CURB_HEIGHT),
                        yaw: rng.random_range(0.0..std::f64::consts::TAU),
                        label: labels::VEGETATION,
                    });
                }
            }
            along += 13.0;
        }
    }

    // Traffic signs near intersections.
    for &gx in &grid {
        for &gy in &grid {
            if !rng.random_bool(0.8) {
                continue;
            }
            let cx = gx + ROAD_HALF + 0.6;
            let cy = gy + ROAD_HALF + 0.6;
            solids.push(Solid {
                shape: Shape::Cylinder { radius: 0.06, height: 2.2 },
                position: Point3::raw(cx, cy, CURB_HEIGHT),
                yaw: 0.0,
                label: labels::POLE,
            });
            solids.push(Solid {
                shape: Shape::Box { half_x: 0.35, half_y: 0.05, height: 0.7 },
                position: Point3::raw(cx, cy, CURB_HEIGHT + 1.5),
                yaw: rng.random_range(0.0..std::f64::consts::TAU),
                label: labels::TRAFFIC_SIGN,
            });
        }
    }

    // Miscellaneous objects.
    for &(x0, y0, x1, y1) in &blocks {
        if rng.random_bool(0.3) {
            let cx = rng.random_range(x0 + 1.5..x1 - 1.5);
            let cy = rng.random_range(y0 + 1.5..y1 - 1.5);
            solids.push(Solid {
                shape: Shape::Box {
                    half_x: rng.random_range(0.3..1.0),
                    half_y: rng.random_range(0.3..1.0),
                    height: rng.random_range(0.5..1.5),
                },
                position: Point3::raw(cx, cy, CURB_HEIGHT),
                yaw: rng.random_range(0.0..std::f64::consts::TAU),
                label: labels::OTHER,
            });
        }
    }

    // Cars on roads: exactly vehicle_count of them.
    for _ in 0..config.vehicle_count {
        let road = roads[rng.random_range(0..roads.len())];
        let along = rng.random_range(road.from + 5.0..road.to - 5.0);
        let lane = if rng.random_bool(0.5) { 2.0 } else { -2.0 };
        let (cx, cy, yaw) = match road.axis {
            Axis::Y => (road.center + lane, along, std::f64::consts::FRAC_PI_2),
            Axis::X => (along, road.center + lane, 0.0),
        };
        solids.push(Solid {
            shape: Shape::Box { half_x: 2.2, half_y: 0.9, height: 1.5 },
            position: Point3::raw(cx, cy, 0.0),
            yaw: if rng.random_bool(0.5) { yaw } else { yaw + std::f64::consts::PI },
            label: labels::CAR,
        });
    }

    // Pedestrians on sidewalks: exactly pedestrian_count.
    for _ in 0..config.pedestrian_count {
        let road = roads[rng.random_range(0..roads.len())];
        let along = rng.random_range(road.from + 5.0..road.to - 5.0);
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let cross = road.center + side * (ROAD_HALF + SIDEWALK_W / 2.0);
        let (cx, cy) = match road.axis {
            Axis::Y => (cross, along),
            Axis::X => (along, cross),
        };
        solids.push(Solid {
            shape: Shape::Cylinder { radius: 0.3, height: 1.8 },
            position: Point3::raw(cx, cy, CURB_HEIGHT),
            yaw: 0.0,
            label: labels::PEDESTRIAN,
        });
    }

    Ok(Scene { seed: config.seed, ground, solids, roads })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scene() {
        let config = SceneConfig { seed: 9, ..SceneConfig::default() };
        let a = generate_scene(&config).unwrap();
        let b = generate_scene(&config).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&SceneConfig { seed: 10, ..config }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn counts_forced_by_config() {
        let config = SceneConfig {
            seed: 1,
            vehicle_count: 40,
            pedestrian_count: 12,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&config).unwrap();
        let cars = scene.solids.iter().filter(|s| s.label == labels::CAR).count();
        let peds = scene.solids.iter().filter(|s| s.label == labels::PEDESTRIAN).count();
        assert_eq!(cars, 40);
        assert_eq!(peds, 12);
    }

    #[test]
    fn zero_actor_scene() {
        let config = SceneConfig {
            vehicle_count: 0,
            pedestrian_count: 0,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&config).unwrap();
        assert!(!scene.solids.iter().any(|s| s.label == labels::CAR));
        assert!(!scene.solids.iter().any(|s| s.label == labels::PEDESTRIAN));
    }

    #[test]
    fn roads_and_sidewalks_present_with_curb() {
        let scene = generate_scene(&SceneConfig::default()).unwrap();
        let road_elev: Vec<f64> = scene
            .ground
            .iter()
            .filter(|g| g.label == labels::ROAD)
            .map(|g| g.elevation)
            .collect();
        let sidewalk_elev: Vec<f64> = scene
            .ground
            .iter()
            .filter(|g| g.label == labels::SIDEWALK)
            .map(|g| g.elevation)
            .collect();
        assert!(!road_elev.is_empty());
        assert!(!sidewalk_elev.is_empty());
        for &s in &sidewalk_elev {
            for &r in &road_elev {
                assert!((s - r - CURB_HEIGHT).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn densities_scale_counts() {
        let sparse = generate_scene(&SceneConfig {
            building_density: 0.0,
            vegetation_density: 0.0,
            ..SceneConfig::default()
        })
        .unwrap();
        let dense = generate_scene(&SceneConfig {
            building_density: 1.0,
            vegetation_density: 1.0,
            ..SceneConfig::default()
        })
        .unwrap();
        let count = |scene: &Scene, label| scene.solids.iter().filter(|s| s.label == label).count();
        assert_eq!(count(&sparse, labels::BUILDING), 0);
        assert_eq!(count(&sparse, labels::VEGETATION), 0);
        assert!(count(&dense, labels::BUILDING) > 0);
        assert!(count(&dense, labels::VEGETATION) > count(&sparse, labels::VEGETATION));
    }

    #[test]
    fn all_solids_carry_valid_carla12_labels() {
        let scene = generate_scene(&SceneConfig::default()).unwrap();
        let tax = crate::taxonomy::carla12();
        for solid in &scene.solids {
            assert!(tax.contains(solid.label));
            assert_ne!(solid.label, 0);
        }
        for rect in &scene.ground {
            assert!(tax.contains(rect.label));
        }
    }

    #[test]
    fn label_constants_match_taxonomy() {
        let tax = crate::taxonomy::carla12();
        for (id, name) in [
            (labels::BUILDING, "Building"),
            (labels::FENCE, "Fence"),
            (labels::OTHER, "Other"),
            (labels::PEDESTRIAN, "Pedestrian"),
            (labels::POLE, "Pole"),
            (labels::ROAD_LINE, "Road-line"),
            (labels::ROAD, "Road"),
            (labels::SIDEWALK, "Sidewalk"),
            (labels::VEGETATION, "Vegetation"),
            (labels::CAR, "Car"),
            (labels::WALL, "Wall"),
            (labels::TRAFFIC_SIGN, "Traffic-sign"),
        ] {
            assert_eq!(tax.id_of(name), Some(id), "{name}");
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(generate_scene(&SceneConfig { weather_id: 14, ..SceneConfig::default() }).is_err());
        assert!(generate_scene(&SceneConfig { town_extent: 0.0, ..SceneConfig::default() }).is_err());
        assert!(
            generate_scene(&SceneConfig { building_density: 1.5, ..SceneConfig::default() })
                .is_err()
        );
    }

    #[test]
    fn weather_presets_cover_14_ids() {
        for id in 0..14u8 {
            let preset = weather_preset(id);
            for t in preset.tint {
                assert!(t > 0.0 && t <= 1.2);
            }
        }
    }

    #[test]
    fn brightness_jitter_bounds_and_determinism() {
        for i in 0..100 {
            let j = brightness_jitter(42, EntityRef::Solid(i));
            assert!((0.85..=1.15).contains(&j));
            assert_eq!(j, brightness_jitter(42, EntityRef::Solid(i)));
        }
        assert_ne!(
            brightness_jitter(42, EntityRef::Solid(1)),
            brightness_jitter(42, EntityRef::Ground(1))
        );
    }
}
