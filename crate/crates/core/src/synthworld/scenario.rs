//! Scripted multi-actor scenarios: spawn actors with behaviours, trigger
//! them by ego proximity, step the kinematics and capture sensor frames.
//!
//! The collision model is stop-on-contact: an actor whose footprint would
//! intersect another solid stays where it was and never moves again, which
//! is enough to stage rare events such as two cars crashing.
//!
//! Scripts are plain `key=value` text, e.g.:
//!
//! ```text
//! duration=40
//! frame_rate=10
//! weather=3
//! ego.spawn=2 -60 0 90
//! ego.path=2 60
//! ego.speed=6
//! actor.0.kind=car
//! actor.0.spawn=-30 2 0 0
//! actor.0.behaviour=straight 8 0
//! trigger.0.actor=0
//! trigger.0.center=2 0
//! trigger.0.radius=25
//! ```
//!
//! Angles in scripts are degrees; coordinates are meters. Waypoint lists
//! are `x y` pairs separated by `;`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::geom::{Point3, Pose};
use crate::image::CameraIntrinsics;

use super::raycast::solids_overlap;
use super::sensor::{capture_frame, LidarSpec, SensorFrame};
use super::{labels, Scene, SceneError, Shape, Solid};

/// What an actor does once active.
#[derive(Debug, Clone, PartialEq)]
pub enum Behaviour {
    Stationary,
    /// Constant velocity in the ground plane (m/s).
    StraightLine { vx: f64, vy: f64 },
    /// Follow a polyline at constant speed, then stop.
    Waypoints { points: Vec<(f64, f64)>, speed: f64 },
}

/// The primitive an actor is made of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActorKind {
    Car,
    Pedestrian,
}

impl ActorKind {
    fn shape(&self) -> Shape {
        match self {
            ActorKind::Car => Shape::Box { half_x: 2.2, half_y: 0.9, height: 1.5 },
            ActorKind::Pedestrian => Shape::Cylinder { radius: 0.3, height: 1.8 },
        }
    }

    fn label(&self) -> crate::cloud::LabelId {
        match self {
            ActorKind::Car => labels::CAR,
            ActorKind::Pedestrian => labels::PEDESTRIAN,
        }
    }
}

/// One scripted actor: what it is, where it spawns, what it does.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorSpec {
    pub name: String,
    pub kind: ActorKind,
    /// (x, y, z, yaw) spawn pose; yaw in radians.
    pub spawn: (f64, f64, f64, f64),
    pub behaviour: Behaviour,
}

/// Starts an actor's behaviour when the ego comes within `radius` of
/// `center`. Actors referenced by no trigger start active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trigger {
    pub actor: usize,
    pub center: (f64, f64),
    pub radius: f64,
}

/// The ego vehicle: spawn pose, waypoint path and speed.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoSpec {
    pub spawn: (f64, f64, f64, f64),
    pub waypoints: Vec<(f64, f64)>,
    pub speed: f64,
}

/// A complete scenario: ego, actors, triggers, duration and the mounted
/// sensor parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioScript {
    pub ego: EgoSpec,
    pub actors: Vec<ActorSpec>,
    pub triggers: Vec<Trigger>,
    pub duration: u32,
    pub frame_rate: f64,
    pub weather_id: u8,
    pub camera: CameraIntrinsics,
    pub lidar: LidarSpec,
}

impl ScenarioScript {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.duration < 1 {
            return Err(SceneError::InvalidConfig("duration must be >= 1 frame".into()));
        }
        if !(self.frame_rate > 0.0) {
            return Err(SceneError::InvalidConfig("frame_rate must be positive".into()));
        }
        for t in &self.triggers {
            if !(t.radius > 0.0) {
                return Err(SceneError::InvalidConfig("trigger radii must be positive".into()));
            }
            if t.actor >= self.actors.len() {
                return Err(SceneError::InvalidConfig(format!(
                    "trigger references actor {} but only {} exist",
                    t.actor,
                    self.actors.len()
                )));
            }
        }
        self.lidar.validate()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ScenarioScript, SceneError> {
        ScenarioScript::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the `key=value` script format.
    pub fn parse(text: &str) -> Result<ScenarioScript, SceneError> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(SceneError::ScriptParse {
                    line: lineno + 1,
                    what: format!("expected key=value, got '{line}'"),
                });
            };
            kv.insert(key.trim().to_string(), (lineno + 1, value.trim().to_string()));
        }

        let get = |key: &str| kv.get(key).cloned();
        let parse_f64 = |key: &str, default: f64| -> Result<f64, SceneError> {
            match get(key) {
                None => Ok(default),
                Some((line, v)) => v.parse().map_err(|_| SceneError::ScriptParse {
                    line,
                    what: format!("bad number '{v}' for {key}"),
                }),
            }
        };

        let duration = parse_f64("duration", 10.0)? as u32;
        let frame_rate = parse_f64("frame_rate", 10.0)?;
        let weather_id = parse_f64("weather", 0.0)? as u8;

        let cam_w = parse_f64("camera.width", 800.0)? as u32;
        let cam_h = parse_f64("camera.height", 600.0)? as u32;
        let cam_hfov = parse_f64("camera.hfov", 90.0)?;
        let camera = CameraIntrinsics::with_hfov(cam_w, cam_h, cam_hfov)?;

        let lidar = LidarSpec {
            channels: parse_f64("lidar.channels", 32.0)? as u32,
            points_per_channel: parse_f64("lidar.points_per_channel", 1024.0)? as u32,
            vertical_fov_deg: (
                parse_f64("lidar.vfov_lower", -30.0)?,
                parse_f64("lidar.vfov_upper", 10.0)?,
            ),
            max_range: parse_f64("lidar.max_range", 50.0)?,
            range_noise_std: parse_f64("lidar.range_noise_std", 0.0)?,
            noise_seed: parse_f64("lidar.noise_seed", 0.0)? as u64,
        };

        let (ego_line, ego_spawn) = get("ego.spawn").ok_or(SceneError::ScriptParse {
            line: 0,
            what: "missing ego.spawn".into(),
        })?;
        let ego = EgoSpec {
            spawn: parse_spawn(&ego_spawn, ego_line)?,
            waypoints: match get("ego.path") {
                Some((line, v)) => parse_points(&v, line)?,
                None => vec![],
            },
            speed: parse_f64("ego.speed", 5.0)?,
        };

        let mut actors = Vec::new();
        for index in 0.. {
            let prefix = format!("actor.{index}.");
            let Some((line, kind)) = get(&format!("{prefix}kind")) else {
                break;
            };
            let kind = match kind.as_str() {
                "car" => ActorKind::Car,
                "pedestrian" => ActorKind::Pedestrian,
                other => {
                    return Err(SceneError::ScriptParse {
                        line,
                        what: format!("unknown actor kind '{other}'"),
                    })
                }
            };
            let (spawn_line, spawn) = get(&format!("{prefix}spawn")).ok_or({
                SceneError::ScriptParse { line, what: format!("missing {prefix}spawn") }
            })?;
            let behaviour = match get(&format!("{prefix}behaviour")) {
                None => Behaviour::Stationary,
                Some((bline, v)) => parse_behaviour(&v, bline)?,
            };
            actors.push(ActorSpec {
                name: format!("actor.{index}"),
                kind,
                spawn: parse_spawn(&spawn, spawn_line)?,
                behaviour,
            });
        }

        let mut triggers = Vec::new();
        for index in 0.. {
            let prefix = format!("trigger.{index}.");
            let Some((line, actor)) = get(&format!("{prefix}actor")) else {
                break;
            };
            let actor = actor.parse::<usize>().map_err(|_| SceneError::ScriptParse {
                line,
                what: format!("bad actor index '{actor}'"),
            })?;
            let (cline, center) = get(&format!("{prefix}center")).ok_or({
                SceneError::ScriptParse { line, what: format!("missing {prefix}center") }
            })?;
            let center_points = parse_points(&center, cline)?;
            let center = *center_points.first().ok_or(SceneError::ScriptParse {
                line: cline,
                what: "empty trigger center".into(),
            })?;
            triggers.push(Trigger {
                actor,
                center,
                radius: parse_f64(&format!("{prefix}radius"), 10.0)?,
            });
        }

        let script = ScenarioScript {
            ego,
            actors,
            triggers,
            duration,
            frame_rate,
            weather_id,
            camera,
            lidar,
        };
        script.validate()?;
        Ok(script)
    }
}

/// "x y z yaw_deg" -> (x, y, z, yaw_rad).
fn parse_spawn(text: &str, line: usize) -> Result<(f64, f64, f64, f64), SceneError> {
    let parts: Vec<f64> = text
        .split_whitespace()
        .map(|w| w.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| SceneError::ScriptParse {
            line,
            what: format!("bad spawn '{text}'"),
        })?;
    if parts.len() != 4 {
        return Err(SceneError::ScriptParse {
            line,
            what: format!("spawn needs 'x y z yaw_deg', got '{text}'"),
        });
    }
    Ok((parts[0], parts[1], parts[2], parts[3].to_radians()))
}

/// "x1 y1; x2 y2; ..." -> [(x1, y1), ...].
fn parse_points(text: &str, line: usize) -> Result<Vec<(f64, f64)>, SceneError> {
    let mut out = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let nums: Vec<f64> = part
            .split_whitespace()
            .map(|w| w.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| SceneError::ScriptParse {
                line,
                what: format!("bad point '{part}'"),
            })?;
        if nums.len() != 2 {
            return Err(SceneError::ScriptParse {
                line,
                what: format!("point needs 'x y', got '{part}'"),
            });
        }
        out.push((nums[0], nums[1]));
    }
    Ok(out)
}

fn parse_behaviour(text: &str, line: usize) -> Result<Behaviour, SceneError> {
    let mut words = text.split_whitespace();
    match words.next() {
        Some("stationary") | None => Ok(Behaviour::Stationary),
        Some("straight") => {
            let rest: Vec<f64> = words
                .map(|w| w.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| SceneError::ScriptParse {
                    line,
                    what: format!("bad straight velocity in '{text}'"),
                })?;
            if rest.len() != 2 {
                return Err(SceneError::ScriptParse {
                    line,
                    what: "straight needs 'straight vx vy'".into(),
                });
            }
            Ok(Behaviour::StraightLine { vx: rest[0], vy: rest[1] })
        }
        Some("path") => {
            let speed: f64 = words
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or(SceneError::ScriptParse {
                    line,
                    what: "path needs 'path speed x1 y1; x2 y2'".into(),
                })?;
            let rest: String = words.collect::<Vec<_>>().join(" ");
            Ok(Behaviour::Waypoints { points: parse_points(&rest, line)?, speed })
        }
        Some(other) => Err(SceneError::ScriptParse {
            line,
            what: format!("unknown behaviour '{other}'"),
        }),
    }
}

struct ActorState {
    x: f64,
    y: f64,
    z: f64,
    yaw: f64,
    active: bool,
    stopped: bool,
    next_waypoint: usize,
}

fn actor_solid(spec: &ActorSpec, state: &ActorState) -> Solid {
    Solid {
        shape: spec.kind.shape(),
        position: Point3::raw(state.x, state.y, state.z),
        yaw: state.yaw,
        label: spec.kind.label(),
    }
}

/// Advances along a waypoint path by `dist`; returns false when the path is
/// exhausted.
fn follow_path(
    x: &mut f64,
    y: &mut f64,
    yaw: &mut f64,
    next: &mut usize,
    points: &[(f64, f64)],
    mut dist: f64,
) -> bool {
    while dist > 0.0 {
        let Some(&(tx, ty)) = points.get(*next) else {
            return false;
        };
        let dx = tx - *x;
        let dy = ty - *y;
        let to_target = (dx * dx + dy * dy).sqrt();
        if to_target < 1e-9 {
            *next += 1;
            continue;
        }
        *yaw = dy.atan2(dx);
        if dist >= to_target {
            *x = tx;
            *y = ty;
            dist -= to_target;
            *next += 1;
        } else {
            *x += dx / to_target * dist;
            *y += dy / to_target * dist;
            dist = 0.0;
        }
    }
    true
}

/// Runs a scripted scenario over `base` and captures one [`SensorFrame`]
/// per step: fire pending triggers, advance ego and active actors, stop
/// actors on contact, then render with the ego-mounted sensors.
pub fn run_scenario(script: &ScenarioScript, base: &Scene) -> Result<Vec<SensorFrame>, SceneError> {
    script.validate()?;

    let triggered: Vec<bool> = (0..script.actors.len())
        .map(|i| script.triggers.iter().any(|t| t.actor == i))
        .collect();
    let mut states: Vec<ActorState> = script
        .actors
        .iter()
        .zip(&triggered)
        .map(|(spec, &gated)| ActorState {
            x: spec.spawn.0,
            y: spec.spawn.1,
            z: spec.spawn.2,
            yaw: spec.spawn.3,
            active: !gated,
            stopped: false,
            next_waypoint: 0,
        })
        .collect();

    // Spawn validation: no actor may start inside the base scene or another
    // actor.
    for (i, spec) in script.actors.iter().enumerate() {
        let solid = actor_solid(spec, &states[i]);
        let hits_base = base.solids.iter().any(|s| solids_overlap(s, &solid));
        let hits_actor = script.actors.iter().enumerate().take(i).any(|(j, other)| {
            solids_overlap(&actor_solid(other, &states[j]), &solid)
        });
        if hits_base || hits_actor {
            return Err(SceneError::SpawnCollision { actor: spec.name.clone() });
        }
    }

    let dt = 1.0 / script.frame_rate;
    let mut ego = (
        script.ego.spawn.0,
        script.ego.spawn.1,
        script.ego.spawn.2,
        script.ego.spawn.3,
    );
    let mut ego_next_waypoint = 0usize;

    let mut frames = Vec::with_capacity(script.duration as usize);
    for frame_index in 0..script.duration {
        // Triggers fire on the ego position at the start of the step.
        for trigger in &script.triggers {
            let dx = ego.0 - trigger.center.0;
            let dy = ego.1 - trigger.center.1;
            if dx * dx + dy * dy <= trigger.radius * trigger.radius {
                states[trigger.actor].active = true;
            }
        }

        // Advance actors; contact stops an actor for good.
        for (i, spec) in script.actors.iter().enumerate() {
            let state = &mut states[i];
            if !state.active || state.stopped {
                continue;
            }
            let (old_x, old_y, old_yaw) = (state.x, state.y, state.yaw);
            match &spec.behaviour {
                Behaviour::Stationary => continue,
                Behaviour::StraightLine { vx, vy } => {
                    state.x += vx * dt;
                    state.y += vy * dt;
                    if vx.abs() + vy.abs() > 0.0 {
                        state.yaw = vy.atan2(*vx);
                    }
                }
                Behaviour::Waypoints { points, speed } => {
                    let mut x = state.x;
                    let mut y = state.y;
                    let mut yaw = state.yaw;
                    let mut next = state.next_waypoint;
                    let alive = follow_path(&mut x, &mut y, &mut yaw, &mut next, points, speed * dt);
                    state.x = x;
                    state.y = y;
                    state.yaw = yaw;
                    state.next_waypoint = next;
                    if !alive {
                        state.stopped = true;
                    }
                }
            }
            let moved = actor_solid(spec, state);
            let collides = base.solids.iter().any(|s| solids_overlap(s, &moved))
                || states
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .any(|(j, other)| {
                        solids_overlap(&actor_solid(&script.actors[j], other), &moved)
                    });
            if collides {
                let state = &mut states[i];
                state.x = old_x;
                state.y = old_y;
                state.yaw = old_yaw;
                state.stopped = true;
            }
        }

        // Advance the ego along its path.
        if !script.ego.waypoints.is_empty() {
            let mut x = ego.0;
            let mut y = ego.1;
            let mut yaw = ego.3;
            follow_path(
                &mut x,
                &mut y,
                &mut yaw,
                &mut ego_next_waypoint,
                &script.ego.waypoints,
                script.ego.speed * dt,
            );
            ego = (x, y, ego.2, yaw);
        }

        // Compose the frame's scene: base plus actors at current poses.
        let mut scene = base.clone();
        for (i, spec) in script.actors.iter().enumerate() {
            scene.solids.push(actor_solid(spec, &states[i]));
        }

        let ego_pose = Pose::from_yaw(ego.3, Point3::raw(ego.0, ego.1, ego.2));
        frames.push(capture_frame(
            &scene,
            &ego_pose,
            &script.camera,
            &script.lidar,
            script.weather_id,
            format!("frame_{frame_index:06}"),
        )?);
    }
    Ok(frames)
}
