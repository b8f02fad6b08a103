//! Ray/primitive intersection and the grid-accelerated scene caster.
//!
//! Rays are parameterized as `origin + t * dir`; `dir` need not be
//! normalized, so `t` is in units of `|dir|`. The camera renderer exploits
//! this by using direction vectors with z = 1 in the camera frame, making
//! `t` the pinhole depth directly.

use crate::cloud::LabelId;
use crate::geom::Point3;

use super::{GroundRect, Scene, Shape, Solid};

const T_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Point3,
    pub dir: Point3,
}

/// What a ray hit: the entity index allows per-primitive color jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub label: LabelId,
    pub entity: EntityRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityRef {
    Ground(usize),
    Solid(usize),
}

/// Intersection with a horizontal rectangle at fixed elevation.
fn ray_ground(ray: &Ray, rect: &GroundRect) -> Option<f64> {
    let dz = ray.dir.z();
    if dz == 0.0 {
        return None;
    }
    let t = (rect.elevation - ray.origin.z()) / dz;
    if t <= T_EPS {
        return None;
    }
    let x = ray.origin.x() + t * ray.dir.x();
    let y = ray.origin.y() + t * ray.dir.y();
    if x >= rect.min_x && x <= rect.max_x && y >= rect.min_y && y <= rect.max_y {
        Some(t)
    } else {
        None
    }
}

/// Slab test against the local box x in [-hx,hx], y in [-hy,hy], z in [0,h].
fn ray_box_local(o: Point3, d: Point3, half_x: f64, half_y: f64, height: f64) -> Option<f64> {
    let mut t_min = T_EPS;
    let mut t_max = f64::INFINITY;
    let bounds = [
        (o.x(), d.x(), -half_x, half_x),
        (o.y(), d.y(), -half_y, half_y),
        (o.z(), d.z(), 0.0, height),
    ];
    for (start, dir, lo, hi) in bounds {
        if dir == 0.0 {
            if start < lo || start > hi {
                return None;
            }
        } else {
            let mut t0 = (lo - start) / dir;
            let mut t1 = (hi - start) / dir;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_min = t_min.max(t0);
            t_max = t_max.min(t1);
            if t_min > t_max {
                return None;
            }
        }
    }
    Some(t_min)
}

/// Vertical cylinder in the local frame: axis +z from 0 to `height`.
fn ray_cylinder_local(o: Point3, d: Point3, radius: f64, height: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t > T_EPS && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };

    // Side surface.
    let a = d.x() * d.x() + d.y() * d.y();
    if a > 0.0 {
        let b = 2.0 * (o.x() * d.x() + o.y() * d.y());
        let c = o.x() * o.x() + o.y() * o.y() - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                let z = o.z() + t * d.z();
                if (0.0..=height).contains(&z) {
                    consider(t);
                }
            }
        }
    }
    // Caps.
    if d.z() != 0.0 {
        for cap_z in [0.0, height] {
            let t = (cap_z - o.z()) / d.z();
            let x = o.x() + t * d.x();
            let y = o.y() + t * d.y();
            if x * x + y * y <= radius * radius {
                consider(t);
            }
        }
    }
    best
}

/// Ellipsoid centered at `c` with semi-axes `r`, in the local frame.
fn ray_ellipsoid_local(o: Point3, d: Point3, c: Point3, r: [f64; 3]) -> Option<f64> {
    let ox = (o.x() - c.x()) / r[0];
    let oy = (o.y() - c.y()) / r[1];
    let oz = (o.z() - c.z()) / r[2];
    let dx = d.x() / r[0];
    let dy = d.y() / r[1];
    let dz = d.z() / r[2];
    let a = dx * dx + dy * dy + dz * dz;
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * (ox * dx + oy * dy + oz * dz);
    let c2 = ox * ox + oy * oy + oz * oz - 1.0;
    let disc = b * b - 4.0 * a * c2;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = (-b - sq) / (2.0 * a);
    let t1 = (-b + sq) / (2.0 * a);
    if t0 > T_EPS {
        Some(t0)
    } else if t1 > T_EPS {
        Some(t1)
    } else {
        None
    }
}

/// Nearest intersection with one solid, in world parameterization.
pub fn ray_solid(ray: &Ray, solid: &Solid) -> Option<f64> {
    // Into the solid's local frame: translate, then rotate by -yaw.
    let (sin_y, cos_y) = solid.yaw.sin_cos();
    let rel = ray.origin.sub(solid.position);
    let o = Point3::raw(
        cos_y * rel.x() + sin_y * rel.y(),
        -sin_y * rel.x() + cos_y * rel.y(),
        rel.z(),
    );
    let d = Point3::raw(
        cos_y * ray.dir.x() + sin_y * ray.dir.y(),
        -sin_y * ray.dir.x() + cos_y * ray.dir.y(),
        ray.dir.z(),
    );
    match &solid.shape {
        Shape::Box { half_x, half_y, height } => ray_box_local(o, d, *half_x, *half_y, *height),
        Shape::Cylinder { radius, height } => ray_cylinder_local(o, d, *radius, *height),
        Shape::Blobs { lobes } => {
            let mut best: Option<f64> = None;
            for (center, radii) in lobes {
                if let Some(t) = ray_ellipsoid_local(o, d, *center, *radii) {
                    if best.is_none_or(|b| t < b) {
                        best = Some(t);
                    }
                }
            }
            best
        }
    }
}

/// World-frame xy bounding box of a solid's footprint.
pub fn footprint_aabb(solid: &Solid) -> (f64, f64, f64, f64) {
    let (sin_y, cos_y) = solid.yaw.sin_cos();
    let (cx, cy) = (solid.position.x(), solid.position.y());
    match &solid.shape {
        Shape::Box { half_x, half_y, .. } => {
            let ex = (half_x * cos_y).abs() + (half_y * sin_y).abs();
            let ey = (half_x * sin_y).abs() + (half_y * cos_y).abs();
            (cx - ex, cy - ey, cx + ex, cy + ey)
        }
        Shape::Cylinder { radius, .. } => (cx - radius, cy - radius, cx + radius, cy + radius),
        Shape::Blobs { lobes } => {
            let mut bounds = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (center, radii) in lobes {
                let lx = cos_y * center.x() - sin_y * center.y() + cx;
                let ly = sin_y * center.x() + cos_y * center.y() + cy;
                let r = radii[0].max(radii[1]);
                bounds.0 = bounds.0.min(lx - r);
                bounds.1 = bounds.1.min(ly - r);
                bounds.2 = bounds.2.max(lx + r);
                bounds.3 = bounds.3.max(ly + r);
            }
            bounds
        }
    }
}

/// Conservative bounding circle of a solid's footprint, for collision tests.
pub fn footprint_circle(solid: &Solid) -> (f64, f64, f64) {
    let (min_x, min_y, max_x, max_y) = footprint_aabb(solid);
    let cx = (min_x + max_x) / 2.0;
    let cy = (min_y + max_y) / 2.0;
    let r = ((max_x - min_x).powi(2) + (max_y - min_y).powi(2)).sqrt() / 2.0;
    (cx, cy, r)
}

/// Footprint-circle overlap test between two solids.
pub fn solids_overlap(a: &Solid, b: &Solid) -> bool {
    let (ax, ay, ar) = footprint_circle(a);
    let (bx, by, br) = footprint_circle(b);
    let dx = ax - bx;
    let dy = ay - by;
    dx * dx + dy * dy < (ar + br) * (ar + br)
}

/// Uniform 2D grid over solid footprints for accelerated nearest-hit casts.
/// Ground rectangles are few and cheap; they are tested exhaustively.
pub struct RayCaster<'a> {
    scene: &'a Scene,
    min_x: f64,
    min_y: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl<'a> RayCaster<'a> {
    pub fn new(scene: &'a Scene) -> RayCaster<'a> {
        let mut min_x = f64::INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for solid in &scene.solids {
            let (lo_x, lo_y, hi_x, hi_y) = footprint_aabb(solid);
            min_x = min_x.min(lo_x);
            min_y = min_y.min(lo_y);
            max_x = max_x.max(hi_x);
            max_y = max_y.max(hi_y);
        }
        if scene.solids.is_empty() {
            (min_x, min_y, max_x, max_y) = (0.0, 0.0, 1.0, 1.0);
        }
        let span = (max_x - min_x).max(max_y - min_y).max(1.0);
        let cell = (span / 48.0).clamp(4.0, 32.0);
        let nx = ((max_x - min_x) / cell).ceil().max(1.0) as usize;
        let ny = ((max_y - min_y) / cell).ceil().max(1.0) as usize;
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, solid) in scene.solids.iter().enumerate() {
            let (lo_x, lo_y, hi_x, hi_y) = footprint_aabb(solid);
            let ix0 = (((lo_x - min_x) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let ix1 = (((hi_x - min_x) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let iy0 = (((lo_y - min_y) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            let iy1 = (((hi_y - min_y) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    cells[iy * nx + ix].push(i as u32);
                }
            }
        }
        RayCaster { scene, min_x, min_y, cell, nx, ny, cells }
    }

    /// Nearest hit along the ray, or `None` for a miss. With equal
    /// parameters the earlier entity wins (strict ordering keeps casts
    /// deterministic).
    pub fn cast(&self, ray: &Ray) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (i, rect) in self.scene.ground.iter().enumerate() {
            if let Some(t) = ray_ground(ray, rect) {
                if best.as_ref().is_none_or(|b| t < b.t) {
                    best = Some(Hit { t, label: rect.label, entity: EntityRef::Ground(i) });
                }
            }
        }
        self.cast_solids(ray, &mut best);
        best
    }

    fn test_cell(&self, ray: &Ray, ix: usize, iy: usize, best: &mut Option<Hit>) {
        for &si in &self.cells[iy * self.nx + ix] {
            let solid = &self.scene.solids[si as usize];
            if let Some(t) = ray_solid(ray, solid) {
                if best.as_ref().is_none_or(|b| t < b.t) {
                    *best = Some(Hit {
                        t,
                        label: solid.label,
                        entity: EntityRef::Solid(si as usize),
                    });
                }
            }
        }
    }

    fn cast_solids(&self, ray: &Ray, best: &mut Option<Hit>) {
        let (dx, dy) = (ray.dir.x(), ray.dir.y());
        let width = self.nx as f64 * self.cell;
        let height = self.ny as f64 * self.cell;
        let (ox, oy) = (ray.origin.x() - self.min_x, ray.origin.y() - self.min_y);

        // Entry parameter into the grid's xy extent.
        let mut t_enter = 0.0f64;
        let mut t_exit = f64::INFINITY;
        for (o, d, hi) in [(ox, dx, width), (oy, dy, height)] {
            if d == 0.0 {
                if o < 0.0 || o > hi {
                    return;
                }
            } else {
                let mut t0 = (0.0 - o) / d;
                let mut t1 = (hi - o) / d;
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                t_enter = t_enter.max(t0);
                t_exit = t_exit.min(t1);
                if t_enter > t_exit {
                    return;
                }
            }
        }

        // Cell of the entry point (nudged inward).
        let start = t_enter + 1e-12;
        let px = ox + start * dx;
        let py = oy + start * dy;
        let mut ix = ((px / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let mut iy = ((py / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);

        let step_x: isize = if dx > 0.0 { 1 } else { -1 };
        let step_y: isize = if dy > 0.0 { 1 } else { -1 };
        let mut t_max_x = if dx != 0.0 {
            let boundary = if dx > 0.0 { (ix + 1) as f64 } else { ix as f64 } * self.cell;
            (boundary - ox) / dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy != 0.0 {
            let boundary = if dy > 0.0 { (iy + 1) as f64 } else { iy as f64 } * self.cell;
            (boundary - oy) / dy
        } else {
            f64::INFINITY
        };
        let t_delta_x = if dx != 0.0 { self.cell / dx.abs() } else { f64::INFINITY };
        let t_delta_y = if dy != 0.0 { self.cell / dy.abs() } else { f64::INFINITY };

        let mut cell_entry = t_enter;
        for _ in 0..self.nx + self.ny + 2 {
            if let Some(b) = best.as_ref() {
                if b.t < cell_entry {
                    return;
                }
            }
            self.test_cell(ray, ix as usize, iy as usize, best);
            if t_max_x < t_max_y {
                cell_entry = t_max_x;
                t_max_x += t_delta_x;
                ix += step_x;
                if ix < 0 || ix >= self.nx as isize {
                    return;
                }
            } else {
                cell_entry = t_max_y;
                t_max_y += t_delta_y;
                iy += step_y;
                if iy < 0 || iy >= self.ny as isize {
                    return;
                }
            }
            if cell_entry > t_exit {
                return;
            }
        }
    }
}
