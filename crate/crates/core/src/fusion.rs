//! Registers 2D sensor ground truth with 3D point clouds via the pinhole
//! model: depth-image back-projection, point projection and label/color
//! fusion.
//!
//! Pixel (u, v) samples the continuous image-plane coordinate (u, v)
//! exactly, so back-projecting and re-projecting a pixel reproduces its
//! coordinates up to floating-point rounding. Fusion has no z-buffer: a
//! point occluded from the camera receives the occluder's label. The
//! depth-consistency variant rejects such points instead.

use thiserror::Error;

use crate::cloud::{PointCloud, Rgb};
use crate::geom::{Point3, Pose};
use crate::image::{CameraIntrinsics, ColorImage, DepthImage, SemanticImage};

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("{what} is {got_w}x{got_h} but the camera is {exp_w}x{exp_h}")]
    DimensionMismatch {
        what: &'static str,
        exp_w: u32,
        exp_h: u32,
        got_w: u32,
        got_h: u32,
    },
}

/// Continuous projection of a world point into an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionResult {
    pub u: f64,
    pub v: f64,
    /// z-coordinate in the camera frame (meters).
    pub depth: f64,
    /// True iff `0 <= u < width`, `0 <= v < height` and `depth > 0`.
    pub in_frustum: bool,
}

fn check_dims(
    what: &'static str,
    w: u32,
    h: u32,
    intr: &CameraIntrinsics,
) -> Result<(), FusionError> {
    if w != intr.width() || h != intr.height() {
        return Err(FusionError::DimensionMismatch {
            what,
            exp_w: intr.width(),
            exp_h: intr.height(),
            got_w: w,
            got_h: h,
        });
    }
    Ok(())
}

/// Projects a world point through `cam_pose` (camera-to-world) into pixel
/// coordinates. Points at or behind the camera plane are never in frustum.
pub fn project_point(
    p_world: Point3,
    intr: &CameraIntrinsics,
    cam_pose: &Pose,
) -> ProjectionResult {
    project_into(p_world, intr, &cam_pose.inverse())
}

/// Same as [`project_point`] but takes the precomputed world-to-camera pose,
/// avoiding a matrix inversion per point in bulk loops.
pub fn project_into(
    p_world: Point3,
    intr: &CameraIntrinsics,
    world_to_cam: &Pose,
) -> ProjectionResult {
    let p = world_to_cam.apply(p_world);
    let z = p.z();
    let (u, v) = if z != 0.0 {
        (
            intr.fx() * p.x() / z + intr.cx(),
            intr.fy() * p.y() / z + intr.cy(),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let in_frustum = z > 0.0
        && (0.0..intr.width() as f64).contains(&u)
        && (0.0..intr.height() as f64).contains(&v);
    ProjectionResult { u, v, depth: z, in_frustum }
}

/// Lifts every positive-depth pixel to a world-frame point. Output order is
/// row-major over the emitting pixels; pixels with depth 0 emit nothing.
pub fn backproject(
    depth: &DepthImage,
    intr: &CameraIntrinsics,
    cam_pose: &Pose,
) -> Result<PointCloud, FusionError> {
    check_dims("depth image", depth.width(), depth.height(), intr)?;
    let mut positions = Vec::new();
    for v in 0..depth.height() {
        for u in 0..depth.width() {
            let d = depth.at(u, v);
            if d > 0.0 {
                let cam = Point3::raw(
                    (u as f64 - intr.cx()) * d / intr.fx(),
                    (v as f64 - intr.cy()) * d / intr.fy(),
                    d,
                );
                positions.push(cam_pose.apply(cam));
            }
        }
    }
    Ok(PointCloud::from_positions(positions))
}

/// Nearest valid pixel index for a coordinate inside the lookup band.
fn nearest_pixel(c: f64, size: u32) -> u32 {
    ((c + 0.5).floor() as i64).clamp(0, size as i64 - 1) as u32
}

/// Whether a projection can be looked up in the images: positive depth and
/// coordinates within half a pixel of the image. Pixel centers sit at
/// integer coordinates, so a point that projects numerically to -1e-12
/// still belongs to pixel 0; `u = width` stays outside (the half-open
/// border convention).
fn lookupable(proj: &ProjectionResult, intr: &CameraIntrinsics) -> bool {
    proj.depth > 0.0
        && (-0.5..intr.width() as f64).contains(&proj.u)
        && (-0.5..intr.height() as f64).contains(&proj.v)
}

fn fuse_impl(
    cloud: &PointCloud,
    semantic: &SemanticImage,
    color: &ColorImage,
    depth_check: Option<(&DepthImage, f64)>,
    intr: &CameraIntrinsics,
    cam_pose: &Pose,
) -> Result<PointCloud, FusionError> {
    check_dims("semantic image", semantic.width(), semantic.height(), intr)?;
    check_dims("color image", color.width(), color.height(), intr)?;
    if let Some((depth, _)) = depth_check {
        check_dims("depth image", depth.width(), depth.height(), intr)?;
    }

    let world_to_cam = cam_pose.inverse();
    let mut labels = Vec::with_capacity(cloud.len());
    let mut colors = Vec::with_capacity(cloud.len());
    for &p in cloud.positions() {
        let proj = project_into(p, intr, &world_to_cam);
        if !lookupable(&proj, intr) {
            labels.push(0);
            colors.push(Rgb::BLACK);
            continue;
        }
        let u = nearest_pixel(proj.u, intr.width());
        let v = nearest_pixel(proj.v, intr.height());
        if let Some((depth, max_gap)) = depth_check {
            let reference = depth.at(u, v);
            if reference == 0.0 || (proj.depth - reference).abs() > max_gap {
                labels.push(0);
                colors.push(Rgb::BLACK);
                continue;
            }
        }
        labels.push(semantic.at(u, v));
        colors.push(color.at(u, v));
    }
    let out = PointCloud::new(cloud.positions().to_vec(), Some(colors), Some(labels), None)
        .expect("lengths match by construction");
    Ok(out)
}

/// Assigns each point the label and color of the nearest pixel it projects
/// to; points outside the image (beyond half a pixel of the border) or
/// behind the camera become unlabelled (0) and black. Positions are
/// carried over bit-identically. The result carries no taxonomy name;
/// attach the semantic image's taxonomy with
/// [`PointCloud::with_taxonomy`].
pub fn fuse(
    cloud: &PointCloud,
    semantic: &SemanticImage,
    color: &ColorImage,
    intr: &CameraIntrinsics,
    cam_pose: &Pose,
) -> Result<PointCloud, FusionError> {
    fuse_impl(cloud, semantic, color, None, intr, cam_pose)
}

/// [`fuse`] plus a depth-consistency filter: points whose camera depth
/// differs from the depth image at their pixel by more than `max_gap`
/// meters (occluded points, typically) are left unlabelled.
pub fn fuse_with_depth_check(
    cloud: &PointCloud,
    semantic: &SemanticImage,
    color: &ColorImage,
    depth: &DepthImage,
    max_gap: f64,
    intr: &CameraIntrinsics,
    cam_pose: &Pose,
) -> Result<PointCloud, FusionError> {
    fuse_impl(cloud, semantic, color, Some((depth, max_gap)), intr, cam_pose)
}
