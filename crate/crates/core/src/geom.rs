//! 3D geometry primitives: points, rotation matrices and rigid poses.
//!
//! World and ego frames are right-handed with x forward, y left, z up.
//! Camera frames are z forward, x right, y down (standard pinhole).
//! All coordinates are meters stored as `f64`.

use thiserror::Error;

/// Tolerance for the orthonormality and determinant checks on rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("non-finite coordinate ({0}, {1}, {2})")]
    NonFinite(f64, f64, f64),
    #[error("rotation matrix is not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("rotation matrix determinant {0} is not +1")]
    ImproperRotation(f64),
}

/// A 3D point (or vector) with finite components.
///
/// Construction goes through [`Point3::new`] which rejects NaN/Inf, so a
/// stored point is always finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    x: f64,
    y: f64,
    z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        if x.is_finite() && y.is_finite() && z.is_finite() {
            Ok(Point3 { x, y, z })
        } else {
            Err(GeomError::NonFinite(x, y, z))
        }
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn raw(x: f64, y: f64, z: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite() && z.is_finite());
        Point3 { x, y, z }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn add(&self, other: Point3) -> Point3 {
        Point3::raw(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn sub(&self, other: Point3) -> Point3 {
        Point3::raw(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn scale(&self, s: f64) -> Point3 {
        Point3::raw(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(&self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: Point3) -> Point3 {
        Point3::raw(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(*self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance_sq(&self, other: Point3) -> f64 {
        self.sub(other).norm_sq()
    }

    pub fn distance(&self, other: Point3) -> f64 {
        self.distance_sq(other).sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point3> {
        let n = self.norm();
        if n > 0.0 {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Mat3 { m: rows }
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3::from_rows([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Mat3::from_rows(out)
    }

    pub fn mul_vec(&self, v: Point3) -> Point3 {
        let m = &self.m;
        Point3::raw(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Rotation about +z by `yaw` radians (counter-clockwise seen from above).
    pub fn from_yaw(yaw: f64) -> Mat3 {
        let (s, c) = yaw.sin_cos();
        Mat3::from_rows([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rodrigues rotation about a unit `axis` by `angle` radians.
    pub fn from_axis_angle(axis: Point3, angle: f64) -> Mat3 {
        let a = axis.normalized().unwrap_or(Point3::raw(0.0, 0.0, 1.0));
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let (x, y, z) = (a.x, a.y, a.z);
        Mat3::from_rows([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    /// Largest absolute deviation of `R^T R` from the identity.
    pub fn orthonormality_deviation(&self) -> f64 {
        let gram = self.transpose().mul_mat(self);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram.m[i][j] - expect).abs());
            }
        }
        worst
    }
}

/// Rigid transform mapping a sensor/local frame into its parent frame:
/// `p_parent = rotation * p_local + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Mat3,
    translation: Point3,
}

impl Pose {
    pub fn identity() -> Pose {
        Pose {
            rotation: Mat3::IDENTITY,
            translation: Point3::ORIGIN,
        }
    }

    /// Validates that `rotation` is a proper rotation (orthonormal,
    /// determinant +1) within [`ROTATION_TOLERANCE`].
    pub fn new(rotation: Mat3, translation: Point3) -> Result<Pose, GeomError> {
        for row in rotation.rows() {
            for &v in row {
                if !v.is_finite() {
                    return Err(GeomError::NonFinite(v, v, v));
                }
            }
        }
        let dev = rotation.orthonormality_deviation();
        if dev > ROTATION_TOLERANCE {
            return Err(GeomError::NotOrthonormal(dev));
        }
        let det = rotation.det();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeomError::ImproperRotation(det));
        }
        Ok(Pose { rotation, translation })
    }

    /// Internal constructor for rotations produced by composing valid poses.
    pub(crate) fn raw(rotation: Mat3, translation: Point3) -> Pose {
        debug_assert!(rotation.orthonormality_deviation() <= 1e-6);
        Pose { rotation, translation }
    }

    pub fn from_yaw(yaw: f64, translation: Point3) -> Pose {
        Pose::raw(Mat3::from_yaw(yaw), translation)
    }

    pub fn from_translation(translation: Point3) -> Pose {
        Pose::raw(Mat3::IDENTITY, translation)
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> Point3 {
        self.translation
    }

    /// Maps a point from the local frame into the parent frame.
    pub fn apply(&self, p: Point3) -> Point3 {
        self.rotation.mul_vec(p).add(self.translation)
    }

    /// Rotates a direction vector (no translation).
    pub fn rotate(&self, v: Point3) -> Point3 {
        self.rotation.mul_vec(v)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        let t = rt.mul_vec(self.translation).scale(-1.0);
        Pose::raw(rt, t)
    }

    /// `self ∘ inner`: applies `inner` first, then `self`.
    pub fn compose(&self, inner: &Pose) -> Pose {
        Pose::raw(
            self.rotation.mul_mat(&inner.rotation),
            self.rotation.mul_vec(inner.translation).add(self.translation),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_rejects_non_finite() {
        assert!(Point3::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(Point3::new(0.0, f64::INFINITY, 0.0).is_err());
        assert!(Point3::new(0.0, 0.0, f64::NEG_INFINITY).is_err());
        assert!(Point3::new(1.0, -2.0, 3.5).is_ok());
    }

    #[test]
    fn yaw_rotation_maps_x_to_y() {
        let pose = Pose::from_yaw(std::f64::consts::FRAC_PI_2, Point3::ORIGIN);
        let p = pose.apply(Point3::new(1.0, 0.0, 0.0).unwrap());
        assert!((p.x() - 0.0).abs() < 1e-9);
        assert!((p.y() - 1.0).abs() < 1e-9);
        assert!((p.z() - 0.0).abs() < 1e-9);
    }

    #[test]
    fn pose_rejects_non_rotation() {
        let scaled = Mat3::from_rows([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]);
        assert!(matches!(
            Pose::new(scaled, Point3::ORIGIN),
            Err(GeomError::NotOrthonormal(_))
        ));
        // Orthonormal but determinant -1 (a reflection).
        let mirror = Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]);
        assert!(matches!(
            Pose::new(mirror, Point3::ORIGIN),
            Err(GeomError::ImproperRotation(_))
        ));
    }

    #[test]
    fn inverse_round_trip() {
        let pose = Pose::raw(
            Mat3::from_axis_angle(Point3::new(1.0, 2.0, 3.0).unwrap(), 0.7),
            Point3::new(4.0, -5.0, 6.0).unwrap(),
        );
        let p = Point3::new(0.3, -1.2, 2.5).unwrap();
        let back = pose.inverse().apply(pose.apply(p));
        assert!(back.distance(p) < 1e-12);
    }

    #[test]
    fn compose_matches_sequential_application() {
        let a = Pose::from_yaw(0.3, Point3::new(1.0, 0.0, 0.0).unwrap());
        let b = Pose::from_yaw(-1.1, Point3::new(0.0, 2.0, 0.5).unwrap());
        let p = Point3::new(0.5, 0.5, 0.5).unwrap();
        let composed = a.compose(&b).apply(p);
        let sequential = a.apply(b.apply(p));
        assert!(composed.distance(sequential) < 1e-12);
    }
}
