//! Sensor image containers: depth, semantic label and color images, plus
//! the pinhole intrinsics used to register them with point clouds.

use thiserror::Error;

use crate::cloud::{LabelId, Rgb};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions {width}x{height} are invalid")]
    BadDimensions { width: u32, height: u32 },
    #[error("pixel buffer length {got} does not match {width}x{height}")]
    BufferMismatch { width: u32, height: u32, got: usize },
    #[error("focal length ({fx}, {fy}) must be positive")]
    NonPositiveFocal { fx: f64, fy: f64 },
    #[error("principal point ({cx}, {cy}) outside image {width}x{height}")]
    PrincipalPointOutside {
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    },
    #[error("depth at pixel {index} is {value}; depths must be finite and >= 0")]
    BadDepth { index: usize, value: f64 },
}

/// Pinhole camera intrinsics. Pixel (u, v) samples the continuous image
/// plane coordinate (u, v) exactly; u grows right, v grows down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

impl CameraIntrinsics {
    pub fn new(
        width: u32,
        height: u32,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
    ) -> Result<CameraIntrinsics, ImageError> {
        if width < 1 || height < 1 {
            return Err(ImageError::BadDimensions { width, height });
        }
        if !(fx > 0.0) || !(fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(ImageError::NonPositiveFocal { fx, fy });
        }
        if !(0.0 <= cx && cx < width as f64) || !(0.0 <= cy && cy < height as f64) {
            return Err(ImageError::PrincipalPointOutside { cx, cy, width, height });
        }
        Ok(CameraIntrinsics { width, height, fx, fy, cx, cy })
    }

    /// Intrinsics with the given horizontal field of view (degrees) and the
    /// principal point at the image center.
    pub fn with_hfov(width: u32, height: u32, hfov_deg: f64) -> Result<CameraIntrinsics, ImageError> {
        let half = (hfov_deg.to_radians() / 2.0).tan();
        let fx = width as f64 / 2.0 / half;
        CameraIntrinsics::new(
            width,
            height,
            fx,
            fx,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Row-major depth image in meters; 0 encodes "no return".
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: u32,
    height: u32,
    depths: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, depths: Vec<f64>) -> Result<DepthImage, ImageError> {
        if width < 1 || height < 1 {
            return Err(ImageError::BadDimensions { width, height });
        }
        if depths.len() != width as usize * height as usize {
            return Err(ImageError::BufferMismatch { width, height, got: depths.len() });
        }
        for (i, &d) in depths.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(ImageError::BadDepth { index: i, value: d });
            }
        }
        Ok(DepthImage { width, height, depths })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn at(&self, u: u32, v: u32) -> f64 {
        self.depths[v as usize * self.width as usize + u as usize]
    }
}

/// Row-major image of semantic label ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticImage {
    width: u32,
    height: u32,
    labels: Vec<LabelId>,
}

impl SemanticImage {
    pub fn new(width: u32, height: u32, labels: Vec<LabelId>) -> Result<SemanticImage, ImageError> {
        if width < 1 || height < 1 {
            return Err(ImageError::BadDimensions { width, height });
        }
        if labels.len() != width as usize * height as usize {
            return Err(ImageError::BufferMismatch { width, height, got: labels.len() });
        }
        Ok(SemanticImage { width, height, labels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[LabelId] {
        &self.labels
    }

    pub fn at(&self, u: u32, v: u32) -> LabelId {
        self.labels[v as usize * self.width as usize + u as usize]
    }
}

/// Row-major RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<ColorImage, ImageError> {
        if width < 1 || height < 1 {
            return Err(ImageError::BadDimensions { width, height });
        }
        if pixels.len() != width as usize * height as usize {
            return Err(ImageError::BufferMismatch { width, height, got: pixels.len() });
        }
        Ok(ColorImage { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn at(&self, u: u32, v: u32) -> Rgb {
        self.pixels[v as usize * self.width as usize + u as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(640, 480, 500.0, 500.0, 319.5, 239.5).is_ok());
        assert!(CameraIntrinsics::new(0, 480, 500.0, 500.0, 0.0, 0.0).is_err());
        assert!(CameraIntrinsics::new(640, 480, -1.0, 500.0, 0.0, 0.0).is_err());
        assert!(CameraIntrinsics::new(640, 480, 500.0, 500.0, 640.0, 0.0).is_err());
    }

    #[test]
    fn depth_rejects_negative_and_nan() {
        assert!(DepthImage::new(2, 1, vec![0.0, -1.0]).is_err());
        assert!(DepthImage::new(2, 1, vec![f64::NAN, 0.0]).is_err());
        assert!(DepthImage::new(2, 1, vec![0.0, 3.5]).is_ok());
    }

    #[test]
    fn buffer_length_checked() {
        assert!(SemanticImage::new(3, 2, vec![0; 5]).is_err());
        assert!(ColorImage::new(3, 2, vec![Rgb::BLACK; 6]).is_ok());
    }

    #[test]
    fn hfov_ninety_degrees() {
        let intr = CameraIntrinsics::with_hfov(800, 600, 90.0).unwrap();
        assert!((intr.fx() - 400.0).abs() < 1e-9);
    }
}
