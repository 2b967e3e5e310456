//! Camera model, raster containers, and depth back-projection.

use nalgebra::Vector3;

use crate::{Error, Result};

/// Pinhole camera intrinsics plus the depth quantization step.
///
/// `depth_scale` converts stored 16-bit depth units to meters; the common
/// millimeter encoding is 0.001.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    /// Rejects dimensions or parameters a pinhole model cannot have.
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be at least 1x1, got {}x{}",
                self.width, self.height
            )));
        }
        for (name, v) in [("fx", self.fx), ("fy", self.fy)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        for (name, v) in [("cx", self.cx), ("cy", self.cy)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if !self.depth_scale.is_finite() || self.depth_scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "depth_scale must be finite and positive, got {}",
                self.depth_scale
            )));
        }
        Ok(())
    }
}

/// Row-major 16-bit depth raster. A stored value of zero means no reading.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, data: Vec<u16>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "depth buffer holds {} values for a {}x{} image",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn at(&self, u: u32, v: u32) -> u16 {
        self.data[v as usize * self.width as usize + u as usize]
    }
}

/// Row-major foreground mask.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "mask buffer holds {} values for a {}x{} image",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn at(&self, u: u32, v: u32) -> bool {
        self.data[v as usize * self.width as usize + u as usize]
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Row-major 8-bit color raster, used only to attach colors to points.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<[u8; 3]>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "rgb buffer holds {} values for a {}x{} image",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn at(&self, u: u32, v: u32) -> [u8; 3] {
        self.data[v as usize * self.width as usize + u as usize]
    }
}

/// Metric point cloud with optional per-point colors in [0, 1].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub colors: Option<Vec<[f64; 3]>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Vector3<f64>>) -> Self {
        Self { points, colors: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keep the points at `indices`, preserving order; colors follow points.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|cs| indices.iter().map(|&i| cs[i]).collect()),
        }
    }
}

/// Nearest-neighbor mask resampling.
///
/// Each destination pixel (r, c) copies the source pixel at
/// (floor(r * src_h / dst_h), floor(c * src_w / dst_w)). Resampling to the
/// source dimensions is the identity.
pub fn resize_mask(mask: &BinaryMask, width: u32, height: u32) -> Result<BinaryMask> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "mask target dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    if width == mask.width && height == mask.height {
        return Ok(mask.clone());
    }
    let mut data = Vec::with_capacity(width as usize * height as usize);
    for r in 0..height as usize {
        let src_r = r * mask.height as usize / height as usize;
        let row = src_r * mask.width as usize;
        for c in 0..width as usize {
            let src_c = c * mask.width as usize / width as usize;
            data.push(mask.data[row + src_c]);
        }
    }
    BinaryMask::new(width, height, data)
}

/// Back-projects masked depth pixels through the pinhole model.
///
/// Pixels are visited in row-major order. A pixel contributes one point iff
/// it is foreground in the mask and its depth reading is nonzero:
///
/// ```text
/// z = depth * depth_scale
/// x = (u - cx) * z / fx
/// y = (v - cy) * z / fy
/// ```
///
/// When `rgb` is given its dimensions must match the depth image and the
/// resulting cloud carries colors scaled to [0, 1].
pub fn backproject(
    depth: &DepthImage,
    mask: &BinaryMask,
    intrinsics: &CameraIntrinsics,
    rgb: Option<&RgbImage>,
) -> Result<PointCloud> {
    intrinsics.validate()?;
    if depth.width != intrinsics.width || depth.height != intrinsics.height {
        return Err(Error::DimensionMismatch(format!(
            "depth is {}x{} but intrinsics describe {}x{}",
            depth.width, depth.height, intrinsics.width, intrinsics.height
        )));
    }
    if mask.width != depth.width || mask.height != depth.height {
        return Err(Error::DimensionMismatch(format!(
            "mask is {}x{} but depth is {}x{}",
            mask.width, mask.height, depth.width, depth.height
        )));
    }
    if let Some(rgb) = rgb {
        if rgb.width != depth.width || rgb.height != depth.height {
            return Err(Error::DimensionMismatch(format!(
                "rgb is {}x{} but depth is {}x{}",
                rgb.width, rgb.height, depth.width, depth.height
            )));
        }
    }

    let mut points = Vec::new();
    let mut colors = rgb.map(|_| Vec::new());
    for v in 0..depth.height {
        for u in 0..depth.width {
            if !mask.at(u, v) {
                continue;
            }
            let d = depth.at(u, v);
            if d == 0 {
                continue;
            }
            let z = d as f64 * intrinsics.depth_scale;
            let x = (u as f64 - intrinsics.cx) * z / intrinsics.fx;
            let y = (v as f64 - intrinsics.cy) * z / intrinsics.fy;
            points.push(Vector3::new(x, y, z));
            if let (Some(colors), Some(rgb)) = (colors.as_mut(), rgb) {
                let [r, g, b] = rgb.at(u, v);
                colors.push([r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0]);
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud(
            "no pixel is both foreground and has a nonzero depth reading".into(),
        ));
    }
    Ok(PointCloud { points, colors })
}
