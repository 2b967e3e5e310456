//! File formats: intrinsics JSON, 16-bit depth rasters, masks, color images.
//!
//! Depth is stored as 16-bit grayscale PNG, with plain-text PGM (P2) accepted
//! as a fallback for hand-written fixtures. Masks are 8-bit PNG binarized at
//! >127. Format is chosen by file extension.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::{BinaryMask, CameraIntrinsics, DepthImage, RgbImage};
use crate::{Error, Result};

fn default_depth_scale() -> f64 {
    0.001
}

/// Flat on-disk form of [`CameraIntrinsics`]. Exactly these keys are
/// accepted; `depth_scale` may be omitted and defaults to 0.001.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsFile {
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    #[serde(default = "default_depth_scale")]
    depth_scale: f64,
}

pub fn load_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = fs::read_to_string(path)?;
    let file: IntrinsicsFile = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    let intr = CameraIntrinsics {
        width: file.width,
        height: file.height,
        fx: file.fx,
        fy: file.fy,
        cx: file.cx,
        cy: file.cy,
        depth_scale: file.depth_scale,
    };
    intr.validate()?;
    Ok(intr)
}

pub fn save_intrinsics(intr: &CameraIntrinsics, path: &Path) -> Result<()> {
    intr.validate()?;
    let file = IntrinsicsFile {
        width: intr.width,
        height: intr.height,
        fx: intr.fx,
        fy: intr.fy,
        cx: intr.cx,
        cy: intr.cy,
        depth_scale: intr.depth_scale,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn extension_of(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Reads a depth raster, dispatching on extension: `.png` for 16-bit PNG,
/// `.pgm` for plain-text P2.
pub fn load_depth(path: &Path) -> Result<DepthImage> {
    match extension_of(path).as_str() {
        "png" => load_depth_png(path),
        "pgm" => load_depth_pgm(path),
        other => Err(Error::MalformedInput(format!(
            "unsupported depth extension {other:?} for {} (use .png or .pgm)",
            path.display()
        ))),
    }
}

pub fn save_depth(depth: &DepthImage, path: &Path) -> Result<()> {
    match extension_of(path).as_str() {
        "png" => save_depth_png(depth, path),
        "pgm" => save_depth_pgm(depth, path),
        other => Err(Error::MalformedInput(format!(
            "unsupported depth extension {other:?} for {} (use .png or .pgm)",
            path.display()
        ))),
    }
}

fn load_depth_png(path: &Path) -> Result<DepthImage> {
    let img = image::open(path)?;
    match img {
        image::DynamicImage::ImageLuma16(buf) => {
            DepthImage::new(buf.width(), buf.height(), buf.into_raw())
        }
        other => Err(Error::MalformedInput(format!(
            "{}: depth PNG must be 16-bit grayscale, got {:?}",
            path.display(),
            other.color()
        ))),
    }
}

fn save_depth_png(depth: &DepthImage, path: &Path) -> Result<()> {
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
        depth.width,
        depth.height,
        depth.data.clone(),
    )
    .expect("depth buffer length is validated at construction");
    buf.save(path)?;
    Ok(())
}

/// Plain-text PGM. `#` starts a comment that runs to end of line.
fn load_depth_pgm(path: &Path) -> Result<DepthImage> {
    let text = fs::read_to_string(path)?;
    let mut cleaned = String::with_capacity(text.len());
    for line in text.lines() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        cleaned.push_str(line);
        cleaned.push('\n');
    }
    let mut tokens = cleaned.split_ascii_whitespace();
    let magic = tokens.next().unwrap_or("");
    if magic != "P2" {
        return Err(Error::MalformedInput(format!(
            "{}: expected P2 PGM magic, got {magic:?}",
            path.display()
        )));
    }
    let mut next_number = |what: &str| -> Result<u64> {
        let tok = tokens.next().ok_or_else(|| {
            Error::MalformedInput(format!("{}: missing {what}", path.display()))
        })?;
        tok.parse::<u64>().map_err(|_| {
            Error::MalformedInput(format!("{}: bad {what} {tok:?}", path.display()))
        })
    };
    let width = next_number("width")?;
    let height = next_number("height")?;
    let maxval = next_number("maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedInput(format!(
            "{}: bad PGM header {width}x{height} maxval {maxval}",
            path.display()
        )));
    }
    let count = (width * height) as usize;
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        let v = next_number("pixel value")?;
        if v > maxval {
            return Err(Error::MalformedInput(format!(
                "{}: pixel {i} is {v}, exceeds maxval {maxval}",
                path.display()
            )));
        }
        data.push(v as u16);
    }
    if tokens.next().is_some() {
        return Err(Error::MalformedInput(format!(
            "{}: trailing data after {count} pixel values",
            path.display()
        )));
    }
    DepthImage::new(width as u32, height as u32, data)
}

fn save_depth_pgm(depth: &DepthImage, path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    write!(out, "P2\n{} {}\n65535\n", depth.width, depth.height)?;
    for row in depth.data.chunks(depth.width as usize) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Loads a mask image; any PNG is converted to grayscale and binarized at
/// >127.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = (img.width(), img.height());
    let data = img.into_raw().into_iter().map(|v| v > 127).collect();
    BinaryMask::new(w, h, data)
}

pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let raw: Vec<u8> = mask.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf = image::ImageBuffer::<image::Luma<u8>, _>::from_raw(mask.width, mask.height, raw)
        .expect("mask buffer length is validated at construction");
    buf.save(path)?;
    Ok(())
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path)?.into_rgb8();
    let (w, h) = (img.width(), img.height());
    let data = img.pixels().map(|p| p.0).collect();
    RgbImage::new(w, h, data)
}
