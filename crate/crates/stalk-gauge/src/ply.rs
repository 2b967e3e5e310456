//! ASCII PLY export of point clouds.
//!
//! Coordinates are written with Rust's shortest round-trip float formatting,
//! so writing and re-parsing reproduces the source values bit for bit.
//! Colors, when present, are emitted as 8-bit `red green blue` columns.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::camera::PointCloud;
use crate::{Error, Result};

pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<()> {
    if let Some(colors) = &cloud.colors {
        if colors.len() != cloud.points.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} colors for {} points",
                colors.len(),
                cloud.points.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", cloud.points.len()));
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if cloud.colors.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        match &cloud.colors {
            Some(colors) => {
                let [r, g, b] = colors[i];
                out.push_str(&format!(
                    "{} {} {} {} {} {}\n",
                    p.x,
                    p.y,
                    p.z,
                    channel_to_u8(r),
                    channel_to_u8(g),
                    channel_to_u8(b)
                ));
            }
            None => out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z)),
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn channel_to_u8(c: f64) -> u8 {
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Parses files produced by [`write_ply`]: ASCII, vertices only, optional
/// uchar colors. Used by tests and for inspecting exported clouds.
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let bad = |lineno: usize, msg: String| {
        Error::MalformedInput(format!("{}:{}: {msg}", path.display(), lineno + 1))
    };

    let mut expect = |want: &str| -> Result<()> {
        match lines.next() {
            Some((_, line)) if line.trim() == want => Ok(()),
            Some((n, line)) => Err(bad(n, format!("expected {want:?}, got {line:?}"))),
            None => Err(Error::MalformedInput(format!(
                "{}: truncated header, expected {want:?}",
                path.display()
            ))),
        }
    };
    expect("ply")?;
    expect("format ascii 1.0")?;

    let (count_lineno, count_line) = lines
        .next()
        .ok_or_else(|| Error::MalformedInput(format!("{}: truncated header", path.display())))?;
    let count: usize = count_line
        .trim()
        .strip_prefix("element vertex ")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad(count_lineno, format!("expected vertex element, got {count_line:?}")))?;

    let mut properties = Vec::new();
    let mut saw_end = false;
    for (n, line) in lines.by_ref() {
        let line = line.trim();
        if line == "end_header" {
            saw_end = true;
            break;
        }
        match line.split_ascii_whitespace().collect::<Vec<_>>().as_slice() {
            ["property", _ty, name] => properties.push(name.to_string()),
            _ => return Err(bad(n, format!("unsupported header line {line:?}"))),
        }
    }
    if !saw_end {
        return Err(Error::MalformedInput(format!(
            "{}: missing end_header",
            path.display()
        )));
    }
    let has_colors = match properties
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["x", "y", "z"] => false,
        ["x", "y", "z", "red", "green", "blue"] => true,
        other => {
            return Err(Error::MalformedInput(format!(
                "{}: unsupported property layout {other:?}",
                path.display()
            )))
        }
    };

    let mut points = Vec::with_capacity(count);
    let mut colors = has_colors.then(|| Vec::with_capacity(count));
    for _ in 0..count {
        let (n, line) = lines.next().ok_or_else(|| {
            Error::MalformedInput(format!(
                "{}: expected {count} vertex lines, found {}",
                path.display(),
                points.len()
            ))
        })?;
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let want = if has_colors { 6 } else { 3 };
        if fields.len() != want {
            return Err(bad(n, format!("expected {want} fields, got {}", fields.len())));
        }
        let mut coord = [0.0f64; 3];
        for (slot, field) in coord.iter_mut().zip(&fields[..3]) {
            *slot = field
                .parse()
                .map_err(|_| bad(n, format!("bad coordinate {field:?}")))?;
        }
        points.push(Vector3::new(coord[0], coord[1], coord[2]));
        if let Some(colors) = colors.as_mut() {
            let mut rgb = [0.0f64; 3];
            for (slot, field) in rgb.iter_mut().zip(&fields[3..]) {
                let v: u8 = field
                    .parse()
                    .map_err(|_| bad(n, format!("bad color {field:?}")))?;
                *slot = v as f64 / 255.0;
            }
            colors.push(rgb);
        }
    }
    Ok(PointCloud { points, colors })
}
