//! Text artifacts: CSV tables, SVG histograms, and run manifests.
//!
//! All tables use LF line endings, a header row, and dot decimals. Numeric
//! fields print with 6 significant digits in positional notation so the
//! files are stable targets for golden tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::axis::StalkAxis;
use crate::evaluation::{AblationConfigResult, ComponentRank, EvaluationReport, SamplePair};
use crate::slicing::{SliceMeasurement, StalkEstimate};
use crate::synth::StalkSpec;
use crate::{Error, Result};

/// Formats with 6 significant digits in positional (never scientific)
/// notation. The decimal count is 5 - floor(log10 |x|), clamped at zero, so
/// integers above 10^5 print without a fractional part.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let precision = (5 - magnitude).max(0) as usize;
    format!("{x:.precision$}")
}

/// Per-slice table. `slice_label` is 1-based for people, `slice_index`
/// 0-based for programs; invalid slices leave the diameter empty.
pub fn slices_csv(slices: &[SliceMeasurement]) -> String {
    let mut out = String::from("slice_index,slice_label,t_center_m,n_raw,n_kept,diameter_m,retained\n");
    for s in slices {
        let diameter = s.diameter.map(fmt_sig).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.index,
            s.index + 1,
            fmt_sig(s.t_center),
            s.n_raw,
            s.n_kept,
            diameter,
            s.retained
        );
    }
    out
}

/// One-row summary of a measurement run.
pub struct SummaryRow<'a> {
    pub sample_id: &'a str,
    pub estimate: &'a StalkEstimate,
    pub axis: &'a StalkAxis,
    pub n_points_raw: usize,
    pub n_points_filtered: usize,
    pub ground_truth: Option<f64>,
}

pub fn summary_csv(row: &SummaryRow) -> String {
    let mut out = String::from(
        "sample_id,predicted_diameter_m,mean_diameter_m,std_diameter_m,n_valid_slices,n_slices,\
         n_points_raw,n_points_filtered,axis_dir_x,axis_dir_y,axis_dir_z,centroid_x_m,\
         centroid_y_m,centroid_z_m,t_min_m,t_max_m,ground_truth_m\n",
    );
    let e = row.estimate;
    let a = row.axis;
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        row.sample_id,
        fmt_sig(e.predicted_diameter),
        fmt_sig(e.mean_diameter),
        fmt_sig(e.std_diameter),
        e.n_valid,
        e.slices.len(),
        row.n_points_raw,
        row.n_points_filtered,
        fmt_sig(a.direction.x),
        fmt_sig(a.direction.y),
        fmt_sig(a.direction.z),
        fmt_sig(a.centroid.x),
        fmt_sig(a.centroid.y),
        fmt_sig(a.centroid.z),
        fmt_sig(a.t_min),
        fmt_sig(a.t_max),
        row.ground_truth.map(fmt_sig).unwrap_or_default()
    );
    out
}

/// Metrics table; the coefficient of determination stays empty when it is
/// undefined.
pub fn evaluation_csv(report: &EvaluationReport) -> String {
    format!(
        "mae_m,mape_pct,rmse_m,r2,n\n{},{},{},{},{}\n",
        fmt_sig(report.mae),
        fmt_sig(report.mape),
        fmt_sig(report.rmse),
        report.r2.map(fmt_sig).unwrap_or_default(),
        report.n
    )
}

pub fn ablation_csv(configs: &[AblationConfigResult]) -> String {
    let mut out = String::from("configuration,mae_m,mape_pct,rmse_m,r2\n");
    for c in configs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.name,
            fmt_sig(c.report.mae),
            fmt_sig(c.report.mape),
            fmt_sig(c.report.rmse),
            c.report.r2.map(fmt_sig).unwrap_or_default()
        );
    }
    out
}

pub fn ranking_csv(ranking: &[ComponentRank]) -> String {
    let mut out = String::from("component,rank,delta_mae_m\n");
    for r in ranking {
        let _ = writeln!(out, "{},{},{}", r.component, r.rank, fmt_sig(r.delta_mae));
    }
    out
}

pub fn pairs_csv(pairs: &[SamplePair]) -> String {
    let mut out = String::from("sample_id,predicted_m,actual_m\n");
    for p in pairs {
        let _ = writeln!(out, "{},{},{}", p.id, fmt_sig(p.predicted), fmt_sig(p.actual));
    }
    out
}

fn csv_fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_field<T: std::str::FromStr>(value: &str, line_no: usize, what: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::MalformedInput(format!("line {line_no}: cannot parse {what} from {value:?}"))
    })
}

/// Parses the prediction-pair table. Errors name the offending line,
/// counting the header as line 1.
pub fn read_pairs_csv(text: &str) -> Result<Vec<SamplePair>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::MalformedInput("line 1: empty pair table".into()))?;
    if csv_fields(header) != ["sample_id", "predicted_m", "actual_m"] {
        return Err(Error::MalformedInput(format!(
            "line 1: expected header sample_id,predicted_m,actual_m, got {header:?}"
        )));
    }
    let mut pairs = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = csv_fields(line);
        if fields.len() != 3 {
            return Err(Error::MalformedInput(format!(
                "line {line_no}: expected 3 fields, got {}",
                fields.len()
            )));
        }
        pairs.push(SamplePair {
            id: fields[0].to_string(),
            predicted: parse_field(fields[1], line_no, "predicted_m")?,
            actual: parse_field(fields[2], line_no, "actual_m")?,
        });
    }
    if pairs.is_empty() {
        return Err(Error::MalformedInput("pair table has a header but no rows".into()));
    }
    Ok(pairs)
}

/// One generated sample as recorded in a dataset manifest.
pub struct ManifestRow<'a> {
    pub sample_id: &'a str,
    pub spec: &'a StalkSpec,
    /// Paths relative to the manifest's directory.
    pub depth: &'a str,
    pub mask: &'a str,
    pub intrinsics: &'a str,
    pub generator: &'a str,
}

pub fn manifest_csv(rows: &[ManifestRow]) -> String {
    let mut out = String::from(
        "sample_id,true_diameter_m,seed,depth,mask,intrinsics,visibility,radius_m,length_m,\
         curvature_m,noise_sigma_m,outlier_fraction,outlier_scale_m,points_per_ring,rings,\
         axis_x,axis_y,axis_z,base_x,base_y,base_z,generator\n",
    );
    for r in rows {
        let s = r.spec;
        let axis = s.axis_direction.normalize();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sample_id,
            fmt_sig(s.true_diameter()),
            s.seed,
            r.depth,
            r.mask,
            r.intrinsics,
            s.visibility.as_str(),
            fmt_sig(s.radius),
            fmt_sig(s.length),
            fmt_sig(s.curvature),
            fmt_sig(s.noise_sigma),
            fmt_sig(s.outlier_fraction),
            fmt_sig(s.outlier_scale),
            s.points_per_ring,
            s.rings,
            fmt_sig(axis.x),
            fmt_sig(axis.y),
            fmt_sig(axis.z),
            fmt_sig(s.base_point.x),
            fmt_sig(s.base_point.y),
            fmt_sig(s.base_point.z),
            r.generator
        );
    }
    out
}

/// A dataset entry resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub sample_id: String,
    pub depth: PathBuf,
    pub mask: PathBuf,
    pub intrinsics: PathBuf,
    pub true_diameter: f64,
    /// Chord direction of the generated stalk, if recorded.
    pub true_axis: Option<[f64; 3]>,
}

/// Reads a dataset manifest, locating columns by header name so extra
/// metadata columns are allowed in any order.
pub fn read_manifest_csv(text: &str, base_dir: &Path) -> Result<Vec<DatasetEntry>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::MalformedInput("line 1: empty manifest".into()))?;
    let names = csv_fields(header);
    let col = |name: &str| -> Result<usize> {
        names.iter().position(|&n| n == name).ok_or_else(|| {
            Error::MalformedInput(format!("line 1: manifest is missing column {name}"))
        })
    };
    let id_col = col("sample_id")?;
    let truth_col = col("true_diameter_m")?;
    let depth_col = col("depth")?;
    let mask_col = col("mask")?;
    let intr_col = col("intrinsics")?;
    let axis_cols = ["axis_x", "axis_y", "axis_z"]
        .map(|n| names.iter().position(|&h| h == n));

    let mut entries = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = csv_fields(line);
        if fields.len() != names.len() {
            return Err(Error::MalformedInput(format!(
                "line {line_no}: expected {} fields, got {}",
                names.len(),
                fields.len()
            )));
        }
        let true_axis = match axis_cols {
            [Some(x), Some(y), Some(z)] => Some([
                parse_field(fields[x], line_no, "axis_x")?,
                parse_field(fields[y], line_no, "axis_y")?,
                parse_field(fields[z], line_no, "axis_z")?,
            ]),
            _ => None,
        };
        entries.push(DatasetEntry {
            sample_id: fields[id_col].to_string(),
            depth: base_dir.join(fields[depth_col]),
            mask: base_dir.join(fields[mask_col]),
            intrinsics: base_dir.join(fields[intr_col]),
            true_diameter: parse_field(fields[truth_col], line_no, "true_diameter_m")?,
            true_axis,
        });
    }
    if entries.is_empty() {
        return Err(Error::MalformedInput("manifest has a header but no rows".into()));
    }
    Ok(entries)
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
const HISTOGRAM_BINS: usize = 20;

fn fmt_px(x: f64) -> String {
    format!("{x:.2}")
}

/// Renders a histogram of slice diameters as standalone SVG: 20 equal-width
/// bins over [min, max] (values at the top edge fall into the last bin),
/// with an optional vertical ground-truth marker. The output depends only
/// on the inputs, so files are byte-stable.
pub fn svg_histogram(diameters: &[f64], ground_truth: Option<f64>) -> Result<String> {
    if diameters.is_empty() {
        return Err(Error::InvalidParameter("histogram needs at least one diameter".into()));
    }
    let mut lo = diameters.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = diameters.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(gt) = ground_truth {
        lo = lo.min(gt);
        hi = hi.max(gt);
    }
    if hi == lo {
        lo -= 5e-4;
        hi += 5e-4;
    }
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &d in diameters {
        let bin = (((d - lo) / (hi - lo) * HISTOGRAM_BINS as f64) as usize)
            .min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    let max_count = *counts.iter().max().expect("bins exist") as f64;

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |value: f64| MARGIN_LEFT + (value - lo) / (hi - lo) * plot_w;
    let y_of = |count: f64| MARGIN_TOP + plot_h - count / max_count * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" fill=\"white\"/>");
    let bin_w = plot_w / HISTOGRAM_BINS as f64;
    for (i, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let x = MARGIN_LEFT + i as f64 * bin_w;
        let y = y_of(count as f64);
        let h = MARGIN_TOP + plot_h - y;
        let _ = writeln!(
            svg,
            "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#4878a8\" stroke=\"white\" stroke-width=\"0.5\"/>",
            fmt_px(x),
            fmt_px(y),
            fmt_px(bin_w),
            fmt_px(h)
        );
    }
    // Axes.
    let x0 = fmt_px(MARGIN_LEFT);
    let x1 = fmt_px(MARGIN_LEFT + plot_w);
    let y0 = fmt_px(MARGIN_TOP + plot_h);
    let _ = writeln!(
        svg,
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{x0}\" y1=\"{}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>",
        fmt_px(MARGIN_TOP)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{x0}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        fmt_px(MARGIN_TOP + plot_h + 20.0),
        fmt_sig(lo)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{x1}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        fmt_px(MARGIN_TOP + plot_h + 20.0),
        fmt_sig(hi)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">diameter_m</text>",
        fmt_px(MARGIN_LEFT + plot_w / 2.0),
        fmt_px(MARGIN_TOP + plot_h + 38.0)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{} slices</text>",
        fmt_px(MARGIN_LEFT + plot_w),
        fmt_px(MARGIN_TOP + 12.0),
        diameters.len()
    );
    if let Some(gt) = ground_truth {
        let x = fmt_px(x_of(gt));
        let _ = writeln!(
            svg,
            "  <line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{y0}\" stroke=\"#c03028\" stroke-width=\"1.5\" stroke-dasharray=\"4 2\"/>",
            fmt_px(MARGIN_TOP)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{x}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"#c03028\" text-anchor=\"middle\">truth {}</text>",
            fmt_px(MARGIN_TOP + 12.0),
            fmt_sig(gt)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Record of one CLI run: inputs, effective configuration, outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub sample_id: String,
    pub inputs: Vec<String>,
    /// SHA-256 of the effective configuration JSON, hex.
    pub config_sha256: String,
    pub outputs: Vec<String>,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("plain data serializes");
        text.push('\n');
        text
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}
