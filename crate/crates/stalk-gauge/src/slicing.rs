//! Axis-orthogonal slicing and diameter estimation.
//!
//! The cloud is cut into thin slabs along the recovered axis. Each slab is
//! optionally cleaned with density clustering, reduced to radial distances
//! from its centroid, and summarized as a diameter; the per-slice diameters
//! are then aggregated into one estimate with a one-standard-deviation
//! trimmed mean.

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axis::{principal_axis, project_to_slice_plane, StalkAxis};
use crate::camera::{backproject, resize_mask, BinaryMask, CameraIntrinsics, DepthImage, PointCloud, RgbImage};
use crate::filtering::{dbscan, largest_cluster, sor_filter, DbscanParams, SorParams};
use crate::{Error, Result};

/// How the radial distances of one slice become a radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleFitMethod {
    /// Interpolated upper percentile of the radii; robust against points
    /// inside the cross-section.
    Percentile,
    Mean,
    Median,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleFitParams {
    pub method: CircleFitMethod,
    /// Quantile used by [`CircleFitMethod::Percentile`], in [0, 1].
    pub percentile_q: f64,
}

impl Default for CircleFitParams {
    fn default() -> Self {
        Self { method: CircleFitMethod::Percentile, percentile_q: 0.95 }
    }
}

/// How per-slice diameters combine into the final estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Keep slices within one standard deviation of the mean, then average.
    OneStd,
    /// Plain average of all valid slices.
    PlainMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicingParams {
    /// Number of slice centers along the axis.
    pub n_slices: usize,
    /// Fraction of the axial extent trimmed from each end before placing
    /// slice centers; must be below 0.5.
    pub trim_fraction: f64,
    /// Half of the slab thickness, meters.
    pub slab_half_thickness: f64,
    /// Slices keeping fewer points than this produce no diameter.
    pub min_slice_points: usize,
}

impl Default for SlicingParams {
    fn default() -> Self {
        Self {
            n_slices: 100,
            trim_fraction: 0.10,
            slab_half_thickness: 0.0075,
            min_slice_points: 5,
        }
    }
}

/// Full pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sor_enabled: bool,
    pub sor: SorParams,
    pub dbscan_enabled: bool,
    pub dbscan: DbscanParams,
    pub slicing: SlicingParams,
    pub circle_fit: CircleFitParams,
    pub aggregation: Aggregation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sor_enabled: true,
            sor: SorParams::default(),
            dbscan_enabled: true,
            dbscan: DbscanParams::default(),
            slicing: SlicingParams::default(),
            circle_fit: CircleFitParams::default(),
            aggregation: Aggregation::OneStd,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.sor.k_neighbors == 0 {
            return bad("sor_k_neighbors must be at least 1".into());
        }
        if !self.sor.std_ratio.is_finite() || self.sor.std_ratio < 0.0 {
            return bad(format!("sor_std_ratio must be finite and non-negative, got {}", self.sor.std_ratio));
        }
        if !self.dbscan.eps.is_finite() || self.dbscan.eps <= 0.0 {
            return bad(format!("dbscan_eps_m must be finite and positive, got {}", self.dbscan.eps));
        }
        if self.dbscan.min_samples == 0 {
            return bad("dbscan_min_samples must be at least 1".into());
        }
        if self.slicing.n_slices == 0 {
            return bad("n_slices must be at least 1".into());
        }
        if !self.slicing.trim_fraction.is_finite()
            || self.slicing.trim_fraction < 0.0
            || self.slicing.trim_fraction >= 0.5
        {
            return bad(format!(
                "trim_fraction must lie in [0, 0.5), got {}",
                self.slicing.trim_fraction
            ));
        }
        if !self.slicing.slab_half_thickness.is_finite() || self.slicing.slab_half_thickness <= 0.0 {
            return bad(format!(
                "slab_half_thickness_m must be finite and positive, got {}",
                self.slicing.slab_half_thickness
            ));
        }
        if self.slicing.min_slice_points == 0 {
            return bad("min_slice_points must be at least 1".into());
        }
        if !self.circle_fit.percentile_q.is_finite()
            || !(0.0..=1.0).contains(&self.circle_fit.percentile_q)
        {
            return bad(format!(
                "percentile_q must lie in [0, 1], got {}",
                self.circle_fit.percentile_q
            ));
        }
        Ok(())
    }

    /// Parses the flat JSON configuration. Every key is optional and
    /// unlisted keys are rejected; omitted keys keep their defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text)
            .map_err(|e| Error::MalformedInput(format!("config: {e}")))?;
        let config = file.apply_to(PipelineConfig::default());
        config.validate()?;
        Ok(config)
    }

    /// Serializes the effective configuration as flat JSON with every key
    /// present. Parsing the result reproduces `self` exactly.
    pub fn to_json_string(&self) -> String {
        let file = ConfigFile {
            sor_enabled: Some(self.sor_enabled),
            sor_k_neighbors: Some(self.sor.k_neighbors),
            sor_std_ratio: Some(self.sor.std_ratio),
            dbscan_enabled: Some(self.dbscan_enabled),
            dbscan_eps_m: Some(self.dbscan.eps),
            dbscan_min_samples: Some(self.dbscan.min_samples),
            n_slices: Some(self.slicing.n_slices),
            trim_fraction: Some(self.slicing.trim_fraction),
            slab_half_thickness_m: Some(self.slicing.slab_half_thickness),
            min_slice_points: Some(self.slicing.min_slice_points),
            circle_fit_method: Some(self.circle_fit.method),
            percentile_q: Some(self.circle_fit.percentile_q),
            aggregation: Some(self.aggregation),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("plain data serializes");
        text.push('\n');
        text
    }
}

/// On-disk form of [`PipelineConfig`]: one flat object, all keys optional.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    sor_enabled: Option<bool>,
    sor_k_neighbors: Option<usize>,
    sor_std_ratio: Option<f64>,
    dbscan_enabled: Option<bool>,
    dbscan_eps_m: Option<f64>,
    dbscan_min_samples: Option<usize>,
    n_slices: Option<usize>,
    trim_fraction: Option<f64>,
    slab_half_thickness_m: Option<f64>,
    min_slice_points: Option<usize>,
    circle_fit_method: Option<CircleFitMethod>,
    percentile_q: Option<f64>,
    aggregation: Option<Aggregation>,
}

impl ConfigFile {
    fn apply_to(&self, mut config: PipelineConfig) -> PipelineConfig {
        if let Some(v) = self.sor_enabled {
            config.sor_enabled = v;
        }
        if let Some(v) = self.sor_k_neighbors {
            config.sor.k_neighbors = v;
        }
        if let Some(v) = self.sor_std_ratio {
            config.sor.std_ratio = v;
        }
        if let Some(v) = self.dbscan_enabled {
            config.dbscan_enabled = v;
        }
        if let Some(v) = self.dbscan_eps_m {
            config.dbscan.eps = v;
        }
        if let Some(v) = self.dbscan_min_samples {
            config.dbscan.min_samples = v;
        }
        if let Some(v) = self.n_slices {
            config.slicing.n_slices = v;
        }
        if let Some(v) = self.trim_fraction {
            config.slicing.trim_fraction = v;
        }
        if let Some(v) = self.slab_half_thickness_m {
            config.slicing.slab_half_thickness = v;
        }
        if let Some(v) = self.min_slice_points {
            config.slicing.min_slice_points = v;
        }
        if let Some(v) = self.circle_fit_method {
            config.circle_fit.method = v;
        }
        if let Some(v) = self.percentile_q {
            config.circle_fit.percentile_q = v;
        }
        if let Some(v) = self.aggregation {
            config.aggregation = v;
        }
        config
    }
}

/// One measured cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMeasurement {
    /// Zero-based slice index along the axis.
    pub index: usize,
    /// Axial coordinate of the slab center, meters from the centroid.
    pub t_center: f64,
    /// Points falling inside the slab.
    pub n_raw: usize,
    /// Points surviving slice-level clustering.
    pub n_kept: usize,
    /// Present iff `n_kept` reaches the configured minimum.
    pub diameter: Option<f64>,
    /// True when the slice entered the final aggregate.
    pub retained: bool,
}

/// Result of measuring one stalk.
#[derive(Debug, Clone, PartialEq)]
pub struct StalkEstimate {
    pub slices: Vec<SliceMeasurement>,
    /// Mean over slices with a diameter.
    pub mean_diameter: f64,
    /// Population standard deviation over slices with a diameter.
    pub std_diameter: f64,
    /// Final estimate after aggregation.
    pub predicted_diameter: f64,
    /// Number of slices with a diameter.
    pub n_valid: usize,
}

/// Measurement plus the geometry needed to export clouds and axes.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub estimate: StalkEstimate,
    pub axis: StalkAxis,
    pub filtered_cloud: PointCloud,
}

/// Slice-center positions: the axial extent is trimmed by `trim_fraction`
/// on each end and the remaining span carries `n_slices` evenly spaced
/// centers, endpoints included. A single slice sits at the span midpoint.
pub fn slice_centers(t_min: f64, t_max: f64, params: &SlicingParams) -> Result<Vec<f64>> {
    if !(t_max > t_min) {
        return Err(Error::DegenerateGeometry(format!(
            "axial extent is empty: t_min {t_min}, t_max {t_max}"
        )));
    }
    let span = t_max - t_min;
    let lo = t_min + params.trim_fraction * span;
    let hi = t_max - params.trim_fraction * span;
    let n = params.n_slices;
    if n == 1 {
        return Ok(vec![(lo + hi) / 2.0]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

/// Indices of points whose axial projection lies within the closed slab
/// |(p - centroid) . direction - t_center| <= half_thickness.
pub fn slab_indices(
    points: &[Vector3<f64>],
    axis: &StalkAxis,
    t_center: f64,
    half_thickness: f64,
) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let t = (*p - axis.centroid).dot(&axis.direction);
            (t - t_center).abs() <= half_thickness
        })
        .map(|(i, _)| i)
        .collect()
}

/// Interpolated quantile of an unsorted sample.
///
/// Values are sorted ascending and the quantile sits at rank h = q (m - 1):
/// result = x[floor(h)] + (h - floor(h)) (x[ceil(h)] - x[floor(h)]).
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("percentile of an empty sample".into()));
    }
    if !q.is_finite() || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("quantile must lie in [0, 1], got {q}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Outcome of fitting one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceFit {
    /// Points surviving slice-level clustering.
    pub n_kept: usize,
    /// Present iff `n_kept >= min_points`.
    pub diameter: Option<f64>,
}

/// Fits a diameter to the 2D points of one slab.
///
/// With clustering enabled only the largest cluster survives. The slice
/// center is the centroid of the surviving points and the diameter is twice
/// the configured statistic of the radial distances.
pub fn fit_slice(
    points: &[Vector2<f64>],
    dbscan_enabled: bool,
    dbscan_params: &DbscanParams,
    fit: &CircleFitParams,
    min_points: usize,
) -> Result<SliceFit> {
    let kept: Vec<Vector2<f64>> = if dbscan_enabled {
        let raw: Vec<[f64; 2]> = points.iter().map(|p| [p.x, p.y]).collect();
        let labeling = dbscan(&raw, dbscan_params)?;
        largest_cluster(&labeling).into_iter().map(|i| points[i]).collect()
    } else {
        points.to_vec()
    };
    let n_kept = kept.len();
    if n_kept < min_points.max(1) {
        return Ok(SliceFit { n_kept, diameter: None });
    }
    let center = kept.iter().sum::<Vector2<f64>>() / n_kept as f64;
    let radii: Vec<f64> = kept.iter().map(|p| (p - center).norm()).collect();
    let radius = match fit.method {
        CircleFitMethod::Percentile => percentile(&radii, fit.percentile_q)?,
        CircleFitMethod::Mean => radii.iter().sum::<f64>() / radii.len() as f64,
        CircleFitMethod::Median => percentile(&radii, 0.5)?,
    };
    Ok(SliceFit { n_kept, diameter: Some(2.0 * radius) })
}

/// Diameter of one slab, if measurable. See [`fit_slice`].
pub fn fit_slice_diameter(
    points: &[Vector2<f64>],
    dbscan_enabled: bool,
    dbscan_params: &DbscanParams,
    fit: &CircleFitParams,
    min_points: usize,
) -> Result<Option<f64>> {
    Ok(fit_slice(points, dbscan_enabled, dbscan_params, fit, min_points)?.diameter)
}

/// Aggregated per-slice diameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub predicted: f64,
    pub mean: f64,
    pub std: f64,
    /// Per-input retention flags, aligned with the diameter list.
    pub retained: Vec<bool>,
}

/// Combines per-slice diameters into a final estimate.
///
/// `OneStd` keeps diameters within one population standard deviation of the
/// mean (all of them when the deviation is zero) and averages the survivors;
/// the survivor set is never empty. `PlainMean` averages everything.
pub fn aggregate(diameters: &[f64], mode: Aggregation) -> Result<AggregateResult> {
    if diameters.is_empty() {
        return Err(Error::InvalidParameter("aggregate needs at least one diameter".into()));
    }
    let n = diameters.len() as f64;
    let mean = diameters.iter().sum::<f64>() / n;
    let var = diameters.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let retained: Vec<bool> = match mode {
        Aggregation::PlainMean => vec![true; diameters.len()],
        Aggregation::OneStd => {
            if std == 0.0 {
                vec![true; diameters.len()]
            } else {
                diameters.iter().map(|d| (d - mean).abs() <= std).collect()
            }
        }
    };
    let kept: Vec<f64> = diameters
        .iter()
        .zip(&retained)
        .filter(|(_, &r)| r)
        .map(|(&d, _)| d)
        .collect();
    debug_assert!(!kept.is_empty(), "at least the diameter nearest the mean survives");
    let predicted = kept.iter().sum::<f64>() / kept.len() as f64;
    Ok(AggregateResult { predicted, mean, std, retained })
}

/// Runs the measurement pipeline on an already back-projected cloud.
pub fn measure_cloud(cloud: &PointCloud, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud("measurement needs a non-empty cloud".into()));
    }
    let filtered = if config.sor_enabled {
        sor_filter(cloud, &config.sor)?
    } else {
        cloud.clone()
    };
    let axis = principal_axis(&filtered.points)?;
    let centers = slice_centers(axis.t_min, axis.t_max, &config.slicing)?;

    // Project every point once; slabs then select by axial coordinate.
    let axial: Vec<f64> = filtered
        .points
        .iter()
        .map(|p| (p - axis.centroid).dot(&axis.direction))
        .collect();
    let planar = project_to_slice_plane(&filtered.points, &axis);

    let half = config.slicing.slab_half_thickness;
    let mut slices: Vec<SliceMeasurement> = centers
        .par_iter()
        .enumerate()
        .map(|(index, &t_center)| {
            let members: Vec<Vector2<f64>> = axial
                .iter()
                .zip(&planar)
                .filter(|(&t, _)| (t - t_center).abs() <= half)
                .map(|(_, &q)| q)
                .collect();
            let fit = fit_slice(
                &members,
                config.dbscan_enabled,
                &config.dbscan,
                &config.circle_fit,
                config.slicing.min_slice_points,
            )?;
            Ok(SliceMeasurement {
                index,
                t_center,
                n_raw: members.len(),
                n_kept: fit.n_kept,
                diameter: fit.diameter,
                retained: false,
            })
        })
        .collect::<Result<_>>()?;

    let valid: Vec<(usize, f64)> = slices
        .iter()
        .filter_map(|s| s.diameter.map(|d| (s.index, d)))
        .collect();
    if valid.is_empty() {
        return Err(Error::NoValidSlices(format!(
            "none of the {} slices kept at least {} points",
            slices.len(),
            config.slicing.min_slice_points
        )));
    }
    let diameters: Vec<f64> = valid.iter().map(|&(_, d)| d).collect();
    let agg = aggregate(&diameters, config.aggregation)?;
    for (&(slice_idx, _), &kept) in valid.iter().zip(&agg.retained) {
        slices[slice_idx].retained = kept;
    }
    let estimate = StalkEstimate {
        n_valid: valid.len(),
        mean_diameter: agg.mean,
        std_diameter: agg.std,
        predicted_diameter: agg.predicted,
        slices,
    };
    Ok(PipelineOutput { estimate, axis, filtered_cloud: filtered })
}

fn resize_rgb(rgb: &RgbImage, width: u32, height: u32) -> RgbImage {
    let mut data = Vec::with_capacity(width as usize * height as usize);
    for r in 0..height as usize {
        let src_r = r * rgb.height as usize / height as usize;
        for c in 0..width as usize {
            let src_c = c * rgb.width as usize / width as usize;
            data.push(rgb.data[src_r * rgb.width as usize + src_c]);
        }
    }
    RgbImage { width, height, data }
}

/// Full measurement from raster inputs.
///
/// The mask (and color image, when given) is resampled to the depth
/// resolution first; segmentation usually runs on the higher-resolution
/// color stream.
pub fn measure_stalk(
    depth: &DepthImage,
    mask: &BinaryMask,
    rgb: Option<&RgbImage>,
    intrinsics: &CameraIntrinsics,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    let mask = if mask.width != depth.width || mask.height != depth.height {
        resize_mask(mask, depth.width, depth.height)?
    } else {
        mask.clone()
    };
    let resized_rgb = rgb.map(|img| {
        if img.width != depth.width || img.height != depth.height {
            resize_rgb(img, depth.width, depth.height)
        } else {
            img.clone()
        }
    });
    let cloud = backproject(depth, &mask, intrinsics, resized_rgb.as_ref())?;
    measure_cloud(&cloud, config)
}
