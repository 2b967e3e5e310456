//! Synthetic stalk generation and depth rendering.
//!
//! Ground-truth clouds are sampled from a curved tube of known radius and
//! rendered through the pinhole model into depth and mask rasters, giving
//! end-to-end tests and benchmarks an exact reference diameter.

use nalgebra::Vector3;

use crate::camera::{BinaryMask, CameraIntrinsics, DepthImage, PointCloud};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Which part of the tube surface is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    /// The whole surface, as if scanned from all sides.
    Full,
    /// Only the camera-facing half: surface normals with a negative z
    /// component, matching a single depth camera looking along +z.
    Half,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Full => "full",
            Visibility::Half => "half",
        }
    }
}

impl std::str::FromStr for Visibility {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Visibility::Full),
            "half" => Ok(Visibility::Half),
            other => Err(Error::InvalidParameter(format!(
                "visibility must be \"full\" or \"half\", got {other:?}"
            ))),
        }
    }
}

/// Generation parameters for one synthetic stalk. Lengths in meters; the
/// stalk lives directly in the camera frame (x right, y down, z forward).
#[derive(Debug, Clone, PartialEq)]
pub struct StalkSpec {
    /// Tube radius.
    pub radius: f64,
    /// Arc length of the centerline.
    pub length: f64,
    /// Chord direction from base to tip; need not be unit length.
    pub axis_direction: Vector3<f64>,
    /// Centerline start point.
    pub base_point: Vector3<f64>,
    /// Peak lateral deviation of the bowed centerline from the chord.
    pub curvature: f64,
    pub visibility: Visibility,
    pub points_per_ring: usize,
    pub rings: usize,
    /// Isotropic Gaussian noise applied to every surface point.
    pub noise_sigma: f64,
    /// Fraction of points replaced by interior clutter, in [0, 1).
    pub outlier_fraction: f64,
    /// Outliers land within this distance of the centerline.
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for StalkSpec {
    fn default() -> Self {
        Self {
            radius: 0.0075,
            length: 0.25,
            axis_direction: Vector3::new(0.0, 1.0, 0.0),
            base_point: Vector3::new(0.0, -0.125, 0.35),
            curvature: 0.0,
            visibility: Visibility::Full,
            points_per_ring: 48,
            rings: 160,
            noise_sigma: 0.0,
            outlier_fraction: 0.0,
            outlier_scale: 0.005,
            seed: 0,
        }
    }
}

impl StalkSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.radius.is_finite() || self.radius <= 0.0 {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if !self.length.is_finite() || self.length <= 0.0 {
            return bad(format!("length must be positive, got {}", self.length));
        }
        if self.axis_direction.norm() == 0.0 || !self.axis_direction.norm().is_finite() {
            return bad("axis direction must be a nonzero finite vector".into());
        }
        if !self.curvature.is_finite() || self.curvature < 0.0 {
            return bad(format!("curvature must be non-negative, got {}", self.curvature));
        }
        if self.points_per_ring < 3 {
            return bad("points_per_ring must be at least 3".into());
        }
        if self.rings < 2 {
            return bad("rings must be at least 2".into());
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return bad(format!("noise sigma must be non-negative, got {}", self.noise_sigma));
        }
        if !self.outlier_fraction.is_finite() || !(0.0..1.0).contains(&self.outlier_fraction) {
            return bad(format!(
                "outlier fraction must lie in [0, 1), got {}",
                self.outlier_fraction
            ));
        }
        if !self.outlier_scale.is_finite() || self.outlier_scale < 0.0 {
            return bad(format!("outlier scale must be non-negative, got {}", self.outlier_scale));
        }
        Ok(())
    }

    pub fn true_diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Ground-truth chord direction, unit length.
    pub fn true_axis(&self) -> Vector3<f64> {
        self.axis_direction.normalize()
    }
}

/// A unit vector orthogonal to `dir`: the cross product with the basis axis
/// least aligned with `dir` (lowest index on ties).
fn lateral_of(dir: &Vector3<f64>) -> Vector3<f64> {
    let alignments = [dir.x.abs(), dir.y.abs(), dir.z.abs()];
    let mut least = 0;
    for i in 1..3 {
        if alignments[i] < alignments[least] {
            least = i;
        }
    }
    let mut basis = Vector3::zeros();
    basis[least] = 1.0;
    dir.cross(&basis).normalize()
}

/// Centerline position at parameter `s` in [0, 1]: the chord from base to
/// base + length * direction, bowed sideways by curvature * 4 s (1 - s).
pub fn centerline(spec: &StalkSpec, s: f64) -> Vector3<f64> {
    let dir = spec.axis_direction.normalize();
    let lat = lateral_of(&dir);
    spec.base_point + dir * (spec.length * s) + lat * (spec.curvature * 4.0 * s * (1.0 - s))
}

/// Non-normalized centerline tangent d/ds.
fn centerline_tangent(spec: &StalkSpec, s: f64) -> Vector3<f64> {
    let dir = spec.axis_direction.normalize();
    let lat = lateral_of(&dir);
    dir * spec.length + lat * (spec.curvature * 4.0 * (1.0 - 2.0 * s))
}

const ARC_TABLE_SEGMENTS: usize = 4096;

/// Ring parameters: `rings` values of `s` spaced at equal arc length along
/// the centerline, endpoints included.
pub fn ring_parameters(spec: &StalkSpec) -> Vec<f64> {
    // Cumulative arc length by trapezoidal integration of |tangent|.
    let n = ARC_TABLE_SEGMENTS;
    let ds = 1.0 / n as f64;
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    let mut prev_speed = centerline_tangent(spec, 0.0).norm();
    for i in 1..=n {
        let s = i as f64 * ds;
        let speed = centerline_tangent(spec, s).norm();
        let last = *cumulative.last().expect("non-empty");
        cumulative.push(last + 0.5 * (prev_speed + speed) * ds);
        prev_speed = speed;
    }
    let total = *cumulative.last().expect("non-empty");
    (0..spec.rings)
        .map(|j| {
            let target = total * j as f64 / (spec.rings - 1) as f64;
            // Invert the monotone table with linear interpolation.
            let idx = cumulative.partition_point(|&a| a < target);
            if idx == 0 {
                return 0.0;
            }
            if idx > n {
                return 1.0;
            }
            let (a0, a1) = (cumulative[idx - 1], cumulative[idx]);
            let frac = if a1 > a0 { (target - a0) / (a1 - a0) } else { 0.0 };
            ((idx - 1) as f64 + frac) * ds
        })
        .collect()
}

/// Samples the tube surface.
///
/// Points are generated ring by ring in angle order; hidden points are
/// dropped under half visibility. Gaussian noise is then added to every
/// point, and finally ceil(outlier_fraction * n) points, chosen without
/// replacement, are replaced by interior clutter at distance
/// u * outlier_scale (u uniform in (0, 1]) from their ring center. All
/// randomness comes from one seeded generator, so equal specs produce
/// identical clouds.
pub fn sample_stalk_cloud(spec: &StalkSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let params = ring_parameters(spec);

    let mut points = Vec::with_capacity(spec.rings * spec.points_per_ring);
    let mut ring_of_point = Vec::with_capacity(points.capacity());
    for (j, &s) in params.iter().enumerate() {
        let center = centerline(spec, s);
        let tangent = centerline_tangent(spec, s).normalize();
        let r1 = lateral_of(&tangent);
        let r2 = tangent.cross(&r1);
        for k in 0..spec.points_per_ring {
            let angle = k as f64 / spec.points_per_ring as f64 * std::f64::consts::TAU;
            let normal = r1 * angle.cos() + r2 * angle.sin();
            if spec.visibility == Visibility::Half && normal.z >= 0.0 {
                continue;
            }
            points.push(center + normal * spec.radius);
            ring_of_point.push(j);
        }
    }
    if points.is_empty() {
        return Err(Error::DegenerateGeometry(
            "no surface point is visible; check visibility and axis direction".into(),
        ));
    }

    if spec.noise_sigma > 0.0 {
        for p in &mut points {
            *p += Vector3::new(rng.next_normal(), rng.next_normal(), rng.next_normal())
                * spec.noise_sigma;
        }
    }

    let n_outliers = (spec.outlier_fraction * points.len() as f64).ceil() as usize;
    if n_outliers > 0 {
        let chosen = rng.choose_indices(points.len(), n_outliers);
        for i in chosen {
            let s = params[ring_of_point[i]];
            let center = centerline(spec, s);
            let tangent = centerline_tangent(spec, s).normalize();
            let r1 = lateral_of(&tangent);
            let r2 = tangent.cross(&r1);
            let angle = rng.next_f64() * std::f64::consts::TAU;
            let u = 1.0 - rng.next_f64();
            let radial = r1 * angle.cos() + r2 * angle.sin();
            points[i] = center + radial * (u * spec.outlier_scale);
        }
    }

    Ok(PointCloud::from_points(points))
}

/// Projects a cloud through the pinhole model into a depth image and mask.
///
/// Each point lands on the nearest pixel; the smallest depth per pixel wins,
/// earlier points winning exact ties. Depth is stored as
/// round(z / depth_scale); points quantizing to zero or beyond 16 bits are
/// dropped as unrepresentable.
pub fn render_cloud(
    points: &[Vector3<f64>],
    intrinsics: &CameraIntrinsics,
) -> Result<(DepthImage, BinaryMask)> {
    intrinsics.validate()?;
    let (w, h) = (intrinsics.width as usize, intrinsics.height as usize);
    let mut z_buffer = vec![f64::INFINITY; w * h];
    let mut raw = vec![0u16; w * h];
    for p in points {
        if p.z <= 0.0 {
            continue;
        }
        let u = (intrinsics.fx * p.x / p.z + intrinsics.cx).round();
        let v = (intrinsics.fy * p.y / p.z + intrinsics.cy).round();
        if u < 0.0 || v < 0.0 || u >= w as f64 || v >= h as f64 {
            continue;
        }
        let q = (p.z / intrinsics.depth_scale).round();
        if q < 1.0 || q > f64::from(u16::MAX) {
            continue;
        }
        let idx = v as usize * w + u as usize;
        if p.z < z_buffer[idx] {
            z_buffer[idx] = p.z;
            raw[idx] = q as u16;
        }
    }
    let mask_data: Vec<bool> = z_buffer.iter().map(|&z| z.is_finite()).collect();
    if !mask_data.iter().any(|&m| m) {
        return Err(Error::InvalidParameter(
            "no point projects into the image; move the stalk in front of the camera".into(),
        ));
    }
    let depth = DepthImage::new(intrinsics.width, intrinsics.height, raw)?;
    let mask = BinaryMask::new(intrinsics.width, intrinsics.height, mask_data)?;
    Ok((depth, mask))
}

/// A rendered stalk with its ground truth.
#[derive(Debug, Clone)]
pub struct RenderedSample {
    pub depth: DepthImage,
    pub mask: BinaryMask,
    pub intrinsics: CameraIntrinsics,
    /// Ground-truth diameter, meters.
    pub true_diameter: f64,
    pub spec: StalkSpec,
}

/// Samples and renders one stalk. The pose moves the stalk rigidly in the
/// camera frame before projection; pass the identity to render it where the
/// spec placed it.
pub fn render_stalk(
    spec: &StalkSpec,
    intrinsics: &CameraIntrinsics,
    pose: &nalgebra::Isometry3<f64>,
) -> Result<RenderedSample> {
    let cloud = sample_stalk_cloud(spec)?;
    let posed: Vec<Vector3<f64>> =
        cloud.points.iter().map(|p| pose.transform_point(&(*p).into()).coords).collect();
    let (depth, mask) = render_cloud(&posed, intrinsics)?;
    Ok(RenderedSample {
        depth,
        mask,
        intrinsics: intrinsics.clone(),
        true_diameter: spec.true_diameter(),
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::backproject;
    use crate::slicing::{measure_stalk, PipelineConfig};

    fn test_intrinsics() -> CameraIntrinsics {
        CameraIntrinsics {
            width: 640,
            height: 480,
            fx: 600.0,
            fy: 600.0,
            cx: 320.0,
            cy: 240.0,
            depth_scale: 1e-4,
        }
    }

    #[test]
    fn centerline_hits_endpoints_and_bow_peak() {
        let spec = StalkSpec { curvature: 0.02, ..Default::default() };
        let base = centerline(&spec, 0.0);
        let tip = centerline(&spec, 1.0);
        assert!((base - spec.base_point).norm() < 1e-15);
        let chord_end = spec.base_point + spec.axis_direction.normalize() * spec.length;
        assert!((tip - chord_end).norm() < 1e-15);
        let mid = centerline(&spec, 0.5);
        let chord_mid = (base + tip) / 2.0;
        assert!(((mid - chord_mid).norm() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn straight_rings_are_uniform_and_span_the_length() {
        let spec = StalkSpec { rings: 50, ..Default::default() };
        let params = ring_parameters(&spec);
        assert_eq!(params.len(), 50);
        assert_eq!(params[0], 0.0);
        assert_eq!(params[49], 1.0);
        let centers: Vec<Vector3<f64>> = params.iter().map(|&s| centerline(&spec, s)).collect();
        let first_gap = (centers[1] - centers[0]).norm();
        for w in centers.windows(2) {
            let gap = (w[1] - w[0]).norm();
            assert!((gap - first_gap).abs() < 1e-9, "gap {gap} vs {first_gap}");
        }
        assert!(((centers[49] - centers[0]).norm() - spec.length).abs() < 1e-12);
    }

    #[test]
    fn curved_rings_keep_equal_arc_spacing() {
        let spec = StalkSpec { curvature: 0.03, rings: 80, ..Default::default() };
        let params = ring_parameters(&spec);
        let centers: Vec<Vector3<f64>> = params.iter().map(|&s| centerline(&spec, s)).collect();
        let gaps: Vec<f64> = centers.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        let (min, max) = gaps
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &g| (lo.min(g), hi.max(g)));
        // Chords of equal-length arcs on a gentle bow agree to the arc-table
        // interpolation error.
        assert!(max / min < 1.0 + 1e-4, "chord spread {min}..{max}");
    }

    #[test]
    fn noiseless_points_sit_exactly_on_the_tube() {
        let spec = StalkSpec { rings: 20, points_per_ring: 16, ..Default::default() };
        let cloud = sample_stalk_cloud(&spec).unwrap();
        assert_eq!(cloud.len(), 20 * 16);
        let params = ring_parameters(&spec);
        for (i, p) in cloud.points.iter().enumerate() {
            let center = centerline(&spec, params[i / 16]);
            assert!(
                ((p - center).norm() - spec.radius).abs() < 1e-12,
                "point {i} off the tube"
            );
        }
    }

    #[test]
    fn same_seed_reproduces_different_seed_varies() {
        let spec = StalkSpec {
            noise_sigma: 0.0005,
            outlier_fraction: 0.1,
            seed: 7,
            ..Default::default()
        };
        let a = sample_stalk_cloud(&spec).unwrap();
        let b = sample_stalk_cloud(&spec).unwrap();
        assert_eq!(a.points, b.points);
        let c = sample_stalk_cloud(&StalkSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn outlier_substitution_replaces_the_exact_count() {
        let spec = StalkSpec {
            rings: 30,
            points_per_ring: 20,
            outlier_fraction: 0.2,
            outlier_scale: 0.5 * 0.0075,
            seed: 3,
            ..Default::default()
        };
        let cloud = sample_stalk_cloud(&spec).unwrap();
        let params = ring_parameters(&spec);
        let centers: Vec<Vector3<f64>> = params.iter().map(|&s| centerline(&spec, s)).collect();
        // Surface points sit at exactly one radius from their own ring
        // center and no closer to any other; interior clutter sits well
        // inside.
        let n_inside = cloud
            .points
            .iter()
            .filter(|p| {
                centers.iter().map(|c| (*p - c).norm()).fold(f64::INFINITY, f64::min)
                    < 0.9 * spec.radius
            })
            .count();
        let expected = (0.2_f64 * 600.0).ceil() as usize;
        assert_eq!(n_inside, expected);
    }

    #[test]
    fn half_visibility_keeps_the_camera_facing_side() {
        let spec = StalkSpec {
            visibility: Visibility::Half,
            rings: 10,
            points_per_ring: 32,
            ..Default::default()
        };
        let cloud = sample_stalk_cloud(&spec).unwrap();
        assert!(cloud.len() >= 10 * 32 / 2 - 10);
        assert!(cloud.len() <= 10 * 32 / 2 + 10);
        let params = ring_parameters(&spec);
        let centers: Vec<Vector3<f64>> = params.iter().map(|&s| centerline(&spec, s)).collect();
        for p in &cloud.points {
            let nearest = centers
                .iter()
                .min_by(|a, b| (p - *a).norm().total_cmp(&(p - *b).norm()))
                .unwrap();
            // Grazing points have normal.z just below zero; adding the ring
            // center can absorb the offset to exactly 0.0, never above.
            assert!((p - nearest).z <= 0.0, "back-facing point survived");
        }
    }

    #[test]
    fn render_quantizes_depth_and_marks_touched_pixels() {
        let intr = test_intrinsics();
        let points = vec![
            Vector3::new(0.0, 0.0, 0.35),
            Vector3::new(0.0, 0.0, 0.30),  // same pixel, nearer: wins
            Vector3::new(0.05, 0.02, 0.40),
            Vector3::new(0.0, 0.0, -1.0),  // behind the camera: dropped
            Vector3::new(10.0, 0.0, 0.35), // projects outside: dropped
        ];
        let (depth, mask) = render_cloud(&points, &intr).unwrap();
        assert_eq!(depth.at(320, 240), 3000);
        assert!(mask.at(320, 240));
        let u = (600.0 * 0.05 / 0.40 + 320.0_f64).round() as u32;
        let v = (600.0 * 0.02 / 0.40 + 240.0_f64).round() as u32;
        assert_eq!(depth.at(u, v), 4000);
        assert_eq!(mask.data.iter().filter(|&&m| m).count(), 2);
    }

    #[test]
    fn render_rejects_fully_invisible_clouds() {
        let intr = test_intrinsics();
        assert!(render_cloud(&[Vector3::new(0.0, 0.0, -0.5)], &intr).is_err());
    }

    #[test]
    fn principal_ray_point_lands_on_the_center_pixel() {
        let intr = CameraIntrinsics { depth_scale: 0.001, ..test_intrinsics() };
        let (depth, mask) = render_cloud(&[Vector3::new(0.0, 0.0, 0.30)], &intr).unwrap();
        assert_eq!(depth.at(320, 240), 300);
        assert!(mask.at(320, 240));
        assert_eq!(mask.data.iter().filter(|&&m| m).count(), 1);
    }

    #[test]
    fn render_backproject_round_trip_stays_within_quantization() {
        let spec = StalkSpec { rings: 40, points_per_ring: 24, ..Default::default() };
        let intr = CameraIntrinsics {
            width: 320,
            height: 240,
            fx: 300.0,
            fy: 300.0,
            cx: 160.0,
            cy: 120.0,
            depth_scale: 1e-4,
        };
        let original = sample_stalk_cloud(&spec).unwrap();
        let (depth, mask) = render_cloud(&original.points, &intr).unwrap();
        let recovered = backproject(&depth, &mask, &intr, None).unwrap();
        assert_eq!(recovered.len(), mask.data.iter().filter(|&&m| m).count());
        // Pixel rounding moves a point by at most half a pixel at z ~ 0.36,
        // about 0.6 mm; depth quantization adds 0.05 mm.
        for p in &recovered.points {
            let nearest = original
                .points
                .iter()
                .map(|q| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1.5e-3, "recovered point strayed {nearest}");
        }
    }

    #[test]
    fn rendered_stalk_measures_to_its_true_diameter() {
        // Splat rendering drops back-surface points that collide with front
        // ones and adds pixel-rounding jitter. A fine camera keeps the
        // losses rare, and the median fit is second-order robust to the
        // remaining centroid shift, so the clean regime recovers the truth.
        let spec = StalkSpec {
            seed: 11,
            axis_direction: Vector3::new(0.25, 1.0, 0.35),
            base_point: Vector3::new(0.0, 0.0, 0.40)
                - Vector3::new(0.25, 1.0, 0.35).normalize() * 0.125,
            ..Default::default()
        };
        let intr = CameraIntrinsics {
            width: 1280,
            height: 960,
            fx: 1200.0,
            fy: 1200.0,
            cx: 640.0,
            cy: 480.0,
            depth_scale: 1e-4,
        };
        let sample = render_stalk(&spec, &intr, &nalgebra::Isometry3::identity()).unwrap();
        let mut config = PipelineConfig::default();
        config.dbscan_enabled = false;
        config.circle_fit.method = crate::slicing::CircleFitMethod::Median;
        let out =
            measure_stalk(&sample.depth, &sample.mask, None, &sample.intrinsics, &config).unwrap();
        let d = out.estimate.predicted_diameter;
        let rel = (d - sample.true_diameter).abs() / sample.true_diameter;
        assert!(rel < 0.01, "diameter {d} vs {} ({rel:.4} rel)", sample.true_diameter);
        let dot = out.axis.direction.dot(&spec.true_axis()).abs();
        assert!(dot > (0.5_f64.to_radians()).cos(), "axis strayed: |dot| {dot}");
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        let ok = StalkSpec::default();
        assert!(ok.validate().is_ok());
        assert!(StalkSpec { radius: 0.0, ..ok.clone() }.validate().is_err());
        assert!(StalkSpec { rings: 1, ..ok.clone() }.validate().is_err());
        assert!(StalkSpec { outlier_fraction: 1.0, ..ok.clone() }.validate().is_err());
        assert!(StalkSpec { axis_direction: Vector3::zeros(), ..ok.clone() }
            .validate()
            .is_err());
        assert!("sideways".parse::<Visibility>().is_err());
        assert_eq!("half".parse::<Visibility>().unwrap(), Visibility::Half);
    }
}
