//! Command-line surface for the stalk measurement pipeline.
//!
//! Exit codes: 0 success, 1 usage or validation problem, 2 measurement
//! failure on degenerate input (empty cloud, no usable slices, ...).

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use stalk_gauge::axis::axis_segment;
use stalk_gauge::camera::{CameraIntrinsics, PointCloud};
use stalk_gauge::evaluation::{
    evaluate_pairs, run_ablation, standard_variants, AblationSample, ABLATION_CONFIG_NAMES,
};
use stalk_gauge::imageio::{
    load_depth, load_intrinsics, load_mask, load_rgb, save_depth, save_intrinsics, save_mask,
};
use stalk_gauge::ply::write_ply;
use stalk_gauge::report::{
    ablation_csv, evaluation_csv, fmt_sig, manifest_csv, ranking_csv, read_manifest_csv,
    read_pairs_csv, sha256_hex, slices_csv, summary_csv, svg_histogram, ManifestRow, RunManifest,
    RunStatus, SummaryRow,
};
use stalk_gauge::rng::{SplitMix64, GENERATOR_ID};
use stalk_gauge::slicing::{measure_stalk, Aggregation, CircleFitMethod, PipelineConfig};
use stalk_gauge::synth::{render_stalk, StalkSpec, Visibility};
use stalk_gauge::{Error, Result};

#[derive(Parser)]
#[command(
    name = "stalk-gauge",
    version,
    about = "Stalk diameter estimation from masked RGB-D captures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure one stalk from depth + mask + intrinsics and export CSV,
    /// PLY, and SVG artifacts.
    Process(Box<ProcessArgs>),
    /// Compute error metrics over a predicted/actual pair table.
    Evaluate(EvaluateArgs),
    /// Re-measure a dataset under component-ablated configurations.
    Ablate(AblateArgs),
    /// Generate synthetic stalk captures with known ground truth.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CircleFitArg {
    Percentile,
    Mean,
    Median,
}

impl From<CircleFitArg> for CircleFitMethod {
    fn from(v: CircleFitArg) -> Self {
        match v {
            CircleFitArg::Percentile => CircleFitMethod::Percentile,
            CircleFitArg::Mean => CircleFitMethod::Mean,
            CircleFitArg::Median => CircleFitMethod::Median,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggregationArg {
    OneStd,
    PlainMean,
}

impl From<AggregationArg> for Aggregation {
    fn from(v: AggregationArg) -> Self {
        match v {
            AggregationArg::OneStd => Aggregation::OneStd,
            AggregationArg::PlainMean => Aggregation::PlainMean,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VisibilityArg {
    Full,
    Half,
}

impl From<VisibilityArg> for Visibility {
    fn from(v: VisibilityArg) -> Self {
        match v {
            VisibilityArg::Full => Visibility::Full,
            VisibilityArg::Half => Visibility::Half,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DepthFormat {
    Png,
    Pgm,
}

/// Configuration knobs shared by `process` and the ablation base config.
#[derive(Args, Default)]
struct ConfigOverrides {
    /// Pipeline configuration JSON (flat object, all keys optional).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Disable statistical outlier removal.
    #[arg(long)]
    no_sor: bool,
    /// Disable per-slice density clustering.
    #[arg(long)]
    no_dbscan: bool,
    #[arg(long)]
    sor_k_neighbors: Option<usize>,
    #[arg(long)]
    sor_std_ratio: Option<f64>,
    /// Clustering radius in meters.
    #[arg(long)]
    dbscan_eps: Option<f64>,
    #[arg(long)]
    dbscan_min_samples: Option<usize>,
    #[arg(long)]
    n_slices: Option<usize>,
    /// Fraction of the axial extent trimmed from each end, in [0, 0.5).
    #[arg(long)]
    trim_fraction: Option<f64>,
    /// Half of the slab thickness in meters.
    #[arg(long)]
    slab_half_thickness: Option<f64>,
    #[arg(long)]
    min_slice_points: Option<usize>,
    #[arg(long, value_enum)]
    circle_fit: Option<CircleFitArg>,
    #[arg(long)]
    percentile_q: Option<f64>,
    #[arg(long, value_enum)]
    aggregation: Option<AggregationArg>,
}

impl ConfigOverrides {
    fn effective_config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_json_str(&std::fs::read_to_string(path)?)?,
            None => PipelineConfig::default(),
        };
        if self.no_sor {
            config.sor_enabled = false;
        }
        if self.no_dbscan {
            config.dbscan_enabled = false;
        }
        if let Some(v) = self.sor_k_neighbors {
            config.sor.k_neighbors = v;
        }
        if let Some(v) = self.sor_std_ratio {
            config.sor.std_ratio = v;
        }
        if let Some(v) = self.dbscan_eps {
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
        if let Some(v) = self.slab_half_thickness {
            config.slicing.slab_half_thickness = v;
        }
        if let Some(v) = self.min_slice_points {
            config.slicing.min_slice_points = v;
        }
        if let Some(v) = self.circle_fit {
            config.circle_fit.method = v.into();
        }
        if let Some(v) = self.percentile_q {
            config.circle_fit.percentile_q = v;
        }
        if let Some(v) = self.aggregation {
            config.aggregation = v.into();
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct ProcessArgs {
    /// 16-bit depth image (.png or ASCII .pgm).
    #[arg(long, required_unless_present = "print_config")]
    depth: Option<PathBuf>,
    /// Foreground mask image; resampled to the depth resolution if needed.
    #[arg(long, required_unless_present = "print_config")]
    mask: Option<PathBuf>,
    /// Camera intrinsics JSON.
    #[arg(long, required_unless_present = "print_config")]
    intrinsics: Option<PathBuf>,
    /// Optional color image for colored cloud export.
    #[arg(long)]
    rgb: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Sample name in reports; defaults to the depth file stem.
    #[arg(long)]
    sample_id: Option<String>,
    /// Ground-truth diameter in meters, marked in the histogram and summary.
    #[arg(long)]
    ground_truth: Option<f64>,
    /// Print the effective configuration JSON and exit.
    #[arg(long)]
    print_config: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct EvaluateArgs {
    /// CSV with header sample_id,predicted_m,actual_m.
    #[arg(long)]
    pairs: PathBuf,
    /// Output metrics CSV.
    #[arg(long, default_value = "evaluation.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    /// Dataset directory containing manifest.csv, or the manifest path
    /// itself.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// JSON array of configuration names to run (default: all six).
    #[arg(long)]
    configs: Option<String>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of samples.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Fixed tube radius in millimeters.
    #[arg(long, conflicts_with = "radius_range_mm")]
    radius_mm: Option<f64>,
    /// Uniform radius range "MIN:MAX" in millimeters.
    #[arg(long)]
    radius_range_mm: Option<String>,
    #[arg(long, default_value_t = 250.0)]
    length_mm: f64,
    /// Peak sideways bow of the centerline in millimeters.
    #[arg(long, default_value_t = 0.0)]
    curvature_mm: f64,
    #[arg(long, value_enum, default_value_t = VisibilityArg::Full)]
    visibility: VisibilityArg,
    #[arg(long, default_value_t = 48)]
    points_per_ring: usize,
    #[arg(long, default_value_t = 160)]
    rings: usize,
    /// Gaussian surface noise sigma in millimeters.
    #[arg(long, default_value_t = 0.0)]
    noise_mm: f64,
    /// Fraction of points replaced by interior clutter, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    outlier_fraction: f64,
    /// Clutter lands within this distance of the centerline, millimeters.
    #[arg(long, default_value_t = 5.0)]
    outlier_scale_mm: f64,
    /// Fixed stalk direction "x,y,z"; random unit vectors otherwise.
    #[arg(long)]
    axis: Option<String>,
    /// Random directions satisfy |z component| >= this bound.
    #[arg(long, default_value_t = 0.1)]
    min_dir_z: f64,
    /// Distance from the camera to the stalk midpoint, meters.
    #[arg(long, default_value_t = 0.40)]
    distance_m: f64,
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 480)]
    height: u32,
    #[arg(long, default_value_t = 600.0)]
    fx: f64,
    #[arg(long, default_value_t = 600.0)]
    fy: f64,
    /// Meters per depth unit in the emitted 16-bit images.
    #[arg(long, default_value_t = 1e-4)]
    depth_scale: f64,
    #[arg(long, value_enum, default_value_t = DepthFormat::Png)]
    depth_format: DepthFormat,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return 1;
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Process(args) => cmd_process(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Ablate(args) => cmd_ablate(&args),
        Command::Synth(args) => cmd_synth(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_measurement_failure() {
                2
            } else {
                1
            }
        }
    }
}

/// STALK_GAUGE_THREADS pins the worker pool size; unset means the rayon
/// default.
fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("STALK_GAUGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("STALK_GAUGE_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("STALK_GAUGE_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot size the worker pool: {e}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_process(args: &ProcessArgs) -> Result<i32> {
    let config = args.overrides.effective_config()?;
    if args.print_config {
        print!("{}", config.to_json_string());
        return Ok(0);
    }
    let (depth_path, mask_path, intr_path) = match (&args.depth, &args.mask, &args.intrinsics) {
        (Some(d), Some(m), Some(i)) => (d, m, i),
        _ => unreachable!("clap requires the input paths unless --print-config"),
    };
    let depth = load_depth(depth_path)?;
    let mask = load_mask(mask_path)?;
    let intrinsics = load_intrinsics(intr_path)?;
    let rgb = args.rgb.as_deref().map(load_rgb).transpose()?;

    std::fs::create_dir_all(&args.out_dir)?;
    let sample_id = match &args.sample_id {
        Some(id) => id.clone(),
        None => depth_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sample".into()),
    };
    let config_json = config.to_json_string();
    let mut manifest = RunManifest {
        sample_id: sample_id.clone(),
        inputs: [Some(depth_path), Some(mask_path), Some(intr_path), args.rgb.as_ref()]
            .into_iter()
            .flatten()
            .map(|p| p.display().to_string())
            .collect(),
        config_sha256: sha256_hex(config_json.as_bytes()),
        outputs: Vec::new(),
        status: RunStatus::Ok,
        failure_reason: None,
    };

    let out = match measure_stalk(&depth, &mask, rgb.as_ref(), &intrinsics, &config) {
        Ok(out) => out,
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.failure_reason = Some(e.to_string());
            write_text(&args.out_dir.join("manifest.json"), &manifest.to_json())?;
            return Err(e);
        }
    };

    let estimate = &out.estimate;
    let targets = [
        ("slices.csv", slices_csv(&estimate.slices)),
        (
            "summary.csv",
            summary_csv(&SummaryRow {
                sample_id: &sample_id,
                estimate,
                axis: &out.axis,
                n_points_raw: mask.foreground_count(),
                n_points_filtered: out.filtered_cloud.len(),
                ground_truth: args.ground_truth,
            }),
        ),
        ("config.json", config_json),
    ];
    for (name, text) in &targets {
        write_text(&args.out_dir.join(name), text)?;
        manifest.outputs.push(name.to_string());
    }
    write_ply(&out.filtered_cloud, &args.out_dir.join("cloud.ply"))?;
    manifest.outputs.push("cloud.ply".into());
    let (seg_start, seg_end) = axis_segment(&out.axis);
    write_ply(&PointCloud::from_points(vec![seg_start, seg_end]), &args.out_dir.join("axis.ply"))?;
    manifest.outputs.push("axis.ply".into());
    let retained: Vec<f64> = estimate
        .slices
        .iter()
        .filter(|s| s.retained)
        .filter_map(|s| s.diameter)
        .collect();
    write_text(
        &args.out_dir.join("histogram.svg"),
        &svg_histogram(&retained, args.ground_truth)?,
    )?;
    manifest.outputs.push("histogram.svg".into());
    write_text(&args.out_dir.join("manifest.json"), &manifest.to_json())?;

    println!(
        "{sample_id}: predicted diameter {} m ({} of {} slices valid, {} points)",
        fmt_sig(estimate.predicted_diameter),
        estimate.n_valid,
        estimate.slices.len(),
        out.filtered_cloud.len()
    );
    Ok(0)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.pairs)?;
    let pairs = read_pairs_csv(&text)?;
    let report = evaluate_pairs(&pairs)?;
    write_text(&args.out, &evaluation_csv(&report))?;
    println!(
        "n={} mae_m={} mape_pct={} rmse_m={} r2={}",
        report.n,
        fmt_sig(report.mae),
        fmt_sig(report.mape),
        fmt_sig(report.rmse),
        report.r2.map(fmt_sig).unwrap_or_else(|| "undefined".into())
    );
    if report.r2.is_none() {
        eprintln!(
            "note: coefficient of determination needs at least two pairs with \
             non-constant ground truth"
        );
    }
    Ok(0)
}

fn cmd_ablate(args: &AblateArgs) -> Result<i32> {
    let (manifest_path, base_dir) = if args.dataset.is_dir() {
        (args.dataset.join("manifest.csv"), args.dataset.clone())
    } else {
        let base = args.dataset.parent().unwrap_or(Path::new(".")).to_path_buf();
        (args.dataset.clone(), base)
    };
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        Error::MalformedInput(format!("cannot read manifest {}: {e}", manifest_path.display()))
    })?;
    let entries = read_manifest_csv(&text, &base_dir)?;
    let samples: Vec<AblationSample> = entries
        .iter()
        .map(|e| {
            Ok(AblationSample {
                id: e.sample_id.clone(),
                depth: load_depth(&e.depth)?,
                mask: load_mask(&e.mask)?,
                intrinsics: load_intrinsics(&e.intrinsics)?,
                actual: e.true_diameter,
            })
        })
        .collect::<Result<_>>()?;

    let base = args.overrides.effective_config()?;
    let mut variants = standard_variants(&base);
    if let Some(raw) = &args.configs {
        let requested: Vec<String> = serde_json::from_str(raw).map_err(|e| {
            Error::InvalidParameter(format!("--configs must be a JSON array of names: {e}"))
        })?;
        for name in &requested {
            if !ABLATION_CONFIG_NAMES.contains(&name.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "unknown configuration {name:?}; choose from {}",
                    ABLATION_CONFIG_NAMES.join(", ")
                )));
            }
        }
        variants.retain(|v| requested.iter().any(|n| n == &v.name));
    }

    let outcome = run_ablation(&samples, &variants)?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_text(&args.out_dir.join("ablation.csv"), &ablation_csv(&outcome.configs))?;
    for c in &outcome.configs {
        println!(
            "{:<12} mae_m={} mape_pct={} rmse_m={} r2={}{}",
            c.name,
            fmt_sig(c.report.mae),
            fmt_sig(c.report.mape),
            fmt_sig(c.report.rmse),
            c.report.r2.map(fmt_sig).unwrap_or_else(|| "undefined".into()),
            if c.n_failed > 0 { format!(" ({} samples failed)", c.n_failed) } else { String::new() }
        );
    }
    if !outcome.ranking.is_empty() {
        write_text(&args.out_dir.join("ranking.csv"), &ranking_csv(&outcome.ranking))?;
        for r in &outcome.ranking {
            println!("rank {}: {:<10} delta_mae_m={}", r.rank, r.component, fmt_sig(r.delta_mae));
        }
    }
    Ok(0)
}

fn parse_radius_range(raw: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = raw.split(':').collect();
    let err = || {
        Error::InvalidParameter(format!(
            "--radius-range-mm must look like MIN:MAX with MIN <= MAX, got {raw:?}"
        ))
    };
    if parts.len() != 2 {
        return Err(err());
    }
    let lo: f64 = parts[0].parse().map_err(|_| err())?;
    let hi: f64 = parts[1].parse().map_err(|_| err())?;
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
        return Err(err());
    }
    Ok((lo, hi))
}

fn parse_axis(raw: &str) -> Result<Vector3<f64>> {
    let parts: Vec<&str> = raw.split(',').collect();
    let err = || Error::InvalidParameter(format!("--axis must look like x,y,z, got {raw:?}"));
    if parts.len() != 3 {
        return Err(err());
    }
    let x: f64 = parts[0].trim().parse().map_err(|_| err())?;
    let y: f64 = parts[1].trim().parse().map_err(|_| err())?;
    let z: f64 = parts[2].trim().parse().map_err(|_| err())?;
    let v = Vector3::new(x, y, z);
    if !v.norm().is_finite() || v.norm() == 0.0 {
        return Err(err());
    }
    Ok(v)
}

/// Random unit vector with |z| >= min_dir_z, by normalizing Gaussian
/// triples and rejecting shallow ones.
fn random_direction(rng: &mut SplitMix64, min_dir_z: f64) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.next_normal(), rng.next_normal(), rng.next_normal());
        let norm = v.norm();
        if norm < 1e-9 {
            continue;
        }
        let unit = v / norm;
        if unit.z.abs() >= min_dir_z {
            return unit;
        }
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    if args.n == 0 {
        return Err(Error::InvalidParameter("--n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&args.min_dir_z) {
        return Err(Error::InvalidParameter(format!(
            "--min-dir-z must lie in [0, 1], got {}",
            args.min_dir_z
        )));
    }
    let radius_range = match (&args.radius_mm, &args.radius_range_mm) {
        (Some(r), None) => (*r, *r),
        (None, Some(raw)) => parse_radius_range(raw)?,
        (None, None) => (7.5, 7.5),
        (Some(_), Some(_)) => unreachable!("clap rejects conflicting radius flags"),
    };
    let fixed_axis = args.axis.as_deref().map(parse_axis).transpose()?;
    let intrinsics = CameraIntrinsics {
        width: args.width,
        height: args.height,
        fx: args.fx,
        fy: args.fy,
        cx: args.width as f64 / 2.0,
        cy: args.height as f64 / 2.0,
        depth_scale: args.depth_scale,
    };
    intrinsics.validate()?;

    std::fs::create_dir_all(&args.out_dir)?;
    // One master stream drives all parameter draws and per-sample seeds, so
    // the whole dataset is a pure function of --seed.
    let mut master = SplitMix64::new(args.seed);
    let mut specs = Vec::with_capacity(args.n);
    for _ in 0..args.n {
        let radius = if radius_range.0 == radius_range.1 {
            radius_range.0 * 1e-3
        } else {
            master.next_range(radius_range.0, radius_range.1) * 1e-3
        };
        let direction = match fixed_axis {
            Some(v) => v,
            None => random_direction(&mut master, args.min_dir_z),
        };
        let length = args.length_mm * 1e-3;
        let midpoint = Vector3::new(0.0, 0.0, args.distance_m);
        let spec = StalkSpec {
            radius,
            length,
            axis_direction: direction,
            base_point: midpoint - direction * (length / 2.0),
            curvature: args.curvature_mm * 1e-3,
            visibility: args.visibility.into(),
            points_per_ring: args.points_per_ring,
            rings: args.rings,
            noise_sigma: args.noise_mm * 1e-3,
            outlier_fraction: args.outlier_fraction,
            outlier_scale: args.outlier_scale_mm * 1e-3,
            seed: master.next_u64(),
        };
        spec.validate()?;
        specs.push(spec);
    }

    let depth_name = match args.depth_format {
        DepthFormat::Png => "depth.png",
        DepthFormat::Pgm => "depth.pgm",
    };
    let pose = nalgebra::Isometry3::identity();
    let mut ids = Vec::with_capacity(args.n);
    for (i, spec) in specs.iter().enumerate() {
        let sample_id = format!("sample_{i:03}");
        let sample_dir = args.out_dir.join(&sample_id);
        std::fs::create_dir_all(&sample_dir)?;
        let rendered = render_stalk(spec, &intrinsics, &pose)?;
        save_depth(&rendered.depth, &sample_dir.join(depth_name))?;
        save_mask(&rendered.mask, &sample_dir.join("mask.png"))?;
        save_intrinsics(&intrinsics, &sample_dir.join("intrinsics.json"))?;
        ids.push(sample_id);
    }
    let paths: Vec<[String; 3]> = ids
        .iter()
        .map(|id| {
            [
                format!("{id}/{depth_name}"),
                format!("{id}/mask.png"),
                format!("{id}/intrinsics.json"),
            ]
        })
        .collect();
    let rows: Vec<ManifestRow> = ids
        .iter()
        .zip(&specs)
        .zip(&paths)
        .map(|((id, spec), [depth, mask, intr])| ManifestRow {
            sample_id: id,
            spec,
            depth,
            mask,
            intrinsics: intr,
            generator: GENERATOR_ID,
        })
        .collect();
    write_text(&args.out_dir.join("manifest.csv"), &manifest_csv(&rows))?;
    println!("wrote {} samples to {}", args.n, args.out_dir.display());
    Ok(0)
}
