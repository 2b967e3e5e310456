//! Accuracy metrics and component ablation.

use rayon::prelude::*;

use crate::camera::{BinaryMask, CameraIntrinsics, DepthImage};
use crate::slicing::{measure_stalk, Aggregation, CircleFitMethod, PipelineConfig};
use crate::{Error, Result};

/// One prediction next to its ground truth, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub id: String,
    pub predicted: f64,
    pub actual: f64,
}

/// Error statistics over a set of prediction pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub n: usize,
    /// Mean absolute error, meters.
    pub mae: f64,
    /// Mean absolute percentage error, percent.
    pub mape: f64,
    /// Root mean squared error, meters.
    pub rmse: f64,
    /// Coefficient of determination; absent for fewer than two pairs or
    /// constant ground truth.
    pub r2: Option<f64>,
}

fn check_lengths(predicted: &[f64], actual: &[f64]) -> Result<()> {
    if predicted.is_empty() {
        return Err(Error::InvalidParameter("metrics need at least one pair".into()));
    }
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} ground-truth values",
            predicted.len(),
            actual.len()
        )));
    }
    Ok(())
}

pub fn mae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let sum: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(sum / predicted.len() as f64)
}

/// Mean absolute percentage error in percent; every ground-truth value must
/// be nonzero.
pub fn mape(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    if actual.iter().any(|&a| a == 0.0) {
        return Err(Error::InvalidParameter(
            "percentage error is undefined for zero ground truth".into(),
        ));
    }
    let sum: f64 = predicted.iter().zip(actual).map(|(p, a)| ((p - a) / a).abs()).sum();
    Ok(100.0 * sum / predicted.len() as f64)
}

pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let sum: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sum / predicted.len() as f64).sqrt())
}

/// Coefficient of determination 1 - SSres / SStot. Defined only for two or
/// more pairs with non-constant ground truth.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    if predicted.len() < 2 {
        return Err(Error::InvalidParameter(
            "coefficient of determination needs at least two pairs".into(),
        ));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::InvalidParameter(
            "coefficient of determination is undefined for constant ground truth".into(),
        ));
    }
    let ss_res: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Computes every metric over the pairs. The coefficient of determination
/// is omitted (not an error) when it is undefined.
pub fn evaluate_pairs(pairs: &[SamplePair]) -> Result<EvaluationReport> {
    let predicted: Vec<f64> = pairs.iter().map(|p| p.predicted).collect();
    let actual: Vec<f64> = pairs.iter().map(|p| p.actual).collect();
    Ok(EvaluationReport {
        n: pairs.len(),
        mae: mae(&predicted, &actual)?,
        mape: mape(&predicted, &actual)?,
        rmse: rmse(&predicted, &actual)?,
        r2: r_squared(&predicted, &actual).ok(),
    })
}

/// Raster inputs plus ground truth for one stalk.
#[derive(Debug, Clone)]
pub struct AblationSample {
    pub id: String,
    pub depth: DepthImage,
    pub mask: BinaryMask,
    pub intrinsics: CameraIntrinsics,
    /// Ground-truth diameter, meters.
    pub actual: f64,
}

/// A named pipeline variant for the ablation study.
#[derive(Debug, Clone)]
pub struct AblationVariant {
    pub name: String,
    pub config: PipelineConfig,
}

pub const ABLATION_CONFIG_NAMES: [&str; 6] =
    ["baseline", "no_1std", "no_dbscan", "no_sor", "fit_mean", "fit_median"];

/// The standard ablation set: the base configuration plus five variants
/// that each disable or swap exactly one component.
pub fn standard_variants(base: &PipelineConfig) -> Vec<AblationVariant> {
    let variant = |name: &str, edit: &dyn Fn(&mut PipelineConfig)| {
        let mut config = base.clone();
        edit(&mut config);
        AblationVariant { name: name.to_string(), config }
    };
    vec![
        variant("baseline", &|_| {}),
        variant("no_1std", &|c| c.aggregation = Aggregation::PlainMean),
        variant("no_dbscan", &|c| c.dbscan_enabled = false),
        variant("no_sor", &|c| c.sor_enabled = false),
        variant("fit_mean", &|c| c.circle_fit.method = CircleFitMethod::Mean),
        variant("fit_median", &|c| c.circle_fit.method = CircleFitMethod::Median),
    ]
}

/// Metrics for one ablation configuration.
#[derive(Debug, Clone)]
pub struct AblationConfigResult {
    pub name: String,
    pub report: EvaluationReport,
    pub pairs: Vec<SamplePair>,
    /// Samples this configuration failed to measure.
    pub n_failed: usize,
}

/// One pipeline component ranked by how much its removal hurts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRank {
    pub component: String,
    /// 1 = most important.
    pub rank: usize,
    /// Error increase when the component is removed, meters. May be
    /// negative for components that do not pay off on the dataset.
    pub delta_mae: f64,
}

/// Ranks components by error increase over the baseline.
///
/// The circle-fit component is credited with the worse of the two
/// replacement fits, since swapping the fit is the only way to remove it.
pub fn component_ranking(mae_by_config: &[(String, f64)]) -> Result<Vec<ComponentRank>> {
    let lookup = |name: &str| -> Result<f64> {
        mae_by_config
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, m)| m)
            .ok_or_else(|| Error::InvalidParameter(format!("ranking needs configuration {name}")))
    };
    let baseline = lookup("baseline")?;
    let mut ranks = vec![
        ComponentRank {
            component: "circle_fit".into(),
            rank: 0,
            delta_mae: lookup("fit_mean")?.max(lookup("fit_median")?) - baseline,
        },
        ComponentRank {
            component: "one_std".into(),
            rank: 0,
            delta_mae: lookup("no_1std")? - baseline,
        },
        ComponentRank {
            component: "dbscan".into(),
            rank: 0,
            delta_mae: lookup("no_dbscan")? - baseline,
        },
        ComponentRank { component: "sor".into(), rank: 0, delta_mae: lookup("no_sor")? - baseline },
    ];
    ranks.sort_by(|a, b| {
        b.delta_mae.total_cmp(&a.delta_mae).then_with(|| a.component.cmp(&b.component))
    });
    for (i, r) in ranks.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(ranks)
}

/// Full ablation outcome.
#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub configs: Vec<AblationConfigResult>,
    pub ranking: Vec<ComponentRank>,
}

/// Measures every sample under every requested variant and ranks the
/// components. Samples a variant fails on are dropped from that variant's
/// metrics (with a warning); a variant with no successful sample is an
/// error. The ranking is produced only when the standard set runs intact.
pub fn run_ablation(
    samples: &[AblationSample],
    variants: &[AblationVariant],
) -> Result<AblationOutcome> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("ablation needs at least one sample".into()));
    }
    if variants.is_empty() {
        return Err(Error::InvalidParameter("ablation needs at least one configuration".into()));
    }
    let mut configs = Vec::with_capacity(variants.len());
    for variant in variants {
        variant.config.validate()?;
        let measured: Vec<(usize, Result<f64>)> = samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let out = measure_stalk(&s.depth, &s.mask, None, &s.intrinsics, &variant.config);
                (i, out.map(|o| o.estimate.predicted_diameter))
            })
            .collect();
        let mut pairs = Vec::new();
        let mut n_failed = 0usize;
        for (i, outcome) in measured {
            match outcome {
                Ok(predicted) => pairs.push(SamplePair {
                    id: samples[i].id.clone(),
                    predicted,
                    actual: samples[i].actual,
                }),
                Err(e) => {
                    n_failed += 1;
                    log::warn!(
                        "configuration {} failed on sample {}: {e}",
                        variant.name,
                        samples[i].id
                    );
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::NoValidSlices(format!(
                "configuration {} measured no sample successfully",
                variant.name
            )));
        }
        let report = evaluate_pairs(&pairs)?;
        configs.push(AblationConfigResult { name: variant.name.clone(), report, pairs, n_failed });
    }
    let mae_by_config: Vec<(String, f64)> =
        configs.iter().map(|c| (c.name.clone(), c.report.mae)).collect();
    let ranking = if ABLATION_CONFIG_NAMES
        .iter()
        .all(|name| mae_by_config.iter().any(|(n, _)| n == name))
    {
        component_ranking(&mae_by_config)?
    } else {
        Vec::new()
    };
    Ok(AblationOutcome { configs, ranking })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn fixture_pairs() -> Vec<SamplePair> {
        let rows = [
            ("rgb0", 0.01517, 0.01504),
            ("rgb1", 0.01161, 0.01286),
            ("rgb2", 0.01134, 0.01220),
            ("rgb3", 0.01561, 0.01568),
            ("rgb4", 0.01155, 0.01267),
            ("rgb5", 0.01516, 0.01550),
            ("rgb6", 0.01311, 0.01304),
            ("rgb7", 0.01530, 0.01451),
            ("rgb8", 0.01498, 0.01469),
            ("rgb9", 0.01323, 0.01275),
        ];
        rows.iter()
            .map(|&(id, predicted, actual)| SamplePair { id: id.into(), predicted, actual })
            .collect()
    }

    #[test]
    fn rmse_of_two_known_errors() {
        // Errors of 3 mm and 4 mm.
        let predicted = [0.013, 0.016];
        let actual = [0.010, 0.012];
        let r = rmse(&predicted, &actual).unwrap();
        assert!((r - 12.5e-6_f64.sqrt()).abs() < 1e-15, "rmse {r}");
        let m = mae(&predicted, &actual).unwrap();
        assert!((m - 0.0035).abs() < 1e-15);
        assert!(m <= r);
    }

    #[test]
    fn mape_of_ten_percent_error() {
        let m = mape(&[0.011], &[0.010]).unwrap();
        assert!((m - 10.0).abs() < 1e-12, "mape {m}");
    }

    #[test]
    fn r_squared_hand_example() {
        let actual = [1.0, 2.0, 3.0];
        let predicted = [1.1, 1.9, 3.2];
        let r2 = r_squared(&predicted, &actual).unwrap();
        assert!((r2 - 0.97).abs() < 1e-12, "r2 {r2}");
        assert_eq!(r_squared(&actual, &actual).unwrap(), 1.0);
    }

    #[test]
    fn r_squared_undefined_cases() {
        assert!(r_squared(&[1.0], &[1.0]).is_err());
        assert!(r_squared(&[1.0, 2.0], &[3.0, 3.0]).is_err());
        let report = evaluate_pairs(&[SamplePair {
            id: "only".into(),
            predicted: 0.011,
            actual: 0.010,
        }])
        .unwrap();
        assert_eq!(report.r2, None);
        assert!((report.mape - 10.0).abs() < 1e-12);
    }

    #[test]
    fn metric_preconditions() {
        assert!(mae(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mape(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn fixture_metrics_are_frozen() {
        let report = evaluate_pairs(&fixture_pairs()).unwrap();
        assert_eq!(report.n, 10);
        assert!((report.mae - 0.000540).abs() < 1e-12, "mae {}", report.mae);
        assert!((report.rmse - 0.0006809845813232488).abs() < 1e-12, "rmse {}", report.rmse);
        assert!((report.mape - 4.083352898336259).abs() < 1e-9, "mape {}", report.mape);
        let r2 = report.r2.unwrap();
        assert!((r2 - 0.7021664127667551).abs() < 1e-12, "r2 {r2}");
    }

    #[test]
    fn mae_never_exceeds_rmse() {
        let mut rng = SplitMix64::new(91);
        for _ in 0..1000 {
            let n = 1 + rng.next_index(50);
            let actual: Vec<f64> = (0..n).map(|_| rng.next_range(0.005, 0.05)).collect();
            let predicted: Vec<f64> =
                actual.iter().map(|a| a + rng.next_range(-0.01, 0.01)).collect();
            let m = mae(&predicted, &actual).unwrap();
            let r = rmse(&predicted, &actual).unwrap();
            assert!(m <= r + 1e-18, "mae {m} > rmse {r}");
        }
    }

    #[test]
    fn standard_variants_differ_in_one_component() {
        let base = PipelineConfig::default();
        let variants = standard_variants(&base);
        let names: Vec<&str> = variants.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ABLATION_CONFIG_NAMES);
        assert_eq!(variants[0].config, base);
        assert_eq!(variants[1].config.aggregation, Aggregation::PlainMean);
        assert!(!variants[2].config.dbscan_enabled);
        assert!(!variants[3].config.sor_enabled);
        assert_eq!(variants[4].config.circle_fit.method, CircleFitMethod::Mean);
        assert_eq!(variants[5].config.circle_fit.method, CircleFitMethod::Median);
        // Each variant touches exactly one knob: restoring it reproduces
        // the baseline.
        for v in &variants[1..] {
            let mut restored = v.config.clone();
            match v.name.as_str() {
                "no_1std" => restored.aggregation = base.aggregation,
                "no_dbscan" => restored.dbscan_enabled = base.dbscan_enabled,
                "no_sor" => restored.sor_enabled = base.sor_enabled,
                "fit_mean" | "fit_median" => {
                    restored.circle_fit.method = base.circle_fit.method
                }
                other => panic!("unexpected variant {other}"),
            }
            assert_eq!(restored, base, "variant {} touched extra fields", v.name);
        }
    }

    #[test]
    fn ranking_uses_worse_fit_replacement_and_sorts_by_delta() {
        let maes = vec![
            ("baseline".to_string(), 0.000539),
            ("no_1std".to_string(), 0.000602),
            ("no_dbscan".to_string(), 0.000877),
            ("no_sor".to_string(), 0.000537),
            ("fit_mean".to_string(), 0.006499),
            ("fit_median".to_string(), 0.001210),
        ];
        let ranking = component_ranking(&maes).unwrap();
        let order: Vec<(&str, usize)> =
            ranking.iter().map(|r| (r.component.as_str(), r.rank)).collect();
        assert_eq!(
            order,
            vec![("circle_fit", 1), ("dbscan", 2), ("one_std", 3), ("sor", 4)]
        );
        assert!((ranking[0].delta_mae - 0.005960).abs() < 1e-12);
        assert!((ranking[1].delta_mae - 0.000338).abs() < 1e-12);
        assert!((ranking[2].delta_mae - 0.000063).abs() < 1e-12);
        // Removal may even help slightly; the delta stays signed.
        assert!((ranking[3].delta_mae + 0.000002).abs() < 1e-12);
    }

    #[test]
    fn ranking_requires_the_standard_names() {
        let maes = vec![("baseline".to_string(), 1.0)];
        assert!(component_ranking(&maes).is_err());
    }
}
