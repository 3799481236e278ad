//! ATT estimation: observed outcomes of the target-treated minus the
//! outcome model's counterfactual standard-treatment predictions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{replicate_rng, Execution};
use crate::glm::{fit_records, predict_risk, FitOptions, ModelFit, ModelSpec, PlanSource};
use crate::stats::{exact_sum, quantile_sorted, sample_sd, sorted};
use crate::types::PatientRecord;

/// Standard normal 97.5% quantile.
const Z_975: f64 = 1.959_963_984_540_054;
/// Largest tolerated share of failed bootstrap replicates.
pub const MAX_BOOTSTRAP_FAILURE_RATE: f64 = 0.05;
pub const MIN_BOOTSTRAP_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectScale {
    #[serde(rename = "rd")]
    RiskDifference,
    #[serde(rename = "rr")]
    RiskRatio,
    #[serde(rename = "or")]
    OddsRatio,
}

impl EffectScale {
    pub const ALL: [EffectScale; 3] = [
        EffectScale::RiskDifference,
        EffectScale::RiskRatio,
        EffectScale::OddsRatio,
    ];

    pub fn short(self) -> &'static str {
        match self {
            EffectScale::RiskDifference => "rd",
            EffectScale::RiskRatio => "rr",
            EffectScale::OddsRatio => "or",
        }
    }
}

impl fmt::Display for EffectScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for EffectScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rd" | "risk_difference" => Ok(EffectScale::RiskDifference),
            "rr" | "risk_ratio" => Ok(EffectScale::RiskRatio),
            "or" | "odds_ratio" => Ok(EffectScale::OddsRatio),
            _ => Err(Error::config(
                "scale",
                format!("unknown scale `{s}` (expected rd, rr or or)"),
            )),
        }
    }
}

/// Effect on `scale` from the mean observed outcome and the mean
/// counterfactual prediction.
pub fn effect(scale: EffectScale, mean_observed: f64, mean_predicted: f64) -> Result<f64> {
    let undefined = |reason: &str| Error::UndefinedScale {
        scale: scale.to_string(),
        reason: reason.to_string(),
    };
    match scale {
        EffectScale::RiskDifference => Ok(mean_observed - mean_predicted),
        EffectScale::RiskRatio => {
            if mean_predicted <= 0.0 {
                return Err(undefined("mean predicted risk is 0"));
            }
            Ok(mean_observed / mean_predicted)
        }
        EffectScale::OddsRatio => {
            if mean_observed <= 0.0 || mean_observed >= 1.0 {
                return Err(undefined("observed event rate is 0 or 1"));
            }
            if mean_predicted <= 0.0 || mean_predicted >= 1.0 {
                return Err(undefined("mean predicted risk is 0 or 1"));
            }
            let odds = |p: f64| p / (1.0 - p);
            Ok(odds(mean_observed) / odds(mean_predicted))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    /// Resample the treated sample only; the model is held fixed.
    FixedModel,
    /// Resample the pre cohort (refitting the model) and the treated sample.
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    /// 2.5% and 97.5% type-7 quantiles of the replicates.
    #[default]
    Percentile,
    /// Point estimate +/- 1.96 replicate standard deviations.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_replicates: usize,
    pub seed: u64,
    pub mode: BootstrapMode,
    pub interval: IntervalKind,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_replicates: 2000,
            seed: 0,
            mode: BootstrapMode::Full,
            interval: IntervalKind::Percentile,
            execution: Execution::Parallel,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_replicates < MIN_BOOTSTRAP_REPLICATES {
            return Err(Error::config(
                "n_replicates",
                format!("at least {MIN_BOOTSTRAP_REPLICATES} replicates are required"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttEstimate {
    pub scale: EffectScale,
    pub point: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_treated: usize,
    pub mean_observed: f64,
    pub mean_predicted: f64,
    pub bootstrap: Option<BootstrapConfig>,
    /// Replicates dropped because the refit or the effect was undefined.
    #[serde(default)]
    pub bootstrap_failures: usize,
}

impl AttEstimate {
    pub fn covers(&self, value: f64) -> Option<bool> {
        Some(self.ci_low? <= value && value <= self.ci_high?)
    }
}

fn mean_outcome(records: &[PatientRecord]) -> f64 {
    let events = records.iter().filter(|r| r.outcome == 1).count();
    events as f64 / records.len() as f64
}

fn mean_of(values: &[f64]) -> f64 {
    exact_sum(values.iter().copied()) / values.len() as f64
}

/// Point estimate of the ATT among `post_treated`.
pub fn estimate_att(post_treated: &[PatientRecord], fit: &ModelFit, scale: EffectScale) -> Result<AttEstimate> {
    if post_treated.is_empty() {
        return Err(Error::EstimandUndefined("no treated patients".into()));
    }
    if let Some(r) = post_treated.iter().find(|r| !r.is_treated()) {
        return Err(Error::EstimandUndefined(format!(
            "record {} did not receive the target treatment",
            r.id
        )));
    }
    let predicted = predict_risk(fit, post_treated, PlanSource::Photon)?;
    let mean_observed = mean_outcome(post_treated);
    let mean_predicted = mean_of(&predicted);
    Ok(AttEstimate {
        scale,
        point: effect(scale, mean_observed, mean_predicted)?,
        ci_low: None,
        ci_high: None,
        n_treated: post_treated.len(),
        mean_observed,
        mean_predicted,
        bootstrap: None,
        bootstrap_failures: 0,
    })
}

/// Inputs shared by the bootstrap and the sensitivity analysis.
#[derive(Debug, Clone, Copy)]
pub struct StudyData<'a> {
    pub pre: &'a [PatientRecord],
    pub post_treated: &'a [PatientRecord],
}

fn resample(records: &[PatientRecord], rng: &mut impl Rng) -> Vec<PatientRecord> {
    let n = records.len();
    (0..n)
        .map(|_| records[rng.random_range(0..n)].clone())
        .collect::<Vec<_>>()
}

/// One replicate's (mean observed, mean predicted), or `None` on failure.
fn replicate_means(
    data: &StudyData<'_>,
    fit: &ModelFit,
    fixed_predictions: &[f64],
    config: &BootstrapConfig,
    fit_options: &FitOptions,
    index: usize,
) -> Option<(f64, f64)> {
    let mut rng = replicate_rng(config.seed, index as u64);
    match config.mode {
        BootstrapMode::FixedModel => {
            let n = data.post_treated.len();
            let mut events = 0usize;
            let mut preds = Vec::with_capacity(n);
            for _ in 0..n {
                let k = rng.random_range(0..n);
                events += usize::from(data.post_treated[k].outcome);
                preds.push(fixed_predictions[k]);
            }
            Some((events as f64 / n as f64, mean_of(&preds)))
        }
        BootstrapMode::Full => {
            let pre = resample(data.pre, &mut rng);
            let treated = resample(data.post_treated, &mut rng);
            let refit = fit_records(&pre, &fit.spec, fit_options).ok()?;
            let preds = predict_risk(&refit, &treated, PlanSource::Photon).ok()?;
            Some((mean_outcome(&treated), mean_of(&preds)))
        }
    }
}

/// ATT on each requested scale with bootstrap intervals. Replicates are
/// shared across scales.
pub fn bootstrap_att(
    data: &StudyData<'_>,
    fit: &ModelFit,
    scales: &[EffectScale],
    config: &BootstrapConfig,
    fit_options: &FitOptions,
) -> Result<Vec<AttEstimate>> {
    config.validate()?;
    let points: Vec<AttEstimate> = scales
        .iter()
        .map(|&s| estimate_att(data.post_treated, fit, s))
        .collect::<Result<_>>()?;
    let fixed_predictions = match config.mode {
        BootstrapMode::FixedModel => predict_risk(fit, data.post_treated, PlanSource::Photon)?,
        BootstrapMode::Full => {
            if data.pre.is_empty() {
                return Err(Error::Empty("full bootstrap needs the pre cohort".into()));
            }
            Vec::new()
        }
    };

    let reps = config.execution.map_indexed(config.n_replicates, |r| {
        replicate_means(data, fit, &fixed_predictions, config, fit_options, r)
    });

    let total = config.n_replicates;
    points
        .into_iter()
        .map(|mut est| {
            let values: Vec<f64> = reps
                .iter()
                .filter_map(|m| m.and_then(|(o, p)| effect(est.scale, o, p).ok()))
                .collect();
            let failed = total - values.len();
            if failed as f64 > MAX_BOOTSTRAP_FAILURE_RATE * total as f64 {
                return Err(Error::UnstableBootstrap { failed, total });
            }
            let (lo, hi) = interval(est.point, &values, config.interval);
            est.ci_low = Some(lo);
            est.ci_high = Some(hi);
            est.bootstrap = Some(*config);
            est.bootstrap_failures = failed;
            Ok(est)
        })
        .collect()
}

/// Single-scale convenience wrapper around [`bootstrap_att`].
pub fn bootstrap_ci(
    data: &StudyData<'_>,
    fit: &ModelFit,
    scale: EffectScale,
    config: &BootstrapConfig,
    fit_options: &FitOptions,
) -> Result<AttEstimate> {
    Ok(bootstrap_att(data, fit, &[scale], config, fit_options)?.remove(0))
}

fn interval(point: f64, replicates: &[f64], kind: IntervalKind) -> (f64, f64) {
    match kind {
        IntervalKind::Percentile => {
            let s = sorted(replicates);
            let lo = quantile_sorted(&s, 0.025);
            let hi = quantile_sorted(&s, 0.975);
            // the reported interval always brackets the point estimate
            (lo.min(point), hi.max(point))
        }
        IntervalKind::Normal => {
            let half = Z_975 * sample_sd(replicates);
            (point - half, point + half)
        }
    }
}

/// Bootstrap interval for a mean difference `outcome - prediction` with the
/// predictions held fixed. Used for calibration-in-the-large.
pub fn fixed_mean_difference_ci(outcomes: &[u8], predictions: &[f64], config: &BootstrapConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let n = outcomes.len();
    if n == 0 || predictions.len() != n {
        return Err(Error::Empty("no observations for the bootstrap".into()));
    }
    let diffs: Vec<f64> = outcomes
        .iter()
        .zip(predictions)
        .map(|(&y, p)| f64::from(y) - p)
        .collect();
    let point = mean_of(&diffs);
    let reps = config.execution.map_indexed(config.n_replicates, |r| {
        let mut rng = replicate_rng(config.seed, r as u64);
        let sample: Vec<f64> = (0..n).map(|_| diffs[rng.random_range(0..n)]).collect();
        mean_of(&sample)
    });
    Ok(interval(point, &reps, config.interval))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub label: String,
    pub spec: Vec<String>,
    pub estimate: Option<AttEstimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub scale: EffectScale,
    pub rows: Vec<SensitivityRow>,
    /// Largest pairwise difference between successful point estimates.
    pub spread: Option<f64>,
}

/// Refits each model variant on the pre cohort and re-estimates the ATT.
/// Per-variant failures are recorded in the row.
pub fn sensitivity_analysis(
    data: &StudyData<'_>,
    variants: &[(String, ModelSpec)],
    scale: EffectScale,
    bootstrap: Option<&BootstrapConfig>,
    fit_options: &FitOptions,
) -> Result<SensitivityTable> {
    if variants.len() < 2 {
        return Err(Error::config(
            "spec_variants",
            "at least two model variants are required",
        ));
    }
    let rows: Vec<SensitivityRow> = variants
        .iter()
        .map(|(label, spec)| {
            let result = fit_records(data.pre, spec, fit_options).and_then(|fit| {
                if !fit.converged {
                    return Err(Error::NotConverged { n_iter: fit.n_iter });
                }
                match bootstrap {
                    Some(cfg) => bootstrap_ci(data, &fit, scale, cfg, fit_options),
                    None => estimate_att(data.post_treated, &fit, scale),
                }
            });
            let (estimate, error) = match result {
                Ok(e) => (Some(e), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SensitivityRow {
                label: label.clone(),
                spec: spec.column_names(),
                estimate,
                error,
            }
        })
        .collect();
    let points: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.estimate.as_ref().map(|e| e.point))
        .collect();
    let spread = if points.is_empty() {
        None
    } else {
        let max = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = points.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max - min)
    };
    Ok(SensitivityTable { scale, rows, spread })
}
