//! Checks for the identifying conditions and the supportive evidence around
//! an ATT estimate: covariate overlap between the pre cohort and the treated,
//! calibration on post-period standard-treated patients (a negative control),
//! and dose transport on the treated under their proton plans.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{fixed_mean_difference_ci, BootstrapConfig};
use crate::glm::{predict_risk, ModelFit, PlanSource};
use crate::stats::{exact_sum, mean};
use crate::types::{Organ, PatientRecord, Period, Treatment, TumorLocation};

pub const SMD_THRESHOLD: f64 = 0.5;
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapVerdict {
    NoFlags,
    StochasticConcern,
    StructuralViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateOverlap {
    pub covariate: String,
    pub pre_range: [f64; 2],
    pub post_range: [f64; 2],
    /// Share of post-treated values outside `pre_range`.
    pub outside_fraction: f64,
    /// Standardized mean difference, post minus pre over the pooled sd.
    /// `None` when both groups are constant.
    pub smd: Option<f64>,
}

impl CovariateOverlap {
    fn flagged(&self) -> bool {
        self.outside_fraction > 0.0 || self.smd.is_some_and(|d| d.abs() > SMD_THRESHOLD)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub covariates: Vec<CovariateOverlap>,
    /// Category levels present among the treated but absent from the pre
    /// cohort, e.g. `tumor_location=larynx`.
    pub absent_categories: Vec<String>,
    pub verdict: OverlapVerdict,
}

fn covariate_values(records: &[PatientRecord]) -> Vec<(String, Vec<f64>)> {
    let mut out = vec![(
        "baseline_dysphagia".to_string(),
        records.iter().map(|r| f64::from(r.baseline_dysphagia)).collect(),
    )];
    for organ in Organ::ALL {
        out.push((
            organ.column().to_string(),
            records.iter().map(|r| r.photon_doses.get(organ)).collect(),
        ));
    }
    out
}

fn range(v: &[f64]) -> [f64; 2] {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [lo, hi]
}

fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    exact_sum(v.iter().map(|x| (x - m) * (x - m))) / (v.len() - 1) as f64
}

fn smd(pre: &[f64], post: &[f64]) -> Option<f64> {
    let diff = mean(post) - mean(pre);
    let pooled = ((variance(pre) + variance(post)) / 2.0).sqrt();
    // constant groups at different values are caught by outside_fraction
    (pooled > 0.0).then(|| diff / pooled)
}

/// Univariable overlap of the treated with the pre cohort over the
/// covariates the outcome model uses.
///
/// Continuous values outside the pre range and large mean differences are
/// stochastic concerns; a category level never seen before treatment is a
/// structural violation because the model cannot predict for it at all.
pub fn positivity_report(pre: &[PatientRecord], post_treated: &[PatientRecord]) -> Result<OverlapReport> {
    if pre.is_empty() || post_treated.is_empty() {
        return Err(Error::Empty("overlap needs both pre and treated records".into()));
    }
    let pre_values = covariate_values(pre);
    let post_values = covariate_values(post_treated);
    let covariates: Vec<CovariateOverlap> = pre_values
        .iter()
        .zip(&post_values)
        .map(|((name, a), (_, b))| {
            let pre_range = range(a);
            let outside = b.iter().filter(|&&x| x < pre_range[0] || x > pre_range[1]).count();
            CovariateOverlap {
                covariate: name.clone(),
                pre_range,
                post_range: range(b),
                outside_fraction: outside as f64 / b.len() as f64,
                smd: smd(a, b),
            }
        })
        .collect();

    let mut absent_categories = Vec::new();
    for loc in TumorLocation::ALL {
        let seen = |rs: &[PatientRecord]| rs.iter().any(|r| r.tumor_location == loc);
        if seen(post_treated) && !seen(pre) {
            absent_categories.push(format!("tumor_location={loc}"));
        }
    }
    for level in [0u8, 1] {
        let seen = |rs: &[PatientRecord]| rs.iter().any(|r| r.baseline_dysphagia == level);
        if seen(post_treated) && !seen(pre) {
            absent_categories.push(format!("baseline_dysphagia={level}"));
        }
    }

    let verdict = if !absent_categories.is_empty() {
        OverlapVerdict::StructuralViolation
    } else if covariates.iter().any(CovariateOverlap::flagged) {
        OverlapVerdict::StochasticConcern
    } else {
        OverlapVerdict::NoFlags
    };
    Ok(OverlapReport {
        covariates,
        absent_categories,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub bin_mean_pred: f64,
    pub bin_obs_rate: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub n: usize,
    pub plan_source: PlanSource,
    pub mean_observed: f64,
    pub mean_predicted: f64,
    pub mean_difference: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub curve: Vec<CalibrationBin>,
    /// `None` when the group has a single outcome class.
    pub auroc: Option<f64>,
}

fn calibration_report(
    records: &[PatientRecord],
    predictions: Vec<f64>,
    plan_source: PlanSource,
    bootstrap: Option<&BootstrapConfig>,
) -> Result<CalibrationReport> {
    let outcomes: Vec<u8> = records.iter().map(|r| r.outcome).collect();
    let n = outcomes.len();
    let mean_observed = outcomes.iter().filter(|&&y| y == 1).count() as f64 / n as f64;
    let mean_predicted = mean(&predictions);
    let (ci_low, ci_high) = match bootstrap {
        Some(cfg) => {
            let (lo, hi) = fixed_mean_difference_ci(&outcomes, &predictions, cfg)?;
            (Some(lo), Some(hi))
        }
        None => (None, None),
    };
    Ok(CalibrationReport {
        n,
        plan_source,
        mean_observed,
        mean_predicted,
        mean_difference: mean_observed - mean_predicted,
        ci_low,
        ci_high,
        curve: calibration_curve(&predictions, &outcomes, DEFAULT_BINS.min(n))?,
        // reported for completeness; discrimination says nothing about validity
        auroc: auroc(&predictions, &outcomes).ok(),
    })
}

/// Calibration of the pre-period model on post-period standard-treated
/// patients, for whom the counterfactual is observed. A mean difference far
/// from zero points at a transportability or drift problem.
pub fn negative_control_check(
    post_standard: &[PatientRecord],
    fit: &ModelFit,
    bootstrap: Option<&BootstrapConfig>,
) -> Result<CalibrationReport> {
    if post_standard.is_empty() {
        return Err(Error::Empty("no post-period standard-treated patients".into()));
    }
    if let Some(r) = post_standard
        .iter()
        .find(|r| r.period != Period::Post || r.treatment != Treatment::Standard)
    {
        return Err(Error::InvalidInput(format!(
            "negative control needs post-period standard-treated records; {} is not",
            r.id
        )));
    }
    let p = predict_risk(fit, post_standard, PlanSource::Photon)?;
    calibration_report(post_standard, p, PlanSource::Photon, bootstrap)
}

/// The model applied to the treated patients' own proton plans. Valid
/// evidence only if risk depends on the delivered dose and not on the
/// technique that delivered it.
pub fn dose_transport_check(
    post_treated: &[PatientRecord],
    fit: &ModelFit,
    bootstrap: Option<&BootstrapConfig>,
) -> Result<CalibrationReport> {
    if post_treated.is_empty() {
        return Err(Error::Empty("no treated patients".into()));
    }
    if let Some(r) = post_treated.iter().find(|r| !r.is_treated()) {
        return Err(Error::InvalidInput(format!(
            "dose transport needs target-treated records; {} is not",
            r.id
        )));
    }
    let p = predict_risk(fit, post_treated, PlanSource::Proton)?;
    calibration_report(post_treated, p, PlanSource::Proton, bootstrap)
}

/// Area under the ROC curve as the Mann-Whitney statistic: the share of
/// (event, non-event) pairs ranked correctly, ties counting one half.
pub fn auroc(predictions: &[f64], outcomes: &[u8]) -> Result<f64> {
    if predictions.len() != outcomes.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} outcomes",
            predictions.len(),
            outcomes.len()
        )));
    }
    let n_pos = outcomes.iter().filter(|&&y| y == 1).count();
    let n_neg = outcomes.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuroc);
    }
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[a].total_cmp(&predictions[b]));

    // midrank sum over events
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && predictions[order[j + 1]] == predictions[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let events = order[i..=j].iter().filter(|&&k| outcomes[k] == 1).count();
        rank_sum += midrank * events as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Equal-frequency calibration curve. Observations are ordered by
/// prediction (stable in input order) and cut into `n_bins` groups of
/// near-equal size; a cut never separates equal predictions, so tied
/// predictions can merge bins and fewer than `n_bins` points may result.
pub fn calibration_curve(predictions: &[f64], outcomes: &[u8], n_bins: usize) -> Result<Vec<CalibrationBin>> {
    let n = predictions.len();
    if outcomes.len() != n {
        return Err(Error::Dimension(format!(
            "{n} predictions for {} outcomes",
            outcomes.len()
        )));
    }
    if n_bins == 0 {
        return Err(Error::config("n_bins", "must be at least 1"));
    }
    if n < n_bins {
        return Err(Error::TooFewForBins { n, n_bins });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| predictions[a].total_cmp(&predictions[b]));

    let mut curve = Vec::new();
    let mut start = 0;
    for b in 1..=n_bins {
        let mut end = b * n / n_bins;
        if end <= start {
            continue;
        }
        while end < n && predictions[order[end]] == predictions[order[end - 1]] {
            end += 1;
        }
        let idx = &order[start..end];
        let count = idx.len();
        let events = idx.iter().filter(|&&k| outcomes[k] == 1).count();
        curve.push(CalibrationBin {
            bin_mean_pred: exact_sum(idx.iter().map(|&k| predictions[k])) / count as f64,
            bin_obs_rate: events as f64 / count as f64,
            count,
        });
        start = end;
        if start == n {
            break;
        }
    }
    Ok(curve)
}

/// Writes a curve as CSV with header `bin_mean_pred,bin_obs_rate,count`.
pub fn write_curve_csv<W: Write>(curve: &[CalibrationBin], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin_mean_pred", "bin_obs_rate", "count"])?;
    for bin in curve {
        w.write_record([
            bin.bin_mean_pred.to_string(),
            bin.bin_obs_rate.to_string(),
            bin.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
