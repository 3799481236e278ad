//! Monte Carlo lab: replicated generate, fit, estimate pipelines under
//! controlled violations of the identifying conditions.
//!
//! Consistency has no scenario. The generator enforces it, and breaking it
//! would leave the estimand undefined.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{negative_control_check, positivity_report, OverlapVerdict};
use crate::error::{Error, Result};
use crate::estimator::{bootstrap_ci, estimate_att, BootstrapConfig, EffectScale, StudyData};
use crate::exec::{child_seed, Execution};
use crate::glm::{fit_records, FitOptions, ModelSpec};
use crate::stats::{exact_sum, mean};
use crate::synth::{generate, GeneratorConfig, SupportTruncation, ViolationShift};
use crate::types::Organ;

/// Largest tolerated share of failed replicates in a scenario.
pub const MAX_REPLICATE_FAILURE_RATE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Baseline,
    TransportabilityDrift,
    IgnorabilityConfounder,
    PositivityTruncation,
    Misspecification,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Baseline,
        ScenarioKind::TransportabilityDrift,
        ScenarioKind::IgnorabilityConfounder,
        ScenarioKind::PositivityTruncation,
        ScenarioKind::Misspecification,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Baseline => "baseline",
            ScenarioKind::TransportabilityDrift => "transportability_drift",
            ScenarioKind::IgnorabilityConfounder => "ignorability_confounder",
            ScenarioKind::PositivityTruncation => "positivity_truncation",
            ScenarioKind::Misspecification => "misspecification",
        }
    }

    /// The shift used by the preset scenario of this kind.
    pub fn default_shift(self) -> ViolationShift {
        let neutral = ViolationShift::default();
        match self {
            ScenarioKind::Baseline => neutral,
            ScenarioKind::TransportabilityDrift => ViolationShift {
                secular_dose_drift: 5.0,
                ..neutral
            },
            ScenarioKind::IgnorabilityConfounder => ViolationShift {
                unmeasured_confounder_strength: 1.0,
                ..neutral
            },
            // A linear model extrapolates a linear truth without bias, so the
            // dose-response bends slightly above the cut to make the gap matter.
            ScenarioKind::PositivityTruncation => ViolationShift {
                support_truncation: Some(SupportTruncation {
                    organ: Organ::SuperiorPcm,
                    max_dose: 50.0,
                }),
                nonlinearity_amplitude: 0.25,
                ..neutral
            },
            ScenarioKind::Misspecification => ViolationShift {
                nonlinearity_amplitude: 3.0,
                ..neutral
            },
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "baseline" => ScenarioKind::Baseline,
            "transportability_drift" | "drift" => ScenarioKind::TransportabilityDrift,
            "ignorability_confounder" | "confounder" => ScenarioKind::IgnorabilityConfounder,
            "positivity_truncation" | "truncation" => ScenarioKind::PositivityTruncation,
            "misspecification" => ScenarioKind::Misspecification,
            _ => {
                let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
                return Err(Error::config(
                    "scenario",
                    format!("unknown scenario `{s}`; valid names: {}, all", names.join(", ")),
                ));
            }
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Distinguishes variants of one kind in a suite, e.g. two working models.
    pub label: String,
    pub shift: ViolationShift,
    pub n_replicates: usize,
    pub seed: u64,
    /// World size and everything but the shift and seed.
    pub generator: GeneratorConfig,
    /// Working model fitted in every replicate.
    pub spec: ModelSpec,
    /// Full or fixed-model bootstrap per replicate, for coverage.
    pub bootstrap: Option<BootstrapConfig>,
}

impl Scenario {
    pub fn preset(kind: ScenarioKind, seed: u64) -> Self {
        Scenario {
            kind,
            label: kind.as_str().to_string(),
            shift: kind.default_shift(),
            n_replicates: 500,
            seed,
            generator: GeneratorConfig::default(),
            spec: ModelSpec::default_spec(),
            bootstrap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_replicates == 0 {
            return Err(Error::config("n_replicates", "must be at least 1"));
        }
        if (self.kind == ScenarioKind::Baseline) != self.shift.is_neutral() {
            return Err(Error::config(
                "shift",
                "the baseline scenario, and only it, has an all-neutral shift",
            ));
        }
        if let Some(b) = &self.bootstrap {
            b.validate()?;
        }
        self.world_config(0).validate()
    }

    fn world_config(&self, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            seed,
            shift: self.shift,
            ..self.generator.clone()
        }
    }
}

/// One replicate of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub world_seed: u64,
    pub n_treated: usize,
    pub truth: f64,
    pub estimate: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// `None` when the world has no post-period standard-treated patients.
    pub nc_difference: Option<f64>,
    pub verdict: OverlapVerdict,
}

impl ReplicateOutcome {
    pub fn error(&self) -> f64 {
        self.estimate - self.truth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub index: usize,
    pub world_seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictFrequencies {
    pub no_flags: f64,
    pub stochastic_concern: f64,
    pub structural_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub label: String,
    pub kind: ScenarioKind,
    pub shift: ViolationShift,
    pub spec: Vec<String>,
    pub n_replicates: usize,
    pub n_succeeded: usize,
    pub failures: Vec<ReplicateFailure>,
    pub mean_truth: f64,
    pub mean_estimate: f64,
    /// Mean of estimate minus the replicate's own true ATT (risk difference).
    pub mean_bias: f64,
    /// Standard deviation of estimate minus truth across replicates.
    pub sd_error: f64,
    pub rmse: f64,
    /// Share of bootstrap intervals containing the truth.
    pub coverage: Option<f64>,
    pub mean_nc_difference: Option<f64>,
    pub nc_negative_fraction: Option<f64>,
    pub verdicts: VerdictFrequencies,
    pub replicates: Vec<ReplicateOutcome>,
}

fn run_replicate(
    scenario: &Scenario,
    index: usize,
    fit_options: &FitOptions,
) -> std::result::Result<ReplicateOutcome, ReplicateFailure> {
    let world_seed = child_seed(scenario.seed, index as u64);
    let fail = |reason: String| ReplicateFailure {
        index,
        world_seed,
        reason,
    };
    let run = || -> Result<ReplicateOutcome> {
        let world = generate(&scenario.world_config(world_seed))?;
        let treated = world.post_treated();
        let truth = world
            .true_att_rd()
            .ok_or_else(|| Error::EstimandUndefined("no treated patients".into()))?;
        let fit = fit_records(&world.pre.records, &scenario.spec, fit_options)?;
        if !fit.converged {
            return Err(Error::NotConverged { n_iter: fit.n_iter });
        }
        let est = match &scenario.bootstrap {
            Some(b) => {
                let cfg = BootstrapConfig {
                    seed: world_seed,
                    // replicates already run in parallel
                    execution: Execution::Sequential,
                    ..*b
                };
                let data = StudyData {
                    pre: &world.pre.records,
                    post_treated: &treated,
                };
                bootstrap_ci(&data, &fit, EffectScale::RiskDifference, &cfg, fit_options)?
            }
            None => estimate_att(&treated, &fit, EffectScale::RiskDifference)?,
        };
        let standard = world.post_standard();
        let nc_difference = if standard.is_empty() {
            None
        } else {
            Some(negative_control_check(&standard, &fit, None)?.mean_difference)
        };
        Ok(ReplicateOutcome {
            index,
            world_seed,
            n_treated: treated.len(),
            truth,
            estimate: est.point,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            nc_difference,
            verdict: positivity_report(&world.pre.records, &treated)?.verdict,
        })
    };
    run().map_err(|e| fail(e.to_string()))
}

fn fraction(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

fn summarize(
    scenario: &Scenario,
    results: Vec<std::result::Result<ReplicateOutcome, ReplicateFailure>>,
) -> Result<BiasReport> {
    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => replicates.push(o),
            Err(f) => failures.push(f),
        }
    }
    let total = scenario.n_replicates;
    if replicates.is_empty() || failures.len() as f64 > MAX_REPLICATE_FAILURE_RATE * total as f64 {
        return Err(Error::ScenarioFailed {
            name: scenario.label.clone(),
            failed: failures.len(),
            total,
        });
    }
    let n = replicates.len();
    let errors: Vec<f64> = replicates.iter().map(ReplicateOutcome::error).collect();
    let mean_bias = mean(&errors);
    let sd_error = crate::stats::sample_sd(&errors);
    let rmse = (exact_sum(errors.iter().map(|e| e * e)) / n as f64).sqrt();

    let coverage = scenario.bootstrap.map(|_| {
        let hits = replicates
            .iter()
            .filter(|r| matches!((r.ci_low, r.ci_high), (Some(lo), Some(hi)) if lo <= r.truth && r.truth <= hi))
            .count();
        fraction(hits, n)
    });

    let nc: Vec<f64> = replicates.iter().filter_map(|r| r.nc_difference).collect();
    let (mean_nc_difference, nc_negative_fraction) = if nc.is_empty() {
        (None, None)
    } else {
        (
            Some(mean(&nc)),
            Some(fraction(nc.iter().filter(|&&d| d < 0.0).count(), nc.len())),
        )
    };

    let count = |v: OverlapVerdict| replicates.iter().filter(|r| r.verdict == v).count();
    let verdicts = VerdictFrequencies {
        no_flags: fraction(count(OverlapVerdict::NoFlags), n),
        stochastic_concern: fraction(count(OverlapVerdict::StochasticConcern), n),
        structural_violation: fraction(count(OverlapVerdict::StructuralViolation), n),
    };

    Ok(BiasReport {
        label: scenario.label.clone(),
        kind: scenario.kind,
        shift: scenario.shift,
        spec: scenario.spec.column_names(),
        n_replicates: total,
        n_succeeded: n,
        failures,
        mean_truth: mean(&replicates.iter().map(|r| r.truth).collect::<Vec<_>>()),
        mean_estimate: mean(&replicates.iter().map(|r| r.estimate).collect::<Vec<_>>()),
        mean_bias,
        sd_error,
        rmse,
        coverage,
        mean_nc_difference,
        nc_negative_fraction,
        verdicts,
        replicates,
    })
}

/// Runs every replicate of `scenario`. Replicate `r` draws its world from
/// `child_seed(scenario.seed, r)`, so the report does not depend on
/// execution order.
pub fn run_scenario(scenario: &Scenario, execution: Execution) -> Result<BiasReport> {
    scenario.validate()?;
    let fit_options = FitOptions::default();
    let results = execution.map_indexed(scenario.n_replicates, |r| run_replicate(scenario, r, &fit_options));
    summarize(scenario, results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub label: String,
    pub report: Option<BiasReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub scenarios: Vec<ScenarioResult>,
}

impl SuiteReport {
    pub fn reports(&self) -> impl Iterator<Item = &BiasReport> {
        self.scenarios.iter().filter_map(|s| s.report.as_ref())
    }

    pub fn get(&self, label: &str) -> Option<&BiasReport> {
        self.reports().find(|r| r.label == label)
    }

    /// Fixed-width cross-scenario comparison for terminals.
    pub fn comparison_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let mut out = format!(
            "{:<26} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            "scenario", "bias", "sd", "rmse", "coverage", "nc_diff", "flagged"
        );
        for s in &self.scenarios {
            match &s.report {
                Some(r) => out.push_str(&format!(
                    "{:<26} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>9} {:>9.3}\n",
                    r.label,
                    r.mean_bias,
                    r.sd_error,
                    r.rmse,
                    opt(r.coverage),
                    opt(r.mean_nc_difference),
                    1.0 - r.verdicts.no_flags
                )),
                None => out.push_str(&format!(
                    "{:<26} failed: {}\n",
                    s.label,
                    s.error.as_deref().unwrap_or("")
                )),
            }
        }
        out
    }

    /// One row per scenario; failed scenarios keep their row with empty
    /// statistics and the error message.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "scenario",
            "kind",
            "n_replicates",
            "n_succeeded",
            "mean_truth",
            "mean_estimate",
            "mean_bias",
            "sd_error",
            "rmse",
            "coverage",
            "mean_nc_difference",
            "nc_negative_fraction",
            "no_flags",
            "stochastic_concern",
            "structural_violation",
            "error",
        ])?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for s in &self.scenarios {
            let row = match &s.report {
                Some(r) => vec![
                    r.label.clone(),
                    r.kind.to_string(),
                    r.n_replicates.to_string(),
                    r.n_succeeded.to_string(),
                    r.mean_truth.to_string(),
                    r.mean_estimate.to_string(),
                    r.mean_bias.to_string(),
                    r.sd_error.to_string(),
                    r.rmse.to_string(),
                    opt(r.coverage),
                    opt(r.mean_nc_difference),
                    opt(r.nc_negative_fraction),
                    r.verdicts.no_flags.to_string(),
                    r.verdicts.stochastic_concern.to_string(),
                    r.verdicts.structural_violation.to_string(),
                    String::new(),
                ],
                None => {
                    let mut row = vec![s.label.clone()];
                    row.extend(std::iter::repeat_n(String::new(), 14));
                    row.push(s.error.clone().unwrap_or_default());
                    row
                }
            };
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs each scenario in turn (replicates in parallel). A failing scenario
/// is recorded in its row and does not stop the others.
pub fn run_suite(scenarios: &[Scenario], execution: Execution) -> Result<SuiteReport> {
    if scenarios.is_empty() {
        return Err(Error::Empty("no scenarios to run".into()));
    }
    let scenarios = scenarios
        .iter()
        .map(|s| match run_scenario(s, execution) {
            Ok(r) => ScenarioResult {
                label: s.label.clone(),
                report: Some(r),
                error: None,
            },
            Err(e) => ScenarioResult {
                label: s.label.clone(),
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(SuiteReport { scenarios })
}
