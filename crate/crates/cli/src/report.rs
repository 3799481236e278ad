//! JSON documents written by the commands. `report.json` from `estimate`
//! follows `schemas/report.schema.json`.

use serde::{Deserialize, Serialize};

use mbe_core::diagnostics::{CalibrationReport, OverlapReport};
use mbe_core::estimator::{AttEstimate, SensitivityTable};
use mbe_core::glm::ModelFit;
use mbe_core::synth::{GeneratorConfig, TrueEffects};
use mbe_core::violations::SuiteReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Fitted,
    Loaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub n_pre: usize,
    pub n_post: usize,
    pub n_treated: usize,
    pub n_standard: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unavailable {
    pub check: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub positivity: Option<OverlapReport>,
    pub negative_control: Option<CalibrationReport>,
    pub dose_transport: Option<CalibrationReport>,
    /// Checks that could not be computed, with the reason.
    pub unavailable: Vec<Unavailable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub cohorts: CohortSummary,
    pub model_source: ModelSource,
    pub model: ModelFit,
    pub estimates: Vec<AttEstimate>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub schema_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub cohorts: CohortSummary,
    pub model_source: ModelSource,
    pub model: ModelFit,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub schema_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub cohorts: CohortSummary,
    /// One table per requested scale.
    pub tables: Vec<SensitivityTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema_version: String,
    pub command: String,
    pub seed: u64,
    pub suite: SuiteReport,
}

/// `truth.json` next to generated cohorts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub schema_version: String,
    pub seed: u64,
    /// `None` when nobody was selected for the target treatment.
    pub true_att: Option<TrueEffects>,
    pub n_pre: usize,
    pub n_post: usize,
    pub n_treated: usize,
    pub n_standard: usize,
    pub config: GeneratorConfig,
}
