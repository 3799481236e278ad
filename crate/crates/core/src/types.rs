//! Domain data model: patients, dose plans, cohorts and schema validation.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Upper bound on a physically plausible mean organ dose, in Gy.
pub const MAX_DOSE_GY: f64 = 80.0;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Treatment {
    /// Standard treatment (photon therapy), `T = 0`.
    Standard,
    /// Target treatment under evaluation (proton therapy), `T = 1`.
    Target,
}

impl Treatment {
    pub fn code(self) -> u8 {
        match self {
            Treatment::Standard => 0,
            Treatment::Target => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TumorLocation {
    Oropharynx,
    Nasopharynx,
    Larynx,
    OralCavity,
}

impl TumorLocation {
    pub const ALL: [TumorLocation; 4] = [
        TumorLocation::Oropharynx,
        TumorLocation::Nasopharynx,
        TumorLocation::Larynx,
        TumorLocation::OralCavity,
    ];

    /// Reference category for one-hot coding.
    pub const REFERENCE: TumorLocation = TumorLocation::Oropharynx;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TumorLocation::Oropharynx => "oropharynx",
            TumorLocation::Nasopharynx => "nasopharynx",
            TumorLocation::Larynx => "larynx",
            TumorLocation::OralCavity => "oral_cavity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        match norm.as_str() {
            "oropharynx" => Some(TumorLocation::Oropharynx),
            "nasopharynx" => Some(TumorLocation::Nasopharynx),
            "larynx" => Some(TumorLocation::Larynx),
            "oral_cavity" | "oralcavity" => Some(TumorLocation::OralCavity),
            _ => None,
        }
    }
}

impl fmt::Display for TumorLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Organs at risk whose mean planned dose enters the outcome model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Organ {
    SuperiorPcm,
    MiddlePcm,
    InferiorPcm,
    OralCavity,
}

impl Organ {
    pub const ALL: [Organ; 4] = [
        Organ::SuperiorPcm,
        Organ::MiddlePcm,
        Organ::InferiorPcm,
        Organ::OralCavity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name of the photon-plan dose in the cohort CSV.
    pub fn column(self) -> &'static str {
        match self {
            Organ::SuperiorPcm => "dose_sup_pcm",
            Organ::MiddlePcm => "dose_mid_pcm",
            Organ::InferiorPcm => "dose_inf_pcm",
            Organ::OralCavity => "dose_oral_cavity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Organ::ALL
            .into_iter()
            .find(|o| o.column() == s || o.column().trim_start_matches("dose_") == s)
    }
}

impl fmt::Display for Organ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// Mean planned doses (Gy) to the four organs at risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosePlan {
    pub dose_sup_pcm: f64,
    pub dose_mid_pcm: f64,
    pub dose_inf_pcm: f64,
    pub dose_oral_cavity: f64,
}

impl DosePlan {
    pub fn new(values: [f64; 4]) -> Self {
        DosePlan {
            dose_sup_pcm: values[0],
            dose_mid_pcm: values[1],
            dose_inf_pcm: values[2],
            dose_oral_cavity: values[3],
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [
            self.dose_sup_pcm,
            self.dose_mid_pcm,
            self.dose_inf_pcm,
            self.dose_oral_cavity,
        ]
    }

    pub fn get(&self, organ: Organ) -> f64 {
        self.values()[organ.index()]
    }

    pub fn set(&mut self, organ: Organ, value: f64) {
        match organ {
            Organ::SuperiorPcm => self.dose_sup_pcm = value,
            Organ::MiddlePcm => self.dose_mid_pcm = value,
            Organ::InferiorPcm => self.dose_inf_pcm = value,
            Organ::OralCavity => self.dose_oral_cavity = value,
        }
    }

    /// Organ whose dose breaks the plausibility bound, if any.
    pub fn implausible_organ(&self) -> Option<Organ> {
        Organ::ALL.into_iter().find(|&o| {
            let v = self.get(o);
            !v.is_finite() || !(0.0..=MAX_DOSE_GY).contains(&v)
        })
    }
}

/// Latent potential outcomes, known only for synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialOutcomes {
    pub y0: u8,
    pub y1: u8,
    /// True risk under the standard treatment.
    pub p0: f64,
    /// True risk under the target treatment.
    pub p1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: String,
    pub period: Period,
    pub treatment: Treatment,
    pub baseline_dysphagia: u8,
    pub tumor_location: TumorLocation,
    pub photon_doses: DosePlan,
    pub proton_doses: Option<DosePlan>,
    pub outcome: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<PotentialOutcomes>,
}

impl PatientRecord {
    pub fn is_treated(&self) -> bool {
        self.treatment == Treatment::Target
    }

    /// Checks the record-level invariants; one violation per broken rule.
    pub fn violations(&self) -> Vec<SchemaViolation> {
        let mut out = Vec::new();
        let mut push = |field: &str, rule: &str| {
            out.push(SchemaViolation {
                record_id: Some(self.id.clone()),
                field: field.to_string(),
                rule: rule.to_string(),
            })
        };
        if self.period == Period::Pre && self.treatment != Treatment::Standard {
            push("treatment", "pre-period records must receive the standard treatment");
        }
        if self.period == Period::Pre && self.proton_doses.is_some() {
            push("proton_doses", "pre-period records must not carry a proton plan");
        }
        if self.treatment == Treatment::Target && self.period != Period::Post {
            push("period", "target-treated records must be post-period");
        }
        if self.treatment == Treatment::Target && self.proton_doses.is_none() {
            push("proton_doses", "target-treated records must carry a proton plan");
        }
        if self.outcome > 1 {
            push("outcome", "outcome must be 0 or 1");
        }
        if self.baseline_dysphagia > 1 {
            push("baseline_dysphagia", "baseline_dysphagia must be 0 or 1");
        }
        if let Some(o) = self.photon_doses.implausible_organ() {
            push(o.column(), "dose must be finite and within [0, 80] Gy");
        }
        if let Some(o) = self.proton_doses.as_ref().and_then(DosePlan::implausible_organ) {
            push(
                &format!("{}_proton", o.column()),
                "dose must be finite and within [0, 80] Gy",
            );
        }
        if let Some(lat) = &self.latent {
            let expected = match self.treatment {
                Treatment::Standard => lat.y0,
                Treatment::Target => lat.y1,
            };
            if expected != self.outcome {
                push(
                    "outcome",
                    "outcome must equal the potential outcome of the received treatment",
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CohortLabel {
    PreIntroduction,
    PostIntroduction,
}

impl CohortLabel {
    pub fn period(self) -> Period {
        match self {
            CohortLabel::PreIntroduction => Period::Pre,
            CohortLabel::PostIntroduction => Period::Post,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub records: Vec<PatientRecord>,
    pub label: CohortLabel,
    pub schema_version: String,
}

impl Cohort {
    pub fn new(label: CohortLabel, records: Vec<PatientRecord>) -> Self {
        Cohort {
            records,
            label,
            schema_version: SCHEMA_VERSION.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn treated(&self) -> Vec<PatientRecord> {
        self.records.iter().filter(|r| r.is_treated()).cloned().collect()
    }

    pub fn untreated(&self) -> Vec<PatientRecord> {
        self.records.iter().filter(|r| !r.is_treated()).cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchemaViolation {
    /// `None` for cohort-level violations.
    pub record_id: Option<String>,
    pub field: String,
    pub rule: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.record_id {
            Some(id) => write!(f, "record {id}: {}: {}", self.field, self.rule),
            None => write!(f, "cohort: {}: {}", self.field, self.rule),
        }
    }
}

/// Reports every invariant breach in `cohort`. Never fails.
pub fn validate(cohort: &Cohort) -> Vec<SchemaViolation> {
    let mut out = Vec::new();
    if cohort.records.is_empty() {
        out.push(SchemaViolation {
            record_id: None,
            field: "records".into(),
            rule: "cohort empty".into(),
        });
        return out;
    }
    let period = cohort.label.period();
    for r in &cohort.records {
        if r.period != period {
            out.push(SchemaViolation {
                record_id: Some(r.id.clone()),
                field: "period".into(),
                rule: format!("record period does not match cohort label {:?}", cohort.label),
            });
        }
        out.extend(r.violations());
    }
    out
}
