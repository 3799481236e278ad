//! Model-based selection: each patient has a photon and a proton plan, and
//! receives the target treatment when the predicted risk reduction from
//! switching plans clears a threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{inv_logit, ModelFit};
use crate::types::{DosePlan, PatientRecord, Treatment};

/// Maps patient characteristics and a dose plan to an outcome risk.
pub trait RiskFunction: Sync {
    fn risk(&self, record: &PatientRecord, plan: &DosePlan) -> f64;
}

impl<F> RiskFunction for F
where
    F: Fn(&PatientRecord, &DosePlan) -> f64 + Sync,
{
    fn risk(&self, record: &PatientRecord, plan: &DosePlan) -> f64 {
        self(record, plan)
    }
}

/// A fitted model used as the clinic's selection model.
impl RiskFunction for ModelFit {
    fn risk(&self, record: &PatientRecord, plan: &DosePlan) -> f64 {
        let mut one = record.clone();
        one.photon_doses = *plan;
        let design = crate::glm::build_design(std::slice::from_ref(&one), &self.spec, crate::glm::PlanSource::Photon)
            .expect("photon design cannot fail");
        let eta: f64 = design.row(0).iter().zip(&self.beta_hat).map(|(x, b)| x * b).sum();
        inv_logit(eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Strictness {
    /// Select when benefit > threshold.
    #[default]
    Strict,
    /// Select when benefit >= threshold.
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRule {
    pub threshold: f64,
    pub strictness: Strictness,
}

impl Default for SelectionRule {
    fn default() -> Self {
        SelectionRule {
            threshold: 0.10,
            strictness: Strictness::Strict,
        }
    }
}

impl SelectionRule {
    pub fn new(threshold: f64, strictness: Strictness) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::config("selection_threshold", "must lie in (0, 1)"));
        }
        Ok(SelectionRule { threshold, strictness })
    }

    pub fn selects(&self, benefit: f64) -> bool {
        match self.strictness {
            Strictness::Strict => benefit > self.threshold,
            Strictness::Inclusive => benefit >= self.threshold,
        }
    }
}

/// Predicted risk on the photon plan minus predicted risk on the proton plan.
pub fn benefit<R: RiskFunction + ?Sized>(record: &PatientRecord, risk_fn: &R) -> Result<f64> {
    let proton = record.proton_doses.as_ref().ok_or_else(|| Error::MissingProtonPlan {
        ids: vec![record.id.clone()],
    })?;
    Ok(risk_fn.risk(record, &record.photon_doses) - risk_fn.risk(record, proton))
}

/// Treatment label for every record, in input order.
pub fn assign<R: RiskFunction + ?Sized>(
    records: &[PatientRecord],
    risk_fn: &R,
    rule: &SelectionRule,
) -> Result<Vec<Treatment>> {
    let missing: Vec<String> = records
        .iter()
        .filter(|r| r.proton_doses.is_none())
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingProtonPlan { ids: missing });
    }
    records
        .iter()
        .map(|r| {
            let b = benefit(r, risk_fn)?;
            Ok(if rule.selects(b) {
                Treatment::Target
            } else {
                Treatment::Standard
            })
        })
        .collect()
}
