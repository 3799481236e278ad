//! Synthetic pre- and post-introduction cohorts with known potential outcomes.
//!
//! Every patient gets baseline dysphagia, a tumor location, a photon plan and
//! a proton plan (proton dose = reduction factor x photon dose). The risk
//! under either treatment follows one logistic dose-response applied to the
//! dose actually delivered. Post-period patients are assigned by the
//! benefit-threshold rule using the true risk function, and both potential
//! outcomes are drawn from one shared uniform per patient.
//!
//! [`ViolationShift`] switches on controlled breaches of the identifying
//! conditions; with all shifts neutral they hold by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::csv_io::round_dose;
use crate::error::{Error, Result};
use crate::estimator::EffectScale;
use crate::glm::inv_logit;
use crate::selection::{self, RiskFunction, SelectionRule, Strictness};
use crate::types::{
    Cohort, CohortLabel, DosePlan, Organ, PatientRecord, Period, PotentialOutcomes, Treatment, TumorLocation,
    MAX_DOSE_GY,
};

/// Prevalence of the latent confounder (e.g. advanced N-stage).
pub const CONFOUNDER_PREVALENCE: f64 = 0.4;
/// Share of the remaining reduction headroom a confounded patient gains per
/// unit of confounder strength.
pub const CONFOUNDER_REDUCTION_GAIN: f64 = 0.3;
/// Centre (Gy) and scale (Gy) of the quadratic superior-PCM dose term.
pub const NONLINEAR_CENTER_GY: f64 = 40.0;
pub const NONLINEAR_SCALE_GY: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrganDose {
    pub mean: f64,
    pub sd: f64,
}

/// Photon dose distribution: per tumor location, per organ, a normal
/// distribution censored to `[0, 80]` Gy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseModel {
    /// Indexed by `TumorLocation::index()`, then `Organ::index()`.
    pub per_location: [[OrganDose; 4]; 4],
}

impl Default for DoseModel {
    fn default() -> Self {
        let means = [
            [62.0, 55.0, 40.0, 50.0], // oropharynx
            [65.0, 35.0, 28.0, 30.0], // nasopharynx
            [30.0, 55.0, 62.0, 22.0], // larynx
            [50.0, 32.0, 30.0, 62.0], // oral cavity
        ];
        DoseModel {
            per_location: means.map(|row| row.map(|mean| OrganDose { mean, sd: 15.0 })),
        }
    }
}

/// How proton doses relate to photon doses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReductionModel {
    /// Per-patient reduction propensity `g ~ Beta` with location-specific
    /// mean; organ `k` keeps a factor `r_k = 1 - g * scale_k * (1 + jitter * z_k)`,
    /// clamped to `[0, 1]`. The shared `g` correlates reductions across organs.
    Beta {
        location_mean: [f64; 4],
        concentration: f64,
        organ_scale: [f64; 4],
        organ_jitter: f64,
    },
    /// Every organ keeps the same factor.
    Constant { factor: f64 },
}

impl Default for ReductionModel {
    fn default() -> Self {
        ReductionModel::Beta {
            location_mean: [0.25, 0.30, 0.20, 0.25],
            concentration: 0.7,
            organ_scale: [0.6, 0.5, 0.4, 0.7],
            organ_jitter: 0.1,
        }
    }
}

/// Restricts the pre cohort to patients whose photon dose to `organ` is
/// below `max_dose`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportTruncation {
    pub organ: Organ,
    pub max_dose: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ViolationShift {
    /// Gy removed from every post-period photon organ dose in the outcome
    /// mechanism, but not in the recorded plan.
    pub secular_dose_drift: f64,
    /// Logit effect of a latent binary confounder that also enlarges the
    /// achievable proton dose reduction.
    pub unmeasured_confounder_strength: f64,
    pub support_truncation: Option<SupportTruncation>,
    /// Amplitude of a quadratic superior-PCM dose term in the true risk.
    pub nonlinearity_amplitude: f64,
}

impl ViolationShift {
    pub fn is_neutral(&self) -> bool {
        self.secular_dose_drift == 0.0
            && self.unmeasured_confounder_strength == 0.0
            && self.support_truncation.is_none()
            && self.nonlinearity_amplitude == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_pre: usize,
    pub n_post: usize,
    pub seed: u64,
    /// Coefficients in default model-spec order: intercept, baseline
    /// dysphagia, nasopharynx, larynx, oral cavity, then the four doses (per Gy).
    pub true_beta: [f64; 9],
    pub baseline_dysphagia_rate: f64,
    /// Sampling weights by `TumorLocation::index()`.
    pub location_weights: [f64; 4],
    pub dose_model: DoseModel,
    pub proton_reduction_model: ReductionModel,
    pub selection_threshold: f64,
    pub shift: ViolationShift,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_pre: 750,
            n_post: 300,
            seed: 0,
            true_beta: [-5.0, 0.9, 0.2, -0.2, 0.1, 0.03, 0.025, 0.02, 0.015],
            baseline_dysphagia_rate: 0.25,
            location_weights: [0.45, 0.10, 0.25, 0.20],
            dose_model: DoseModel::default(),
            proton_reduction_model: ReductionModel::default(),
            selection_threshold: 0.10,
            shift: ViolationShift::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pre < 1 {
            return Err(Error::config("n_pre", "must be at least 1"));
        }
        if self.n_post < 1 {
            return Err(Error::config("n_post", "must be at least 1"));
        }
        if !(self.selection_threshold > 0.0 && self.selection_threshold < 1.0) {
            return Err(Error::config("selection_threshold", "must lie in (0, 1)"));
        }
        if self.true_beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::config("true_beta", "coefficients must be finite"));
        }
        if !(0.0..=1.0).contains(&self.baseline_dysphagia_rate) {
            return Err(Error::config("baseline_dysphagia_rate", "must lie in [0, 1]"));
        }
        if self.location_weights.iter().any(|w| !(*w >= 0.0)) || self.location_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config(
                "location_weights",
                "must be non-negative with positive sum",
            ));
        }
        for row in &self.dose_model.per_location {
            for od in row {
                if !(od.sd > 0.0) || !od.mean.is_finite() {
                    return Err(Error::config("dose_model", "sds must be > 0 and means finite"));
                }
            }
        }
        match &self.proton_reduction_model {
            ReductionModel::Beta {
                location_mean,
                concentration,
                organ_scale,
                organ_jitter,
            } => {
                if location_mean.iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
                    return Err(Error::config(
                        "proton_reduction_model",
                        "location means must lie in (0, 1)",
                    ));
                }
                if !(*concentration > 0.0) {
                    return Err(Error::config("proton_reduction_model", "concentration must be > 0"));
                }
                if organ_scale.iter().any(|s| !(0.0..=1.0).contains(s)) || !(*organ_jitter >= 0.0) {
                    return Err(Error::config(
                        "proton_reduction_model",
                        "organ scales must lie in [0, 1], jitter >= 0",
                    ));
                }
            }
            ReductionModel::Constant { factor } => {
                if !(0.0..=1.0).contains(factor) {
                    return Err(Error::config("proton_reduction_model", "factor must lie in [0, 1]"));
                }
            }
        }
        let s = &self.shift;
        if !(s.secular_dose_drift >= 0.0) {
            return Err(Error::config("shift.secular_dose_drift", "must be >= 0"));
        }
        if !s.unmeasured_confounder_strength.is_finite() || !s.nonlinearity_amplitude.is_finite() {
            return Err(Error::config("shift", "strengths must be finite"));
        }
        if let Some(t) = &s.support_truncation {
            if !(t.max_dose > 0.0 && t.max_dose <= MAX_DOSE_GY) {
                return Err(Error::config(
                    "shift.support_truncation",
                    "max_dose must lie in (0, 80]",
                ));
            }
        }
        Ok(())
    }

    /// The true risk as a function of observable characteristics and a dose
    /// plan: no latent confounder, no secular drift.
    pub fn true_risk(&self) -> TrueRisk {
        TrueRisk {
            beta: self.true_beta,
            nonlinearity_amplitude: self.shift.nonlinearity_amplitude,
        }
    }
}

/// Logistic dose-response of the data-generating mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueRisk {
    pub beta: [f64; 9],
    pub nonlinearity_amplitude: f64,
}

impl TrueRisk {
    pub fn linear_predictor(&self, record: &PatientRecord, plan: &DosePlan) -> f64 {
        let b = &self.beta;
        let loc = match record.tumor_location {
            TumorLocation::Oropharynx => 0.0,
            TumorLocation::Nasopharynx => b[2],
            TumorLocation::Larynx => b[3],
            TumorLocation::OralCavity => b[4],
        };
        let dose: f64 = plan.values().iter().zip(&b[5..]).map(|(d, c)| d * c).sum();
        let z = (plan.dose_sup_pcm - NONLINEAR_CENTER_GY) / NONLINEAR_SCALE_GY;
        b[0] + b[1] * f64::from(record.baseline_dysphagia) + loc + dose + self.nonlinearity_amplitude * z * z
    }
}

impl RiskFunction for TrueRisk {
    fn risk(&self, record: &PatientRecord, plan: &DosePlan) -> f64 {
        inv_logit(self.linear_predictor(record, plan))
    }
}

/// Ground-truth ATT among the post-period target-treated patients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEffects {
    pub rd: f64,
    pub rr: f64,
    pub or: f64,
    pub n_treated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedWorld {
    pub pre: Cohort,
    pub post: Cohort,
    /// `None` when nobody was selected for the target treatment.
    pub truth: Option<TrueEffects>,
    pub config: GeneratorConfig,
}

impl GeneratedWorld {
    pub fn true_att_rd(&self) -> Option<f64> {
        self.truth.map(|t| t.rd)
    }

    pub fn post_treated(&self) -> Vec<PatientRecord> {
        self.post.treated()
    }

    pub fn post_standard(&self) -> Vec<PatientRecord> {
        self.post.untreated()
    }
}

/// One patient before treatment assignment.
struct Draw {
    baseline_dysphagia: u8,
    location: TumorLocation,
    photon: DosePlan,
    proton: DosePlan,
    confounded: bool,
    uniform: f64,
}

struct Sampler<'a> {
    config: &'a GeneratorConfig,
    normal: Normal<f64>,
}

impl Sampler<'_> {
    fn location(&self, rng: &mut ChaCha8Rng) -> TumorLocation {
        let w = &self.config.location_weights;
        let total: f64 = w.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (k, &wk) in w.iter().enumerate() {
            if u < wk {
                return TumorLocation::ALL[k];
            }
            u -= wk;
        }
        // rounding at the top end
        TumorLocation::ALL[w.iter().rposition(|&x| x > 0.0).unwrap_or(0)]
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Draw {
        let cfg = self.config;
        let baseline_dysphagia = u8::from(rng.random::<f64>() < cfg.baseline_dysphagia_rate);
        let location = self.location(rng);
        let dists = &cfg.dose_model.per_location[location.index()];
        let photon = DosePlan::new(std::array::from_fn(|k| {
            let z: f64 = self.normal.sample(rng);
            round_dose((dists[k].mean + dists[k].sd * z).clamp(0.0, MAX_DOSE_GY))
        }));
        let confounded = rng.random::<f64>() < CONFOUNDER_PREVALENCE;
        let factors: [f64; 4] = match &cfg.proton_reduction_model {
            ReductionModel::Constant { factor } => [*factor; 4],
            ReductionModel::Beta {
                location_mean,
                concentration,
                organ_scale,
                organ_jitter,
            } => {
                let m = location_mean[location.index()];
                let beta = Beta::new(m * concentration, (1.0 - m) * concentration).expect("validated beta parameters");
                let mut g: f64 = beta.sample(rng);
                if confounded {
                    let gain = (CONFOUNDER_REDUCTION_GAIN * cfg.shift.unmeasured_confounder_strength).clamp(0.0, 1.0);
                    g += gain * (1.0 - g);
                }
                std::array::from_fn(|k| {
                    let z: f64 = self.normal.sample(rng);
                    (1.0 - g * organ_scale[k] * (1.0 + organ_jitter * z)).clamp(0.0, 1.0)
                })
            }
        };
        let photon_values = photon.values();
        let proton = DosePlan::new(std::array::from_fn(|k| round_dose(photon_values[k] * factors[k])));
        let uniform = rng.random::<f64>();
        Draw {
            baseline_dysphagia,
            location,
            photon,
            proton,
            confounded,
            uniform,
        }
    }

    fn admissible_pre(&self, d: &Draw) -> bool {
        match &self.config.shift.support_truncation {
            Some(t) => d.photon.get(t.organ) < t.max_dose,
            None => true,
        }
    }
}

fn record_from(draw: &Draw, id: String, period: Period) -> PatientRecord {
    PatientRecord {
        id,
        period,
        treatment: Treatment::Standard,
        baseline_dysphagia: draw.baseline_dysphagia,
        tumor_location: draw.location,
        photon_doses: draw.photon,
        proton_doses: match period {
            Period::Pre => None,
            Period::Post => Some(draw.proton),
        },
        outcome: 0,
        latent: None,
    }
}

fn potential_outcomes(cfg: &GeneratorConfig, draw: &Draw, record: &PatientRecord) -> PotentialOutcomes {
    let risk = cfg.true_risk();
    let confounding = if draw.confounded {
        cfg.shift.unmeasured_confounder_strength
    } else {
        0.0
    };
    let delivered_photon = match record.period {
        Period::Pre => draw.photon,
        Period::Post => {
            let drift = cfg.shift.secular_dose_drift;
            DosePlan::new(draw.photon.values().map(|d| (d - drift).max(0.0)))
        }
    };
    let p0 = inv_logit(risk.linear_predictor(record, &delivered_photon) + confounding);
    let p1 = inv_logit(risk.linear_predictor(record, &draw.proton) + confounding);
    PotentialOutcomes {
        y0: u8::from(draw.uniform < p0),
        y1: u8::from(draw.uniform < p1),
        p0,
        p1,
    }
}

/// Generates a world; deterministic in `config`.
pub fn generate(config: &GeneratorConfig) -> Result<GeneratedWorld> {
    config.validate()?;
    let sampler = Sampler {
        config,
        normal: Normal::new(0.0, 1.0).expect("unit normal"),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    const MAX_REJECTIONS: usize = 1_000_000;
    let mut pre = Vec::with_capacity(config.n_pre);
    let mut rejected = 0;
    while pre.len() < config.n_pre {
        let d = sampler.draw(&mut rng);
        if !sampler.admissible_pre(&d) {
            rejected += 1;
            if rejected > MAX_REJECTIONS {
                return Err(Error::config(
                    "shift.support_truncation",
                    "truncation leaves (almost) no admissible pre-period patients",
                ));
            }
            continue;
        }
        let mut r = record_from(&d, format!("pre-{:05}", pre.len() + 1), Period::Pre);
        let lat = potential_outcomes(config, &d, &r);
        r.outcome = lat.y0;
        r.latent = Some(lat);
        pre.push(r);
    }

    let draws: Vec<Draw> = (0..config.n_post).map(|_| sampler.draw(&mut rng)).collect();
    let mut post: Vec<PatientRecord> = draws
        .iter()
        .enumerate()
        .map(|(i, d)| record_from(d, format!("post-{:05}", i + 1), Period::Post))
        .collect();
    let rule = SelectionRule::new(config.selection_threshold, Strictness::Strict)?;
    let labels = selection::assign(&post, &config.true_risk(), &rule)?;
    for ((r, d), t) in post.iter_mut().zip(&draws).zip(labels) {
        r.treatment = t;
        let lat = potential_outcomes(config, d, r);
        r.outcome = match t {
            Treatment::Standard => lat.y0,
            Treatment::Target => lat.y1,
        };
        r.latent = Some(lat);
    }

    let post = Cohort::new(CohortLabel::PostIntroduction, post);
    let truth = true_effects(&post.records).ok();
    Ok(GeneratedWorld {
        pre: Cohort::new(CohortLabel::PreIntroduction, pre),
        post,
        truth,
        config: config.clone(),
    })
}

fn odds(p: f64) -> f64 {
    p / (1.0 - p)
}

fn true_effects(post: &[PatientRecord]) -> Result<TrueEffects> {
    let latents: Vec<PotentialOutcomes> = post
        .iter()
        .filter(|r| r.is_treated())
        .map(|r| {
            r.latent
                .ok_or_else(|| Error::EstimandUndefined(format!("record {} has no latent potential outcomes", r.id)))
        })
        .collect::<Result<_>>()?;
    if latents.is_empty() {
        return Err(Error::EstimandUndefined("no target-treated patients".into()));
    }
    let n = latents.len() as f64;
    let rd = latents.iter().map(|l| l.p1 - l.p0).sum::<f64>() / n;
    let m0 = latents.iter().map(|l| l.p0).sum::<f64>() / n;
    let m1 = latents.iter().map(|l| l.p1).sum::<f64>() / n;
    Ok(TrueEffects {
        rd,
        rr: m1 / m0,
        or: odds(m1) / odds(m0),
        n_treated: latents.len(),
    })
}

/// Ground-truth ATT of `world` on the requested scale.
pub fn true_att(world: &GeneratedWorld, scale: EffectScale) -> Result<f64> {
    let t = true_effects(&world.post.records)?;
    Ok(match scale {
        EffectScale::RiskDifference => t.rd,
        EffectScale::RiskRatio => t.rr,
        EffectScale::OddsRatio => t.or,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::fixtures::treated_record;
    use crate::types::validate;

    #[test]
    fn same_seed_same_world() {
        let cfg = GeneratorConfig::with_seed(17);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate(&GeneratorConfig::with_seed(18)).unwrap();
        assert_ne!(a.post, c.post);
    }

    #[test]
    fn generated_cohorts_are_valid() {
        let w = generate(&GeneratorConfig::with_seed(3)).unwrap();
        assert!(validate(&w.pre).is_empty());
        assert!(validate(&w.post).is_empty());
        assert_eq!(w.pre.len(), 750);
        assert_eq!(w.post.len(), 300);
        assert!(w.pre.records.iter().all(|r| r.treatment == Treatment::Standard));
    }

    #[test]
    fn identical_plans_select_nobody() {
        let cfg = GeneratorConfig {
            proton_reduction_model: ReductionModel::Constant { factor: 1.0 },
            seed: 5,
            ..GeneratorConfig::default()
        };
        let w = generate(&cfg).unwrap();
        assert!(w.post.records.iter().all(|r| r.treatment == Treatment::Standard));
        for r in &w.post.records {
            let lat = r.latent.unwrap();
            assert_eq!(lat.p0, lat.p1);
            assert_eq!(selection::benefit(r, &cfg.true_risk()).unwrap(), 0.0);
        }
        assert!(w.truth.is_none());
        assert!(matches!(
            true_att(&w, EffectScale::RiskDifference),
            Err(Error::EstimandUndefined(_))
        ));
    }

    #[test]
    fn invalid_config_names_field() {
        let cfg = GeneratorConfig {
            n_pre: 0,
            ..GeneratorConfig::default()
        };
        match generate(&cfg) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "n_pre"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn true_att_is_mean_latent_difference() {
        let w = generate(&GeneratorConfig::with_seed(9)).unwrap();
        let treated: Vec<_> = w.post_treated();
        let direct = treated
            .iter()
            .map(|r| r.latent.unwrap().p1 - r.latent.unwrap().p0)
            .sum::<f64>()
            / treated.len() as f64;
        assert_eq!(true_att(&w, EffectScale::RiskDifference).unwrap(), direct);
        // selection requires true benefit > 0.10 for every treated patient
        assert!(direct <= -0.10);
        assert!(treated.iter().all(|r| {
            let l = r.latent.unwrap();
            l.p0 - l.p1 > 0.10
        }));
    }

    #[test]
    fn ratio_scales_from_mean_risks() {
        let mut w = generate(&GeneratorConfig::with_seed(2)).unwrap();
        w.post.records = [(0.5, 0.3), (0.4, 0.2)]
            .iter()
            .enumerate()
            .map(|(i, &(p0, p1))| {
                let mut r = treated_record(&format!("t{i}"), [50.0; 4], [20.0; 4], 0);
                r.latent = Some(PotentialOutcomes { y0: 0, y1: 0, p0, p1 });
                r
            })
            .collect();
        assert!((true_att(&w, EffectScale::RiskDifference).unwrap() + 0.2).abs() < 1e-12);
        assert!((true_att(&w, EffectScale::RiskRatio).unwrap() - 0.25 / 0.45).abs() < 1e-12);
        let or = (0.25 / 0.75) / (0.45 / 0.55);
        assert!((true_att(&w, EffectScale::OddsRatio).unwrap() - or).abs() < 1e-12);
    }

    #[test]
    fn null_effect_scales() {
        let mut w = generate(&GeneratorConfig::with_seed(4)).unwrap();
        for r in w.post.records.iter_mut() {
            let mut l = r.latent.unwrap();
            l.p1 = l.p0;
            r.latent = Some(l);
        }
        assert_eq!(true_att(&w, EffectScale::RiskDifference).unwrap(), 0.0);
        assert_eq!(true_att(&w, EffectScale::RiskRatio).unwrap(), 1.0);
        assert_eq!(true_att(&w, EffectScale::OddsRatio).unwrap(), 1.0);
    }

    #[test]
    fn outcomes_are_consistent_and_comonotone() {
        let w = generate(&GeneratorConfig::with_seed(12)).unwrap();
        for r in w.pre.records.iter().chain(&w.post.records) {
            let l = r.latent.unwrap();
            if l.p1 <= l.p0 {
                assert!(l.y1 <= l.y0);
            }
        }
    }

    #[test]
    fn raising_a_dose_coefficient_raises_mean_risk() {
        let base = GeneratorConfig::with_seed(21);
        let mean_p0 = |cfg: &GeneratorConfig| {
            let w = generate(cfg).unwrap();
            w.pre.records.iter().map(|r| r.latent.unwrap().p0).sum::<f64>() / w.pre.len() as f64
        };
        let m = mean_p0(&base);
        for k in 5..9 {
            let mut cfg = base.clone();
            cfg.true_beta[k] += 0.01;
            assert!(mean_p0(&cfg) >= m);
        }
    }

    #[test]
    fn truncation_restricts_pre_cohort_only() {
        let cfg = GeneratorConfig {
            seed: 8,
            shift: ViolationShift {
                support_truncation: Some(SupportTruncation {
                    organ: Organ::SuperiorPcm,
                    max_dose: 50.0,
                }),
                ..ViolationShift::default()
            },
            ..GeneratorConfig::default()
        };
        let w = generate(&cfg).unwrap();
        assert!(w.pre.records.iter().all(|r| r.photon_doses.dose_sup_pcm < 50.0));
        assert!(w.post.records.iter().any(|r| r.photon_doses.dose_sup_pcm >= 50.0));
    }

    #[test]
    fn drift_lowers_post_standard_risk_only() {
        let base = GeneratorConfig::with_seed(30);
        let mut drifted = base.clone();
        drifted.shift.secular_dose_drift = 5.0;
        let a = generate(&base).unwrap();
        let b = generate(&drifted).unwrap();
        assert_eq!(a.pre, b.pre);
        for (x, y) in a.post.records.iter().zip(&b.post.records) {
            assert_eq!(x.treatment, y.treatment);
            assert!(y.latent.unwrap().p0 <= x.latent.unwrap().p0);
            assert_eq!(y.latent.unwrap().p1, x.latent.unwrap().p1);
        }
    }
}
