//! Binary logistic regression fitted by iteratively reweighted least squares.
//!
//! The working model maps patient characteristics and the photon plan to
//! the risk of the outcome under the standard treatment. Terms are named so
//! a fitted model can be shipped as JSON and re-applied elsewhere.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SquareMatrix};
use crate::types::{DosePlan, Organ, PatientRecord, TumorLocation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Intercept,
    BaselineDysphagia,
    /// Indicator of a non-reference tumor location.
    Location(TumorLocation),
    /// Mean organ dose in Gy.
    Dose(Organ),
    /// Squared organ dose in units of (10 Gy)^2.
    DoseSquared(Organ),
    /// Organ dose (Gy) times a non-reference location indicator.
    DoseByLocation(Organ, TumorLocation),
}

impl Term {
    pub fn name(&self) -> String {
        match self {
            Term::Intercept => "intercept".into(),
            Term::BaselineDysphagia => "baseline_dysphagia".into(),
            Term::Location(l) => format!("loc_{l}"),
            Term::Dose(o) => o.column().into(),
            Term::DoseSquared(o) => format!("{}_sq", o.column()),
            Term::DoseByLocation(o, l) => format!("{}:loc_{l}", o.column()),
        }
    }

    fn value(&self, record: &PatientRecord, plan: &DosePlan) -> f64 {
        let indicator = |l: TumorLocation| f64::from(u8::from(record.tumor_location == l));
        match *self {
            Term::Intercept => 1.0,
            Term::BaselineDysphagia => f64::from(record.baseline_dysphagia),
            Term::Location(l) => indicator(l),
            Term::Dose(o) => plan.get(o),
            Term::DoseSquared(o) => {
                let d = plan.get(o) / 10.0;
                d * d
            }
            Term::DoseByLocation(o, l) => plan.get(o) * indicator(l),
        }
    }

    fn location(&self) -> Option<TumorLocation> {
        match *self {
            Term::Location(l) | Term::DoseByLocation(_, l) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("spec", format!("unknown model term `{s}`"));
        let loc = |t: &str| {
            t.strip_prefix("loc_")
                .and_then(TumorLocation::parse)
                .filter(|&l| l != TumorLocation::REFERENCE)
        };
        match s {
            "intercept" => return Ok(Term::Intercept),
            "baseline_dysphagia" => return Ok(Term::BaselineDysphagia),
            _ => {}
        }
        if let Some((d, l)) = s.split_once(':') {
            let organ = Organ::parse(d).ok_or_else(bad)?;
            return Ok(Term::DoseByLocation(organ, loc(l).ok_or_else(bad)?));
        }
        if let Some(l) = loc(s) {
            return Ok(Term::Location(l));
        }
        if let Some(d) = s.strip_suffix("_sq") {
            return Ok(Term::DoseSquared(Organ::parse(d).ok_or_else(bad)?));
        }
        Organ::parse(s).map(Term::Dose).ok_or_else(bad)
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered list of model terms. Always contains the intercept; no duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ModelSpec {
    terms: Vec<Term>,
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<Term>::deserialize(d)?;
        ModelSpec::new(terms).map_err(serde::de::Error::custom)
    }
}

impl ModelSpec {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if !terms.contains(&Term::Intercept) {
            return Err(Error::config("spec", "intercept term is required"));
        }
        let mut seen = BTreeSet::new();
        for t in &terms {
            if !seen.insert(*t) {
                return Err(Error::config("spec", format!("duplicate term `{t}`")));
            }
        }
        Ok(ModelSpec { terms })
    }

    pub fn intercept_only() -> Self {
        ModelSpec {
            terms: vec![Term::Intercept],
        }
    }

    /// Intercept, baseline dysphagia, three location contrasts and four
    /// linear dose terms.
    pub fn default_spec() -> Self {
        let mut terms = vec![Term::Intercept, Term::BaselineDysphagia];
        terms.extend(
            TumorLocation::ALL
                .into_iter()
                .filter(|&l| l != TumorLocation::REFERENCE)
                .map(Term::Location),
        );
        terms.extend(Organ::ALL.into_iter().map(Term::Dose));
        ModelSpec { terms }
    }

    /// Default spec plus squared dose terms.
    pub fn quadratic() -> Self {
        let mut s = Self::default_spec();
        s.terms.extend(Organ::ALL.into_iter().map(Term::DoseSquared));
        s
    }

    /// Default spec plus dose-by-location interactions.
    pub fn interactions() -> Self {
        let mut s = Self::default_spec();
        for o in Organ::ALL {
            for l in TumorLocation::ALL {
                if l != TumorLocation::REFERENCE {
                    s.terms.push(Term::DoseByLocation(o, l));
                }
            }
        }
        s
    }

    /// Named preset: `default`, `quadratic`, `interactions` or `intercept`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" | "linear" => Some(Self::default_spec()),
            "quadratic" => Some(Self::quadratic()),
            "interactions" => Some(Self::interactions()),
            "intercept" => Some(Self::intercept_only()),
            _ => None,
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.terms.iter().map(Term::name).collect()
    }

    /// Drops terms tied to tumor locations that do not occur in `records`;
    /// such columns would be identically zero.
    /// When the reference category itself is absent, the first present
    /// category takes its place.
    pub fn restricted_to(&self, records: &[PatientRecord]) -> ModelSpec {
        let mut present = locations_present(records);
        if !present.contains(&TumorLocation::REFERENCE) {
            if let Some(&first) = present.iter().next() {
                present.remove(&first);
            }
        }
        ModelSpec {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|t| t.location().is_none_or(|l| present.contains(&l)))
                .collect(),
        }
    }
}

fn locations_present(records: &[PatientRecord]) -> BTreeSet<TumorLocation> {
    records.iter().map(|r| r.tumor_location).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanSource {
    Photon,
    Proton,
}

/// Row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
    pub columns: Vec<String>,
}

impl Design {
    pub fn from_rows(rows: &[Vec<f64>], columns: Vec<String>) -> Result<Self> {
        let n_cols = columns.len();
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Dimension("row length differs from column count".into()));
        }
        Ok(Design {
            n_rows: rows.len(),
            n_cols,
            data: rows.concat(),
            columns,
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n_rows).map(|i| dot(self.row(i), beta)).collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn build_design(records: &[PatientRecord], spec: &ModelSpec, plan_source: PlanSource) -> Result<Design> {
    if plan_source == PlanSource::Proton {
        let missing: Vec<String> = records
            .iter()
            .filter(|r| r.proton_doses.is_none())
            .map(|r| r.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingProtonPlan { ids: missing });
        }
    }
    let n_cols = spec.len();
    let mut data = Vec::with_capacity(records.len() * n_cols);
    for r in records {
        let plan = match plan_source {
            PlanSource::Photon => &r.photon_doses,
            PlanSource::Proton => r.proton_doses.as_ref().expect("checked above"),
        };
        data.extend(spec.terms.iter().map(|t| t.value(r, plan)));
    }
    Ok(Design {
        n_rows: records.len(),
        n_cols,
        data,
        columns: spec.column_names(),
    })
}

/// Numerically stable inverse logit.
#[inline]
pub fn inv_logit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn log1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of `beta`.
pub fn log_likelihood(design: &Design, outcomes: &[u8], beta: &[f64]) -> f64 {
    design
        .linear_predictor(beta)
        .iter()
        .zip(outcomes)
        .map(|(&eta, &y)| f64::from(y) * eta - log1p_exp(eta))
        .sum()
}

/// Gradient of [`log_likelihood`]: `X'(y - p)`.
pub fn score(design: &Design, outcomes: &[u8], beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; design.n_cols];
    for (i, &y) in outcomes.iter().enumerate() {
        let row = design.row(i);
        let resid = f64::from(y) - inv_logit(dot(row, beta));
        for (gj, &x) in g.iter_mut().zip(row) {
            *gj += x * resid;
        }
    }
    g
}

fn deviance(design: &Design, outcomes: &[u8], beta: &[f64]) -> f64 {
    -2.0 * log_likelihood(design, outcomes, beta)
}

/// `X'WX` with `W = diag(p(1-p))`.
fn information(design: &Design, beta: &[f64]) -> SquareMatrix {
    let k = design.n_cols;
    let mut info = SquareMatrix::zeros(k);
    for i in 0..design.n_rows {
        let row = design.row(i);
        let p = inv_logit(dot(row, beta));
        let w = p * (1.0 - p);
        for a in 0..k {
            let wa = w * row[a];
            if wa == 0.0 {
                continue;
            }
            for b in a..k {
                info.add(a, b, wa * row[b]);
            }
        }
    }
    for a in 0..k {
        for b in (a + 1)..k {
            info.set(b, a, info.get(a, b));
        }
    }
    info
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub deviance_tol: f64,
    pub score_tol: f64,
    pub separation_bound: f64,
    pub max_halvings: usize,
    pub pivot_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 25,
            deviance_tol: 1e-8,
            score_tol: 1e-6,
            separation_bound: 1e3,
            max_halvings: 10,
            pivot_floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub spec: ModelSpec,
    #[serde(rename = "beta")]
    pub beta_hat: Vec<f64>,
    /// Inverse observed information at `beta_hat`.
    #[serde(rename = "cov")]
    pub cov_hat: Vec<Vec<f64>>,
    pub n_obs: usize,
    pub deviance: f64,
    pub converged: bool,
    #[serde(default)]
    pub n_iter: usize,
    /// Tumor locations seen during fitting; prediction elsewhere is refused.
    #[serde(default = "all_locations")]
    pub support: Vec<TumorLocation>,
}

fn all_locations() -> Vec<TumorLocation> {
    TumorLocation::ALL.to_vec()
}

impl ModelFit {
    /// A fixed model with the given coefficients (no fitting information).
    pub fn fixed(spec: ModelSpec, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != spec.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} terms",
                beta.len(),
                spec.len()
            )));
        }
        let k = beta.len();
        Ok(ModelFit {
            spec,
            beta_hat: beta,
            cov_hat: vec![vec![0.0; k]; k],
            n_obs: 0,
            deviance: 0.0,
            converged: true,
            n_iter: 0,
            support: all_locations(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let fit: ModelFit = serde_json::from_str(s)?;
        if fit.beta_hat.len() != fit.spec.len() {
            return Err(Error::Dimension("beta length differs from spec".into()));
        }
        Ok(fit)
    }
}

/// Maximum-likelihood logistic fit of `outcomes` on `design`.
///
/// Non-convergence yields a fit with `converged == false`; rank deficiency
/// and separation are errors.
pub fn fit_logistic(design: &Design, outcomes: &[u8], options: &FitOptions) -> Result<ModelFit> {
    let spec = ModelSpec::new(
        design
            .columns
            .iter()
            .map(|c| c.parse())
            .collect::<Result<Vec<Term>>>()?,
    )?;
    fit_with_spec(design, outcomes, options, spec)
}

fn fit_with_spec(design: &Design, outcomes: &[u8], options: &FitOptions, spec: ModelSpec) -> Result<ModelFit> {
    let (n, k) = (design.n_rows, design.n_cols);
    if outcomes.len() != n {
        return Err(Error::Dimension(format!(
            "{n} design rows but {} outcomes",
            outcomes.len()
        )));
    }
    if n < k {
        return Err(Error::Dimension(format!("{n} rows for {k} columns")));
    }
    if outcomes.iter().any(|&y| y > 1) {
        return Err(Error::NonBinaryOutcome);
    }

    let collinear = |cols: Vec<usize>| Error::Collinear {
        columns: cols.into_iter().map(|j| design.columns[j].clone()).collect(),
    };

    let mut beta = vec![0.0; k];
    let mut dev = deviance(design, outcomes, &beta);
    let mut converged = false;
    let mut n_iter = 0;

    while n_iter < options.max_iter {
        n_iter += 1;
        let info = information(design, &beta);
        let chol = Cholesky::factor(&info, options.pivot_floor).map_err(collinear)?;
        let step = chol.solve(&score(design, outcomes, &beta));

        // deviance is only known to rounding error near the optimum
        let slack = 1e-12 * dev.abs().max(1.0);
        let mut scale = 1.0;
        let mut candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
        let mut new_dev = deviance(design, outcomes, &candidate);
        let mut halvings = 0;
        while !(new_dev <= dev + slack) && halvings < options.max_halvings {
            halvings += 1;
            scale *= 0.5;
            candidate = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            new_dev = deviance(design, outcomes, &candidate);
        }
        if !(new_dev <= dev + slack) {
            // no descent along the Newton direction: we are at the optimum
            // to working precision
            let g = score(design, outcomes, &beta);
            converged = max_abs(&g) < options.score_tol;
            break;
        }
        let delta = (dev - new_dev).abs();
        beta = candidate;
        dev = new_dev;
        if max_abs(&beta) > options.separation_bound {
            return Err(Error::Separation {
                max_abs_beta: max_abs(&beta),
            });
        }
        if delta < options.deviance_tol && max_abs(&score(design, outcomes, &beta)) < options.score_tol {
            converged = true;
            break;
        }
    }

    if converged {
        // one extra Newton step: convergence is quadratic, so this takes the
        // estimate to working precision regardless of where the tolerance cut in
        let info = information(design, &beta);
        if let Ok(chol) = Cholesky::factor(&info, options.pivot_floor) {
            let step = chol.solve(&score(design, outcomes, &beta));
            let candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
            let new_dev = deviance(design, outcomes, &candidate);
            if new_dev <= dev + 1e-12 * dev.abs().max(1.0) {
                beta = candidate;
                dev = new_dev;
            }
        }
    }

    let eta = design.linear_predictor(&beta);
    let extreme = eta.iter().any(|&e| {
        let p = inv_logit(e);
        !(1e-10..=1.0 - 1e-10).contains(&p)
    });
    if extreme || max_abs(&beta) > options.separation_bound {
        return Err(Error::Separation {
            max_abs_beta: max_abs(&beta),
        });
    }

    let info = information(design, &beta);
    let cov = Cholesky::factor(&info, options.pivot_floor)
        .map_err(collinear)?
        .inverse()
        .to_rows();

    Ok(ModelFit {
        spec,
        beta_hat: beta,
        cov_hat: cov,
        n_obs: n,
        deviance: dev,
        converged,
        n_iter,
        support: all_locations(),
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fits `spec` on the photon plans and outcomes of `records`. Location
/// terms for categories absent from `records` are dropped, and the fit's
/// support is restricted to the categories that were seen.
pub fn fit_records(records: &[PatientRecord], spec: &ModelSpec, options: &FitOptions) -> Result<ModelFit> {
    if records.is_empty() {
        return Err(Error::Empty("no records to fit".into()));
    }
    let spec = spec.restricted_to(records);
    let design = build_design(records, &spec, PlanSource::Photon)?;
    let outcomes: Vec<u8> = records.iter().map(|r| r.outcome).collect();
    let mut fit = fit_with_spec(&design, &outcomes, options, spec)?;
    fit.support = locations_present(records).into_iter().collect();
    Ok(fit)
}

/// Predicted risk under the standard treatment for each record.
pub fn predict_risk(fit: &ModelFit, records: &[PatientRecord], plan_source: PlanSource) -> Result<Vec<f64>> {
    if !fit.converged {
        return Err(Error::NotConverged { n_iter: fit.n_iter });
    }
    if let Some(r) = records.iter().find(|r| !fit.support.contains(&r.tumor_location)) {
        return Err(Error::UnseenCategory {
            id: r.id.clone(),
            location: r.tumor_location.to_string(),
        });
    }
    let design = build_design(records, &fit.spec, plan_source)?;
    Ok(design
        .linear_predictor(&fit.beta_hat)
        .into_iter()
        .map(|eta| inv_logit(eta).clamp(f64::EPSILON, 1.0 - f64::EPSILON))
        .collect())
}
