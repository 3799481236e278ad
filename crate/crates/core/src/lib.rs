//! Model-based counterfactual evaluation of a newly introduced treatment.
//!
//! An outcome model fitted on patients treated before the new treatment was
//! available predicts, for each patient who did receive it, the risk they
//! would have had under the standard treatment. The average gap between
//! observed outcomes and those predictions estimates the average treatment
//! effect among the treated (ATT).
//!
//! Modules:
//! - [`types`] and [`csv_io`]: patients, cohorts, CSV schema.
//! - [`synth`]: synthetic worlds with known potential outcomes.
//! - [`glm`]: logistic regression by IRLS.
//! - [`selection`]: benefit-threshold treatment assignment.
//! - [`estimator`]: ATT point estimates, bootstrap intervals, sensitivity.
//! - [`diagnostics`]: overlap, calibration, AUROC, dose transport.
//! - [`violations`]: Monte Carlo bias lab under condition violations.

// `!(a <= b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod csv_io;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod glm;
pub mod linalg;
pub mod selection;
pub mod stats;
pub mod synth;
pub mod types;
pub mod violations;

pub use error::{Error, Result};
pub use exec::Execution;
