//! Convergence and stability experiments.
//!
//! The exact solution is operationalized as a high-resolution `α = 0`
//! Galerkin run; every experiment compares runs on a shared output grid
//! in coefficient space.  Sweep members run concurrently on the global
//! rayon pool; reductions to fits happen after all members finish.

mod fit;
mod global;
mod perturb;
mod sweep;

pub use fit::{fit_rate, RateFit};
pub use global::{run_global_time, windowed_report, GlobalTimeSpec, WindowedErrorReport};
pub use perturb::{fit_perturbation, perturbation_samples, run_perturbation, PerturbationFit, PerturbationSpec};
pub use sweep::{
    check_reference_adequacy, run_alpha_sweep, run_dirichlet_rate, run_n_sweep, run_sweep, AdequacyReport,
    ErrorSeries, Precondition, PreconditionReport, SweepParam, SweepResult, SweepSpec,
};

use serde::{Deserialize, Serialize};

/// JSON summary of one experiment.  Keys that do not apply are `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: String,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub residual: Option<f64>,
    #[serde(rename = "K_hat")]
    pub k_hat: Option<f64>,
    pub secular_growth_flag: Option<bool>,
    #[serde(rename = "fitted_M")]
    pub fitted_m: Option<f64>,
    #[serde(rename = "fitted_B")]
    pub fitted_b: Option<f64>,
}

impl Summary {
    pub fn from_fit(kind: &str, fit: &RateFit) -> Self {
        Summary {
            kind: kind.to_string(),
            slope: Some(fit.slope),
            intercept: Some(fit.intercept),
            residual: Some(fit.residual),
            k_hat: Some(fit.k_hat),
            ..Default::default()
        }
    }

    pub fn from_windows(report: &WindowedErrorReport) -> Self {
        Summary {
            kind: "global".into(),
            secular_growth_flag: Some(report.secular_growth_flag),
            ..Default::default()
        }
    }

    pub fn from_perturbation(fit: &PerturbationFit) -> Self {
        Summary {
            kind: "perturbation".into(),
            fitted_m: Some(fit.fitted_m),
            fitted_b: Some(fit.fitted_b),
            ..Default::default()
        }
    }
}
