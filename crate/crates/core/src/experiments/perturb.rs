use serde::{Deserialize, Serialize};

use crate::eigenbasis::EigenBasis;
use crate::error::{Error, Result};
use crate::field::norm_sq;
use crate::solver::{InitSpec, SolverConfig, Stepper};

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    /// Base run (integrated at `α = 0`).
    pub base: SolverConfig,
    /// Initial perturbation `ζ₀`, added to the base solution at `t₀`.
    pub zeta0: InitSpec,
    pub t0: f64,
    /// Length of the transient after `t₀` excluded from the fit.
    pub burn: f64,
}

/// `‖ζ(t)‖² ≤ B ‖ζ₀‖² e^{−M(t − t₀)}` fitted to a measured decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFit {
    pub t0: f64,
    pub zeta0_norm: f64,
    pub times: Vec<f64>,
    /// `‖ζ(t)‖²` at `times`.
    pub zeta_sq: Vec<f64>,
    /// Start of the fit window `t₀ + burn`.
    pub fit_start: f64,
    /// Decay rate from least squares on `ln ‖ζ‖²` over the fit window.
    pub fitted_m: f64,
    /// Smallest `B` for which the bound holds at every sample of the window.
    pub fitted_b: f64,
    pub stability_observed: bool,
}

impl PerturbationFit {
    /// Whether `‖ζ(t)‖² ≤ B‖ζ₀‖²e^{−M(t−t₀)}` at every sample in the fit window.
    pub fn bound_holds(&self) -> bool {
        let z0 = self.zeta0_norm * self.zeta0_norm;
        self.times.iter().zip(&self.zeta_sq).filter(|(t, _)| **t >= self.fit_start).all(|(t, z)| {
            *z <= self.fitted_b * z0 * (-self.fitted_m * (t - self.t0)).exp() * (1.0 + 1e-12)
        })
    }
}

/// `(t, ‖ζ(t)‖²)` for the pair `u`, `u + ζ` started at `t₀`.
pub fn perturbation_samples(basis: &EigenBasis, spec: &PerturbationSpec) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if spec.base.alpha != 0.0 {
        return Err(Error::config("perturbations are integrated at alpha = 0"));
    }
    if !(spec.t0 >= 0.0) || !(spec.burn >= 0.0) || spec.t0 + spec.burn >= spec.base.t_end {
        return Err(Error::config(format!(
            "need 0 ≤ t0 and t0 + burn < t_end (t0 = {}, burn = {}, t_end = {})",
            spec.t0, spec.burn, spec.base.t_end
        )));
    }
    let cfg = SolverConfig {
        checkpoints: None,
        ..spec.base.clone()
    };
    let stepper = Stepper::new(basis, cfg.clone())?;
    let start = if spec.t0 > 0.0 {
        Stepper::new(basis, SolverConfig { t_end: spec.t0, ..cfg.clone() })?
            .integrate()?
            .final_state
    } else {
        stepper.initial_state()?
    };
    let zeta0 = spec.zeta0.coefficients(stepper.basis())?;
    let mut a = start.clone();
    let mut b = stepper.state_from_u(start.t, &start.u + &zeta0);
    let steps = cfg.steps_from(start.t)?;
    let mut times = vec![a.t];
    let mut zeta_sq = vec![norm_sq(&(&b.u - &a.u))];
    for k in 1..=steps {
        a = stepper.step(&a)?;
        b = stepper.step(&b)?;
        if k as usize % cfg.output_cadence == 0 || k == steps {
            times.push(a.t);
            zeta_sq.push(norm_sq(&(&b.u - &a.u)));
        }
    }
    // the realized initial difference, which is what the samples measure
    let zeta0_norm = zeta_sq[0].sqrt();
    Ok((times, zeta_sq, zeta0_norm))
}

/// Fit `M` and `B` to sampled `‖ζ‖²`.
pub fn fit_perturbation(times: Vec<f64>, zeta_sq: Vec<f64>, t0: f64, zeta0_norm: f64, burn: f64) -> Result<PerturbationFit> {
    if !(zeta0_norm > 0.0) {
        return Err(Error::arg("the initial perturbation must be nonzero"));
    }
    let fit_start = t0 + burn;
    let window: Vec<(f64, f64)> = times
        .iter()
        .zip(&zeta_sq)
        .filter(|(t, _)| **t >= fit_start)
        .map(|(t, z)| (*t, *z))
        .collect();
    if window.len() < 3 {
        return Err(Error::arg(format!("fit window holds {} samples, need 3", window.len())));
    }
    if let Some((t, _)) = window.iter().find(|(_, z)| !(*z > 0.0 && z.is_finite())) {
        return Err(Error::arg(format!("perturbation vanished or diverged at t = {t}")));
    }
    let m = window.len() as f64;
    let mt = window.iter().map(|p| p.0).sum::<f64>() / m;
    let mz = window.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let stt: f64 = window.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stz: f64 = window.iter().map(|p| (p.0 - mt) * (p.1.ln() - mz)).sum();
    let fitted_m = -stz / stt;
    let z0 = zeta0_norm * zeta0_norm;
    let fitted_b = window
        .iter()
        .map(|(t, z)| z * (fitted_m * (t - t0)).exp() / z0)
        .fold(0.0, f64::max);
    Ok(PerturbationFit {
        t0,
        zeta0_norm,
        times,
        zeta_sq,
        fit_start,
        fitted_m,
        fitted_b,
        stability_observed: fitted_m > 0.0,
    })
}

/// Integrate a solution and its perturbation and fit the decay of their difference.
pub fn run_perturbation(basis: &EigenBasis, spec: &PerturbationSpec) -> Result<PerturbationFit> {
    let (times, zeta_sq, zeta0_norm) = perturbation_samples(basis, spec)?;
    fit_perturbation(times, zeta_sq, spec.t0, zeta0_norm, spec.burn)
}
