use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_rate, RateFit};
use crate::diagnostics::{error_series, sup_err_h1_sq, sup_err_l2_sq, ErrorRecord};
use crate::eigenbasis::EigenBasis;
use crate::error::{Error, Result};
use crate::solver::{integrate, SolverConfig, Trajectory};

/// Swept parameter of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepParam {
    /// Positive, strictly decreasing regularization lengths.
    Alpha(Vec<f64>),
    /// Strictly increasing truncation levels (runs at `α = 0`).
    N(Vec<usize>),
}

/// How the "projection error is subdominant" premise of an α-sweep is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precondition {
    /// `λ_{n+1}^{−3/2} ≤ 0.01 · λ₁^{−1/2} α_min²` from the eigenvalues alone.
    Literal,
    /// The `α = 0` run at level `n` must differ from the reference by at
    /// most 1% of the smallest-α error (covers projection and time error).
    Measured,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SolverConfig,
    pub param: SweepParam,
    /// Reference run: `α = 0` at this truncation level ...
    pub n_ref: usize,
    /// ... and this step.
    pub dt_ref: f64,
    pub precondition: Precondition,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        match &self.param {
            SweepParam::Alpha(a) => a.clone(),
            SweepParam::N(n) => n.iter().map(|&n| n as f64).collect(),
        }
    }

    fn max_n(&self) -> usize {
        match &self.param {
            SweepParam::Alpha(_) => self.base.n,
            SweepParam::N(ns) => ns.iter().copied().max().unwrap_or(0),
        }
    }

    /// `dt / dt_ref` as a whole number.
    fn refinement(&self) -> Result<usize> {
        let r = self.base.dt / self.dt_ref;
        let k = r.round();
        if !(k >= 4.0) || (r - k).abs() > 1e-9 * r {
            return Err(Error::config(format!(
                "dt_ref must be dt / k for a whole k ≥ 4 (dt = {}, dt_ref = {})",
                self.base.dt, self.dt_ref
            )));
        }
        Ok(k as usize)
    }

    pub fn validate(&self, basis_len: usize) -> Result<()> {
        let count = match &self.param {
            SweepParam::Alpha(a) => {
                if let Some(bad) = a.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                    return Err(Error::config(format!("alpha values must be positive, got {bad}")));
                }
                if a.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Error::config("alpha list must be strictly decreasing"));
                }
                a.len()
            }
            SweepParam::N(ns) => {
                if self.base.alpha != 0.0 {
                    return Err(Error::config("n-sweeps run at alpha = 0"));
                }
                if ns.windows(2).any(|w| w[1] <= w[0]) || ns.first() == Some(&0) {
                    return Err(Error::config("n list must be positive and strictly increasing"));
                }
                if let Some(bad) = ns.iter().find(|&&n| n >= self.n_ref) {
                    return Err(Error::config(format!("n = {bad} is not below n_ref = {}", self.n_ref)));
                }
                ns.len()
            }
        };
        if count < 3 {
            return Err(Error::config(format!("a sweep needs at least 3 values, got {count}")));
        }
        if self.n_ref < 4 * self.max_n() {
            return Err(Error::config(format!(
                "n_ref = {} must be at least 4 × max swept n = {}",
                self.n_ref,
                4 * self.max_n()
            )));
        }
        if self.n_ref > basis_len {
            return Err(Error::config(format!(
                "n_ref = {} exceeds the basis size {basis_len}",
                self.n_ref
            )));
        }
        self.refinement()?;
        self.base.validate(basis_len)
    }

    /// The high-resolution `α = 0` run standing in for the exact solution.
    pub fn reference_config(&self) -> Result<SolverConfig> {
        let k = self.refinement()?;
        Ok(SolverConfig {
            alpha: 0.0,
            n: self.n_ref,
            dt: self.dt_ref,
            output_cadence: self.base.output_cadence * k,
            checkpoints: None,
            ..self.base.clone()
        })
    }

    pub fn member_configs(&self) -> Vec<SolverConfig> {
        let plain = SolverConfig {
            checkpoints: None,
            ..self.base.clone()
        };
        match &self.param {
            SweepParam::Alpha(a) => a.iter().map(|&alpha| SolverConfig { alpha, ..plain.clone() }).collect(),
            SweepParam::N(ns) => ns.iter().map(|&n| SolverConfig { n, ..plain.clone() }).collect(),
        }
    }
}

/// Error of one sweep member against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    /// The swept value (α or n).
    pub param: f64,
    /// `λ_{n+1}` of the member's truncation.
    pub lambda_next: f64,
    pub records: Vec<ErrorRecord>,
    /// `sup_t ‖u − u_ref‖²`
    pub sup_l2_sq: f64,
    /// `sup_t ‖A^{1/2}(u − u_ref)‖²`
    pub sup_h1_sq: f64,
}

impl ErrorSeries {
    fn new(param: f64, lambda_next: f64, records: Vec<ErrorRecord>) -> Self {
        ErrorSeries {
            param,
            lambda_next,
            sup_l2_sq: sup_err_l2_sq(&records),
            sup_h1_sq: sup_err_h1_sq(&records),
            records,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionReport {
    pub mode: Precondition,
    /// `λ_{n+1}^{−3/2}`
    pub projection_bound: f64,
    /// `0.01 · λ₁^{−1/2} α_min²`
    pub literal_limit: f64,
    pub literal_ok: bool,
    /// `sup_t ‖u_n^0 − u_ref‖²` (measured mode only).
    pub measured_floor: Option<f64>,
    /// `0.01 · sup_t ‖u_n^{α_min} − u_ref‖²` (measured mode only).
    pub measured_limit: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// `ln sup err²` against `ln α²` (α-sweep) or `ln λ_{n+1}` (n-sweep);
    /// `K_hat` against `α²` resp. `λ_{n+1}^{−3/2}`.
    pub fit: RateFit,
    /// `ln sup err_H1²` against `ln α` resp. `ln λ_{n+1}`; `K_hat` against
    /// `α` resp. `λ_{n+1}^{−1/2}`.
    pub dirichlet: RateFit,
    pub series: Vec<ErrorSeries>,
    pub precondition: Option<PreconditionReport>,
}

impl SweepResult {
    /// Slope of `ln sup err²` against `ln α` (twice the fitted slope against `ln α²`).
    pub fn slope_vs_alpha(&self) -> Option<f64> {
        matches!(self.spec.param, SweepParam::Alpha(_)).then(|| 2.0 * self.fit.slope)
    }
}

fn lambda_next(basis: &EigenBasis, n: usize) -> Result<f64> {
    basis
        .eigenvalues()
        .get(n)
        .copied()
        .ok_or_else(|| Error::config(format!("basis has no eigenvalue λ_{}", n + 1)))
}

fn run_all(basis: &EigenBasis, cfgs: &[SolverConfig]) -> Result<Vec<Trajectory>> {
    cfgs.par_iter().map(|c| integrate(basis, c)).collect()
}

/// Convergence sweep in α or n against a shared α = 0 reference.
pub fn run_sweep(basis: &EigenBasis, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate(basis.len())?;
    let mut precondition = None;
    if let SweepParam::Alpha(alphas) = &spec.param {
        let alpha_min = *alphas.last().expect("validated non-empty");
        let bound = lambda_next(basis, spec.base.n)?.powf(-1.5);
        let limit = 0.01 * basis.lambda_1().powf(-0.5) * alpha_min * alpha_min;
        let report = PreconditionReport {
            mode: spec.precondition,
            projection_bound: bound,
            literal_limit: limit,
            literal_ok: bound <= limit,
            measured_floor: None,
            measured_limit: None,
        };
        if spec.precondition == Precondition::Literal && !report.literal_ok {
            return Err(Error::config(format!(
                "projection error dominates: λ_{{n+1}}^(-3/2) = {bound:.3e} > 0.01·λ₁^(-1/2)·α² = {limit:.3e} \
                 for n = {} and alpha = {alpha_min}",
                spec.base.n
            )));
        }
        precondition = Some(report);
    }

    let reference_cfg = spec.reference_config()?;
    let mut cfgs = vec![reference_cfg];
    cfgs.extend(spec.member_configs());
    let measured = spec.precondition == Precondition::Measured && matches!(spec.param, SweepParam::Alpha(_));
    if measured {
        cfgs.push(SolverConfig {
            alpha: 0.0,
            checkpoints: None,
            ..spec.base.clone()
        });
    }
    let mut runs = run_all(basis, &cfgs)?;
    let floor_run = if measured { runs.pop() } else { None };
    let reference = runs.remove(0);

    let values = spec.values();
    let mut series = Vec::with_capacity(runs.len());
    for (run, (&p, cfg)) in runs.iter().zip(values.iter().zip(spec.member_configs())) {
        series.push(ErrorSeries::new(p, lambda_next(basis, cfg.n)?, error_series(run, &reference)?));
    }

    if let (Some(floor_run), Some(report)) = (floor_run, precondition.as_mut()) {
        let floor = sup_err_l2_sq(&error_series(&floor_run, &reference)?);
        let limit = 0.01 * series.last().expect("validated non-empty").sup_l2_sq;
        report.measured_floor = Some(floor);
        report.measured_limit = Some(limit);
        if floor > limit {
            return Err(Error::config(format!(
                "projection/time error {floor:.3e} of the alpha = 0 run at n = {} exceeds 1% of the \
                 alpha = {} error ({limit:.3e})",
                spec.base.n,
                series.last().unwrap().param
            )));
        }
    }

    let (fit, dirichlet) = match spec.param {
        SweepParam::Alpha(_) => {
            let l2: Vec<_> = series.iter().map(|s| (s.param * s.param, s.sup_l2_sq)).collect();
            let h1: Vec<_> = series.iter().map(|s| (s.param, s.sup_h1_sq)).collect();
            (fit_rate(&l2)?, fit_rate(&h1)?)
        }
        SweepParam::N(_) => {
            let l2: Vec<_> = series.iter().map(|s| (s.lambda_next, s.sup_l2_sq)).collect();
            let h1: Vec<_> = series.iter().map(|s| (s.lambda_next, s.sup_h1_sq)).collect();
            let b2: Vec<_> = series.iter().map(|s| s.lambda_next.powf(-1.5)).collect();
            let b1: Vec<_> = series.iter().map(|s| s.lambda_next.powf(-0.5)).collect();
            (fit_rate(&l2)?.with_bound(&b2)?, fit_rate(&h1)?.with_bound(&b1)?)
        }
    };
    Ok(SweepResult {
        spec: spec.clone(),
        fit,
        dirichlet,
        series,
        precondition,
    })
}

pub fn run_alpha_sweep(basis: &EigenBasis, spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.param, SweepParam::Alpha(_)) {
        return Err(Error::config("expected an alpha list"));
    }
    run_sweep(basis, spec)
}

pub fn run_n_sweep(basis: &EigenBasis, spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.param, SweepParam::N(_)) {
        return Err(Error::config("expected an n list"));
    }
    run_sweep(basis, spec)
}

/// Dirichlet-norm rate: `sup err_H1²` against α or `λ_{n+1}`.
pub fn run_dirichlet_rate(basis: &EigenBasis, spec: &SweepSpec) -> Result<RateFit> {
    Ok(run_sweep(basis, spec)?.dirichlet)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdequacyReport {
    pub sup_errors: Vec<f64>,
    pub sup_errors_doubled_n: Vec<f64>,
    pub sup_errors_halved_dt: Vec<f64>,
    pub max_change_n: f64,
    pub max_change_dt: f64,
    pub passed: bool,
}

/// Re-run the reference with `2 n_ref` and with `dt_ref / 2` and compare
/// every reported `sup err²` (relative change must stay below 5%).
pub fn check_reference_adequacy(basis: &EigenBasis, spec: &SweepSpec) -> Result<AdequacyReport> {
    spec.validate(basis.len())?;
    if basis.len() < 2 * spec.n_ref {
        return Err(Error::config(format!(
            "adequacy check needs {} modes, basis has {}",
            2 * spec.n_ref,
            basis.len()
        )));
    }
    let reference = spec.reference_config()?;
    let refs = [
        reference.clone(),
        SolverConfig { n: 2 * spec.n_ref, ..reference.clone() },
        SolverConfig {
            dt: reference.dt / 2.0,
            output_cadence: reference.output_cadence * 2,
            ..reference
        },
    ];
    let mut cfgs = refs.to_vec();
    cfgs.extend(spec.member_configs());
    let runs = run_all(basis, &cfgs)?;
    let sups = |r: &Trajectory| -> Result<Vec<f64>> {
        runs[3..].iter().map(|m| Ok(sup_err_l2_sq(&error_series(m, r)?))).collect()
    };
    let (base, dn, ddt) = (sups(&runs[0])?, sups(&runs[1])?, sups(&runs[2])?);
    let change = |other: &[f64]| {
        base.iter()
            .zip(other)
            .map(|(a, b)| ((a.sqrt() - b.sqrt()) / a.sqrt()).abs())
            .fold(0.0, f64::max)
    };
    let (max_change_n, max_change_dt) = (change(&dn), change(&ddt));
    Ok(AdequacyReport {
        passed: max_change_n < 0.05 && max_change_dt < 0.05,
        sup_errors: base,
        sup_errors_doubled_n: dn,
        sup_errors_halved_dt: ddt,
        max_change_n,
        max_change_dt,
    })
}
