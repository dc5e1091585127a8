use serde::{Deserialize, Serialize};

use super::sweep::{SweepParam, SweepSpec};
use crate::diagnostics::{error_series, ErrorRecord};
use crate::eigenbasis::EigenBasis;
use crate::error::{Error, Result};
use crate::solver::{integrate, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTimeSpec {
    /// The approximating run (its `n`, `α`, `dt`, horizon and forcing).
    pub base: SolverConfig,
    pub n_ref: usize,
    pub dt_ref: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedErrorReport {
    /// `windows + 1` edges partitioning `[0, t_end]`.
    pub edges: Vec<f64>,
    /// `sup ‖u − u_ref‖²` over the records inside each window.
    pub window_sup: Vec<f64>,
    /// Max of `window_sup` over the first `⌈windows/4⌉` windows.
    pub first_quarter_max: f64,
    pub last_window_sup: f64,
    pub secular_growth_flag: bool,
    /// `sup` over the whole run.
    pub run_sup: f64,
    /// `1 / (ν λ₁)`
    pub viscous_time: f64,
    #[serde(skip)]
    pub series: Vec<ErrorRecord>,
}

/// Partition the records into equal windows and apply the growth test.
pub fn windowed_report(series: &[ErrorRecord], t_end: f64, windows: usize, viscous_time: f64) -> Result<WindowedErrorReport> {
    if windows == 0 {
        return Err(Error::config("need at least one window"));
    }
    if series.is_empty() || !(t_end > 0.0) {
        return Err(Error::arg("empty error series"));
    }
    let width = t_end / windows as f64;
    let mut window_sup = vec![0.0f64; windows];
    for r in series {
        let w = ((r.t / width).floor() as usize).min(windows - 1);
        window_sup[w] = window_sup[w].max(r.err_l2 * r.err_l2);
    }
    let quarter = windows.div_ceil(4);
    let first_quarter_max = window_sup[..quarter].iter().copied().fold(0.0, f64::max);
    let last_window_sup = window_sup[windows - 1];
    Ok(WindowedErrorReport {
        edges: (0..=windows).map(|i| i as f64 * width).collect(),
        first_quarter_max,
        last_window_sup,
        secular_growth_flag: last_window_sup > 2.0 * first_quarter_max,
        run_sup: window_sup.iter().copied().fold(0.0, f64::max),
        window_sup,
        viscous_time,
        series: series.to_vec(),
    })
}

/// Long-time error of `base` against an `α = 0` reference, split into windows.
pub fn run_global_time(basis: &EigenBasis, spec: &GlobalTimeSpec) -> Result<WindowedErrorReport> {
    let viscous_time = 1.0 / (spec.base.nu * basis.lambda_1());
    if spec.base.t_end < 20.0 * viscous_time * (1.0 - 1e-12) {
        return Err(Error::config(format!(
            "horizon {} is shorter than 20 viscous times ({})",
            spec.base.t_end,
            20.0 * viscous_time
        )));
    }
    // reuse the sweep checks for n_ref / dt_ref
    let sweep = SweepSpec {
        base: spec.base.clone(),
        param: SweepParam::Alpha(vec![3.0, 2.0, 1.0]),
        n_ref: spec.n_ref,
        dt_ref: spec.dt_ref,
        precondition: super::Precondition::Measured,
    };
    sweep.validate(basis.len())?;
    let reference_cfg = sweep.reference_config()?;
    let run_cfg = SolverConfig {
        checkpoints: None,
        ..spec.base.clone()
    };
    let (run, reference) = rayon::join(|| integrate(basis, &run_cfg), || integrate(basis, &reference_cfg));
    let series = error_series(&run?, &reference?)?;
    windowed_report(&series, spec.base.t_end, spec.windows, viscous_time)
}
