use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigenbasis::{DomainKind, EigenBasis};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::transform::{analyze, GridField, GridLayout};

/// Time dependence `m(t)` of the forcing `f(t) = m(t) f₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    Steady,
    /// `m(t) = 1 + amplitude · sin(omega · t)`
    Sinusoidal { amplitude: f64, omega: f64 },
    /// `m(t) = 1 + rate · t` (slowly growing forcing)
    Ramp { rate: f64 },
}

impl Modulation {
    pub fn factor(&self, t: f64) -> f64 {
        match *self {
            Modulation::Steady => 1.0,
            Modulation::Sinusoidal { amplitude, omega } => 1.0 + amplitude * (omega * t).sin(),
            Modulation::Ramp { rate } => 1.0 + rate * t,
        }
    }
}

/// Spatial profile `f₀` of the forcing.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingProfile {
    None,
    /// Fixed pattern on the modes with `λ ≤ lambda_max`, scaled so the
    /// Grashof number `‖f₀‖ / (ν² λ₁)` equals `grashof`.
    LowModes { grashof: f64, lambda_max: f64 },
    /// Explicit coefficients on the leading modes.
    Coefficients(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    pub profile: ForcingProfile,
    pub modulation: Modulation,
}

impl ForcingSpec {
    pub fn none() -> Self {
        ForcingSpec {
            profile: ForcingProfile::None,
            modulation: Modulation::Steady,
        }
    }

    /// Steady small-Grashof forcing on the `λ ≤ 2` modes.
    pub fn small_grashof(grashof: f64) -> Self {
        ForcingSpec {
            profile: ForcingProfile::LowModes {
                grashof,
                lambda_max: 2.0,
            },
            modulation: Modulation::Steady,
        }
    }

    /// `f₀` expressed in (the first `basis.len()` modes of) the basis.
    pub fn profile(&self, basis: &EigenBasis, nu: f64) -> SpectralField {
        let n = basis.len();
        match &self.profile {
            ForcingProfile::None => SpectralField::zeros(n),
            ForcingProfile::Coefficients(c) => SpectralField::from_vec(c.clone()).resized(n),
            ForcingProfile::LowModes { grashof, lambda_max } => {
                let lam = basis.eigenvalues();
                // pattern depends on the mode index only, so every truncation
                // sees the same forcing
                let pattern: Vec<f64> = (0..n)
                    .map(|j| if lam[j] <= *lambda_max { ((j + 1) as f64).cos() } else { 0.0 })
                    .collect();
                let norm = pattern.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return SpectralField::zeros(n);
                }
                let target = grashof * nu * nu * basis.lambda_1();
                SpectralField::from_vec(pattern.into_iter().map(|c| c * target / norm).collect())
            }
        }
    }
}

/// Initial velocity `u₀`; the solver starts from `P_n u₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Zero,
    /// `amplitude · (sin x cos y, −cos x sin y)` (torus only).
    TaylorGreen { amplitude: f64 },
    /// `c_j = amplitude · λ_j^{−s} · (±1)`, signs from a seeded generator.
    SpectralDecay { s: f64, seed: u64, amplitude: f64 },
    /// Explicit coefficients on the leading modes.
    Coefficients(Vec<f64>),
    /// Resume from a checkpoint file.
    Checkpoint(PathBuf),
}

impl InitSpec {
    /// Coefficients of `P_n u₀` for the given (truncated) basis.  Not
    /// meaningful for [`InitSpec::Checkpoint`], which carries `v` directly.
    pub fn coefficients(&self, basis: &EigenBasis) -> Result<SpectralField> {
        let n = basis.len();
        match self {
            InitSpec::Zero => Ok(SpectralField::zeros(n)),
            InitSpec::Coefficients(c) => Ok(SpectralField::from_vec(c.clone()).resized(n)),
            InitSpec::SpectralDecay { s, seed, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(SpectralField::from_vec(
                    basis
                        .eigenvalues()
                        .iter()
                        .map(|l| {
                            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            sign * amplitude * l.powf(-s)
                        })
                        .collect(),
                ))
            }
            InitSpec::TaylorGreen { amplitude } => {
                if basis.domain() != DomainKind::Torus {
                    return Err(Error::Unsupported("Taylor-Green data needs the torus".into()));
                }
                let m = basis.grid_resolution();
                let h = 2.0 * std::f64::consts::PI / m as f64;
                let mut g = GridField::zeros(GridLayout::Periodic { m });
                for iy in 0..m {
                    for ix in 0..m {
                        let (x, y) = (ix as f64 * h, iy as f64 * h);
                        g.ux[iy * m + ix] = amplitude * x.sin() * y.cos();
                        g.uy[iy * m + ix] = -amplitude * x.cos() * y.sin();
                    }
                }
                analyze(basis, &g)
            }
            InitSpec::Checkpoint(p) => Err(Error::config(format!(
                "checkpoint {} has no u₀ coefficients; resume through the stepper",
                p.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointPolicy {
    pub dir: PathBuf,
    pub every_steps: usize,
}

/// Parameters of one Galerkin integration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub nu: f64,
    pub alpha: f64,
    /// Galerkin truncation level.
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub forcing: ForcingSpec,
    pub initial: InitSpec,
    /// Steps between diagnostic records.
    pub output_cadence: usize,
    /// Include the convection term (turning it off leaves the Stokes flow).
    pub nonlinear: bool,
    /// Advective limit `dt ≤ cfl · h / max|u|`.
    pub cfl: f64,
    /// Split a step into substeps when it violates the advective limit.
    pub cfl_substep: bool,
    pub checkpoints: Option<CheckpointPolicy>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nu: 1.0,
            alpha: 0.0,
            n: 64,
            dt: 1e-3,
            t_end: 1.0,
            forcing: ForcingSpec::none(),
            initial: InitSpec::Zero,
            output_cadence: 10,
            nonlinear: true,
            cfl: 0.5,
            cfl_substep: false,
            checkpoints: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, basis_len: usize) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return fail(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be nonnegative, got {}", self.alpha));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return fail(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if self.n == 0 || self.n > basis_len {
            return fail(format!("truncation n = {} outside 1..={basis_len}", self.n));
        }
        if self.output_cadence == 0 {
            return fail("output_cadence must be at least 1".into());
        }
        if !(self.cfl > 0.0) {
            return fail(format!("cfl must be positive, got {}", self.cfl));
        }
        if let Some(cp) = &self.checkpoints {
            if cp.every_steps == 0 {
                return fail("checkpoint interval must be at least 1 step".into());
            }
        }
        Ok(())
    }

    /// Number of steps from `t_start` to `t_end`.
    pub fn steps_from(&self, t_start: f64) -> Result<u64> {
        let span = self.t_end - t_start;
        if span < -1e-12 * self.t_end.max(1.0) {
            return Err(Error::config(format!("start time {t_start} is after t_end {}", self.t_end)));
        }
        let steps = (span / self.dt).round();
        if (steps * self.dt - span).abs() > 1e-9 * span.abs().max(self.dt) {
            return Err(Error::config(format!(
                "horizon {span} is not a whole number of steps of {}",
                self.dt
            )));
        }
        Ok(steps.max(0.0) as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_parameters() {
        let ok = SolverConfig { n: 8, ..Default::default() };
        assert!(ok.validate(8).is_ok());
        assert!(SolverConfig { nu: 0.0, ..ok.clone() }.validate(8).is_err());
        assert!(SolverConfig { dt: -1.0, ..ok.clone() }.validate(8).is_err());
        assert!(SolverConfig { n: 9, ..ok.clone() }.validate(8).is_err());
        assert!(SolverConfig { t_end: -1.0, ..ok.clone() }.validate(8).is_err());
        assert!(SolverConfig { output_cadence: 0, ..ok }.validate(8).is_err());
    }

    #[test]
    fn step_count_requires_whole_steps() {
        let cfg = SolverConfig { dt: 0.1, t_end: 1.0, ..Default::default() };
        assert_eq!(cfg.steps_from(0.0).unwrap(), 10);
        assert_eq!(cfg.steps_from(0.5).unwrap(), 5);
        let odd = SolverConfig { dt: 0.3, t_end: 1.0, ..Default::default() };
        assert!(odd.steps_from(0.0).is_err());
    }

    #[test]
    fn taylor_green_lives_on_the_diagonal_shell() {
        let basis = EigenBasis::torus_auto(16).unwrap();
        let tg = InitSpec::TaylorGreen { amplitude: 1.0 }.coefficients(&basis).unwrap();
        for (j, c) in tg.coeffs().iter().enumerate() {
            if basis.eigenvalues()[j] != 2.0 {
                assert!(c.abs() < 1e-14);
            }
        }
        // ‖u‖² = ∫ sin²x cos²y + cos²x sin²y = 2π²
        let e: f64 = tg.coeffs().iter().map(|c| c * c).sum();
        assert!((e - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn spectral_decay_is_prefix_consistent() {
        let big = EigenBasis::torus_auto(64).unwrap();
        let small = big.truncated(16).unwrap();
        let spec = InitSpec::SpectralDecay { s: 1.75, seed: 11, amplitude: 1.0 };
        let a = spec.coefficients(&big).unwrap();
        let b = spec.coefficients(&small).unwrap();
        assert_eq!(&a.coeffs()[..16], b.coeffs());
    }

    #[test]
    fn small_grashof_profile_has_requested_norm() {
        let basis = EigenBasis::torus_auto(32).unwrap();
        let f = ForcingSpec::small_grashof(0.5).profile(&basis, 0.5);
        let norm = f.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((norm - 0.5 * 0.25 * 1.0).abs() < 1e-14);
        for (j, c) in f.coeffs().iter().enumerate() {
            if basis.eigenvalues()[j] > 2.0 {
                assert_eq!(*c, 0.0);
            }
        }
    }
}
