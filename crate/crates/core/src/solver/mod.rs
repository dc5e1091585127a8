//! Time integration of the Galerkin system
//!
//! ```text
//! dv/dt + νAv + P_n B̃(u, v) = P_n f,   v = (I + α²A)u,   u(0) = P_n u₀
//! ```
//!
//! with a second-order integrating-factor Heun scheme: the viscous term is
//! propagated exactly by `e^{−νλ_j Δt}`, the convection and forcing by a
//! two-stage explicit predictor/corrector.

mod checkpoint;
mod config;

pub use checkpoint::Checkpoint;
pub use config::{CheckpointPolicy, ForcingProfile, ForcingSpec, InitSpec, Modulation, SolverConfig};

use std::path::PathBuf;

use crate::diagnostics::{energy_record, EnergyRecord, EnergySnapshot};
use crate::eigenbasis::EigenBasis;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::nonlinear::{nonlinear_b, rotational_with_speed};

/// Coefficient magnitude treated as a blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    /// Filtered variable `v = (I + α²A)u`.
    pub v: SpectralField,
    /// `u = J_α v`.
    pub u: SpectralField,
}

/// Output of [`integrate`]: velocity snapshots and energy records at the
/// output times, plus the final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub nu: f64,
    pub alpha: f64,
    /// Eigenvalues of the basis the run lives in (length `n`).
    pub eigenvalues: Vec<f64>,
    pub times: Vec<f64>,
    pub u: Vec<SpectralField>,
    pub energy: Vec<EnergyRecord>,
    pub final_state: SolverState,
    pub steps: u64,
    pub cfl_warnings: u64,
    pub last_checkpoint: Option<PathBuf>,
}

/// A configured integrator on a truncated basis.
#[derive(Debug, Clone)]
pub struct Stepper {
    basis: EigenBasis,
    cfg: SolverConfig,
    f0: SpectralField,
    /// `e^{−νλ_j dt}` for the configured step.
    decay: Vec<f64>,
    /// `1 / (1 + α²λ_j)`
    filter: Vec<f64>,
}

impl Stepper {
    /// `basis` may be larger than `cfg.n`; it is truncated to the first `n` modes.
    pub fn new(basis: &EigenBasis, cfg: SolverConfig) -> Result<Self> {
        cfg.validate(basis.len())?;
        let basis = if basis.len() == cfg.n {
            basis.clone()
        } else {
            basis.truncated(cfg.n)?
        };
        let a2 = cfg.alpha * cfg.alpha;
        let f0 = cfg.forcing.profile(&basis, cfg.nu);
        let decay = decay_factors(basis.eigenvalues(), cfg.nu, cfg.dt);
        let filter = basis.eigenvalues().iter().map(|l| 1.0 / (1.0 + a2 * l)).collect();
        Ok(Stepper {
            basis,
            cfg,
            f0,
            decay,
            filter,
        })
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// `P_n f(t)`
    pub fn forcing(&self, t: f64) -> SpectralField {
        &self.f0 * self.cfg.forcing.modulation.factor(t)
    }

    pub fn state_from_u(&self, t: f64, u: SpectralField) -> SolverState {
        let u = u.resized(self.cfg.n);
        let v = u.map_indexed(|j, c| c / self.filter[j]);
        SolverState { t, v, u }
    }

    pub fn state_from_v(&self, t: f64, v: SpectralField) -> SolverState {
        let v = v.resized(self.cfg.n);
        let u = v.map_indexed(|j, c| c * self.filter[j]);
        SolverState { t, v, u }
    }

    /// `P_n u₀` at `t = 0`, or the stored state when resuming.
    pub fn initial_state(&self) -> Result<SolverState> {
        match &self.cfg.initial {
            InitSpec::Checkpoint(path) => {
                let cp = Checkpoint::load(path)?;
                if cp.v.len() != self.cfg.n {
                    return Err(Error::config(format!(
                        "checkpoint has n = {}, run has n = {}",
                        cp.v.len(),
                        self.cfg.n
                    )));
                }
                if cp.nu != self.cfg.nu || cp.alpha != self.cfg.alpha {
                    return Err(Error::config(format!(
                        "checkpoint was written with nu = {}, alpha = {}",
                        cp.nu, cp.alpha
                    )));
                }
                Ok(self.state_from_v(cp.t, cp.v))
            }
            init => Ok(self.state_from_u(0.0, init.coefficients(&self.basis)?)),
        }
    }

    pub fn checkpoint(&self, state: &SolverState) -> Checkpoint {
        Checkpoint {
            nu: self.cfg.nu,
            alpha: self.cfg.alpha,
            t: state.t,
            v: state.v.clone(),
        }
    }

    /// `−P_n B̃(u, v) + P_n f(t)` and the sampled `max|u|`.
    fn explicit_part(&self, u: &SpectralField, v: &SpectralField, t: f64) -> Result<(SpectralField, f64)> {
        let mut out = self.forcing(t);
        if !self.cfg.nonlinear {
            return Ok((out, 0.0));
        }
        let (b, speed) = rotational_with_speed(&self.basis, u, v)?;
        out.axpy(-1.0, &b);
        Ok((out, speed))
    }

    /// `dv/dt = −νΛv − P_n B̃(u, v) + P_n f`.
    pub fn rhs_galerkin(&self, state: &SolverState) -> Result<SpectralField> {
        check_finite(state)?;
        let (mut r, _) = self.explicit_part(&state.u, &state.v, state.t)?;
        let lam = self.basis.eigenvalues();
        for (j, x) in r.coeffs_mut().iter_mut().enumerate() {
            *x -= self.cfg.nu * lam[j] * state.v.coeffs()[j];
        }
        Ok(r)
    }

    /// Convective form `−νΛu − P_n B(u, u) + P_n f` of the `α = 0` system.
    pub fn rhs_convective(&self, state: &SolverState) -> Result<SpectralField> {
        check_finite(state)?;
        let mut r = self.forcing(state.t);
        if self.cfg.nonlinear {
            r.axpy(-1.0, &nonlinear_b(&self.basis, &state.u, &state.u)?);
        }
        let lam = self.basis.eigenvalues();
        for (j, x) in r.coeffs_mut().iter_mut().enumerate() {
            *x -= self.cfg.nu * lam[j] * state.u.coeffs()[j];
        }
        Ok(r)
    }

    /// Advective step limit `cfl · h / max|u|` for the given speed.
    fn cfl_limit(&self, speed: f64) -> f64 {
        if speed > 0.0 {
            self.cfg.cfl * self.basis.grid_spacing() / speed
        } else {
            f64::INFINITY
        }
    }

    /// One step of size `cfg.dt`.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        self.step_counted(state).map(|(s, _)| s)
    }

    /// Step and report whether the advective limit was exceeded.
    fn step_counted(&self, state: &SolverState) -> Result<(SolverState, bool)> {
        check_finite(state)?;
        let dt = self.cfg.dt;
        let (n1, speed) = self.explicit_part(&state.u, &state.v, state.t)?;
        let limit = self.cfl_limit(speed);
        if dt <= limit {
            return Ok((self.heun(state, n1, dt, &self.decay)?, false));
        }
        log::warn!(
            "dt = {dt} exceeds the advective limit {limit:.3e} at t = {} (max|u| = {speed:.3e})",
            state.t
        );
        if !self.cfg.cfl_substep {
            return Ok((self.heun(state, n1, dt, &self.decay)?, true));
        }
        let parts = (dt / limit).ceil() as usize;
        let h = dt / parts as f64;
        let decay = decay_factors(self.basis.eigenvalues(), self.cfg.nu, h);
        let mut s = self.heun(state, n1, h, &decay)?;
        for _ in 1..parts {
            let (n, _) = self.explicit_part(&s.u, &s.v, s.t)?;
            s = self.heun(&s, n, h, &decay)?;
        }
        Ok((s, true))
    }

    /// Integrating-factor Heun step given the first-stage explicit term.
    fn heun(&self, state: &SolverState, n1: SpectralField, dt: f64, decay: &[f64]) -> Result<SolverState> {
        let v = state.v.coeffs();
        let pred: Vec<f64> = (0..v.len()).map(|j| decay[j] * (v[j] + dt * n1.coeffs()[j])).collect();
        let pred = self.state_from_v(state.t + dt, SpectralField::from_vec(pred));
        check_finite(&pred)?;
        let (n2, _) = self.explicit_part(&pred.u, &pred.v, pred.t)?;
        let next: Vec<f64> = (0..v.len())
            .map(|j| decay[j] * v[j] + 0.5 * dt * (decay[j] * n1.coeffs()[j] + n2.coeffs()[j]))
            .collect();
        let next = self.state_from_v(state.t + dt, SpectralField::from_vec(next));
        check_finite(&next)?;
        Ok(next)
    }

    fn snapshot(&self, state: &SolverState) -> EnergySnapshot {
        EnergySnapshot::new(
            self.basis.eigenvalues(),
            self.cfg.alpha,
            state.t,
            &state.u,
            &self.forcing(state.t),
        )
    }

    /// Energy record of `state`, with the balance residual over the step
    /// from `prev` when given.
    pub fn energy(&self, prev: Option<&SolverState>, state: &SolverState) -> EnergyRecord {
        let p = prev.map(|p| self.snapshot(p));
        energy_record(p.as_ref(), &self.snapshot(state), self.cfg.nu)
    }

    /// Run from the initial state to `t_end`.
    pub fn integrate(&self) -> Result<Trajectory> {
        let mut state = self.initial_state()?;
        let steps = self.cfg.steps_from(state.t)?;
        let start_step = (state.t / self.cfg.dt).round() as u64;
        let mut traj = Trajectory {
            nu: self.cfg.nu,
            alpha: self.cfg.alpha,
            eigenvalues: self.basis.eigenvalues().to_vec(),
            times: vec![state.t],
            u: vec![state.u.clone()],
            energy: vec![self.energy(None, &state)],
            final_state: state.clone(),
            steps: 0,
            cfl_warnings: 0,
            last_checkpoint: None,
        };
        if let Some(cp) = &self.cfg.checkpoints {
            std::fs::create_dir_all(&cp.dir)?;
        }
        let mut prev_snap = self.snapshot(&state);
        for k in 1..=steps {
            let (next, warned) = match self.step_counted(&state) {
                Ok(r) => r,
                Err(Error::BlowUp { t, reason, .. }) => {
                    return Err(Error::BlowUp {
                        t,
                        reason,
                        last_checkpoint: traj.last_checkpoint.clone(),
                    })
                }
                Err(e) => return Err(e),
            };
            traj.cfl_warnings += warned as u64;
            state = next;
            let snap = self.snapshot(&state);
            if k as usize % self.cfg.output_cadence == 0 || k == steps {
                traj.times.push(state.t);
                traj.u.push(state.u.clone());
                traj.energy.push(energy_record(Some(&prev_snap), &snap, self.cfg.nu));
            }
            prev_snap = snap;
            if let Some(cp) = &self.cfg.checkpoints {
                if k as usize % cp.every_steps == 0 {
                    let path = cp.dir.join(format!("ckpt_{:010}.nsa1", start_step + k));
                    self.checkpoint(&state).save(&path)?;
                    traj.last_checkpoint = Some(path);
                }
            }
        }
        traj.steps = steps;
        traj.final_state = state;
        Ok(traj)
    }
}

fn decay_factors(eigenvalues: &[f64], nu: f64, dt: f64) -> Vec<f64> {
    eigenvalues.iter().map(|l| (-nu * l * dt).exp()).collect()
}

fn check_finite(state: &SolverState) -> Result<()> {
    let big = state.v.max_abs();
    if !state.v.is_finite() || !state.t.is_finite() {
        return Err(Error::BlowUp {
            t: state.t,
            reason: "non-finite coefficient".into(),
            last_checkpoint: None,
        });
    }
    if big > BLOWUP_THRESHOLD {
        return Err(Error::BlowUp {
            t: state.t,
            reason: format!("coefficient magnitude {big:.3e} exceeds {BLOWUP_THRESHOLD:e}"),
            last_checkpoint: None,
        });
    }
    Ok(())
}

/// Integrate `cfg` on (the first `cfg.n` modes of) `basis`.
pub fn integrate(basis: &EigenBasis, cfg: &SolverConfig) -> Result<Trajectory> {
    Stepper::new(basis, cfg.clone())?.integrate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> EigenBasis {
        EigenBasis::torus_auto(32).unwrap()
    }

    #[test]
    fn linear_step_is_exact_propagator() {
        let b = basis();
        let cfg = SolverConfig {
            n: 32,
            nu: 0.7,
            dt: 0.01,
            nonlinear: false,
            ..Default::default()
        };
        let st = Stepper::new(&b, cfg).unwrap();
        let u = InitSpec::SpectralDecay { s: 1.0, seed: 1, amplitude: 1.0 }
            .coefficients(&b)
            .unwrap();
        let s0 = st.state_from_u(0.0, u.clone());
        let s1 = st.step(&s0).unwrap();
        for j in 0..32 {
            let want = u.coeffs()[j] * (-0.7 * b.eigenvalues()[j] * 0.01).exp();
            assert!((s1.u.coeffs()[j] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn single_mode_linear_rhs() {
        let b = basis();
        let cfg = SolverConfig { n: 32, nu: 2.0, nonlinear: false, ..Default::default() };
        let st = Stepper::new(&b, cfg).unwrap();
        let s = st.state_from_u(0.0, SpectralField::unit(32, 9));
        let r = st.rhs_galerkin(&s).unwrap();
        assert_eq!(r.coeffs()[9], -2.0 * b.eigenvalues()[9]);
        assert_eq!(r.max_abs(), r.coeffs()[9].abs());
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let b = basis();
        let cfg = SolverConfig {
            n: 16,
            t_end: 0.0,
            initial: InitSpec::SpectralDecay { s: 1.75, seed: 2, amplitude: 1.0 },
            ..Default::default()
        };
        let traj = integrate(&b, &cfg).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.steps, 0);
        assert_eq!(traj.final_state.u.len(), 16);
    }

    #[test]
    fn nan_state_is_a_blow_up() {
        let b = basis();
        let st = Stepper::new(&b, SolverConfig { n: 8, ..Default::default() }).unwrap();
        let mut s = st.state_from_u(0.0, SpectralField::zeros(8));
        s.v.coeffs_mut()[0] = f64::NAN;
        assert!(matches!(st.step(&s), Err(Error::BlowUp { .. })));
        s.v.coeffs_mut()[0] = 1e13;
        assert!(matches!(st.step(&s), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn substepping_keeps_the_step_size_contract() {
        let b = basis();
        let cfg = SolverConfig {
            n: 32,
            dt: 0.5,
            cfl_substep: true,
            initial: InitSpec::SpectralDecay { s: 1.0, seed: 4, amplitude: 5.0 },
            ..Default::default()
        };
        let st = Stepper::new(&b, cfg).unwrap();
        let s0 = st.initial_state().unwrap();
        let (s1, warned) = st.step_counted(&s0).unwrap();
        assert!(warned);
        assert!((s1.t - 0.5).abs() < 1e-15);
        assert!(s1.v.is_finite());
    }
}
