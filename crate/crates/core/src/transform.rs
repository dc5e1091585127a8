//! Moving fields between coefficient space and the physical grid.
//!
//! On the torus the grid is the uniform `m × m` periodic grid on
//! `[0, 2π)²` and the transforms are FFT based, so `analyze` is exact
//! quadrature for every product of retained modes.  On the square the
//! grid is the staggered (MAC) edge grid the eigenmodes live on, and
//! `analyze` is the edge quadrature in which the modes are orthonormal.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::eigenbasis::{EigenBasis, Parity, TorusMode};
use crate::eigenbasis::Modes;
use crate::error::{Error, Result};
use crate::field::SpectralField;

/// Physical-space layout of a [`GridField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLayout {
    /// `m × m` periodic nodes, row-major `[y][x]`.
    Periodic { m: usize },
    /// Unit square with `intervals` cells per side; `ux` lives on the
    /// `(intervals + 1) × intervals` vertical edges, `uy` on the
    /// `intervals × (intervals + 1)` horizontal edges.
    Staggered { intervals: usize },
}

impl GridLayout {
    pub fn x_len(&self) -> usize {
        match *self {
            GridLayout::Periodic { m } => m * m,
            GridLayout::Staggered { intervals } => (intervals + 1) * intervals,
        }
    }

    pub fn y_len(&self) -> usize {
        self.x_len()
    }
}

/// A velocity field sampled on a physical grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub layout: GridLayout,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl GridField {
    pub fn zeros(layout: GridLayout) -> Self {
        GridField {
            layout,
            ux: vec![0.0; layout.x_len()],
            uy: vec![0.0; layout.y_len()],
        }
    }

    pub fn max_speed(&self) -> f64 {
        match self.layout {
            GridLayout::Periodic { .. } => self
                .ux
                .iter()
                .zip(&self.uy)
                .map(|(a, b)| a.hypot(*b))
                .fold(0.0, f64::max),
            // components are staggered; bound the speed componentwise
            GridLayout::Staggered { .. } => {
                let mx = self.ux.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let my = self.uy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                mx.hypot(my)
            }
        }
    }
}

pub fn layout_of(basis: &EigenBasis) -> GridLayout {
    match basis.modes() {
        Modes::Torus { transform, .. } => GridLayout::Periodic { m: transform.resolution() },
        Modes::Square(sq) => GridLayout::Staggered { intervals: sq.intervals() },
    }
}

/// `Σ_j c_j w_j` sampled on the basis grid.
pub fn synthesize(basis: &EigenBasis, u: &SpectralField) -> Result<GridField> {
    check_len(basis, u)?;
    Ok(match basis.modes() {
        Modes::Torus { transform, .. } => {
            let (sx, sy) = transform.spectrum(u.coeffs());
            GridField {
                layout: GridLayout::Periodic { m: transform.resolution() },
                ux: transform.to_grid(sx),
                uy: transform.to_grid(sy),
            }
        }
        Modes::Square(sq) => sq.synthesize(u.coeffs()),
    })
}

/// `c_j = ⟨g, w_j⟩` by quadrature on the basis grid.  Components of `g`
/// outside the span of the basis (in particular gradients) are discarded,
/// so this is also the Leray projection followed by `P_n`.
pub fn analyze(basis: &EigenBasis, g: &GridField) -> Result<SpectralField> {
    if g.layout != layout_of(basis) {
        return Err(Error::config(format!(
            "grid layout {:?} does not match basis layout {:?}",
            g.layout,
            layout_of(basis)
        )));
    }
    Ok(match basis.modes() {
        Modes::Torus { transform, .. } => {
            let sx = transform.from_grid(&g.ux);
            let sy = transform.from_grid(&g.uy);
            SpectralField::from_vec(transform.project(&sx, &sy))
        }
        Modes::Square(sq) => SpectralField::from_vec(sq.analyze(g)),
    })
}

pub(crate) fn check_len(basis: &EigenBasis, u: &SpectralField) -> Result<()> {
    if u.len() != basis.len() {
        return Err(Error::config(format!(
            "field has {} coefficients but basis has {} modes",
            u.len(),
            basis.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct ModeSlot {
    plus: usize,
    minus: usize,
    dir: [f64; 2],
    parity: Parity,
}

/// FFT machinery for the torus basis.  Holds only immutable plans and
/// index tables; every call allocates its own buffers.
#[derive(Clone)]
pub(crate) struct TorusTransform {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    slots: Vec<ModeSlot>,
}

impl std::fmt::Debug for TorusTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusTransform")
            .field("m", &self.m)
            .field("modes", &self.slots.len())
            .finish()
    }
}

pub(crate) type Spectrum = Vec<Complex64>;

impl TorusTransform {
    pub(crate) fn new(modes: &[TorusMode], m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let wrap = |k: i64| k.rem_euclid(m as i64) as usize;
        let slots = modes
            .iter()
            .map(|mode| {
                let [kx, ky] = mode.k;
                ModeSlot {
                    plus: wrap(ky) * m + wrap(kx),
                    minus: wrap(-ky) * m + wrap(-kx),
                    dir: mode.direction(),
                    parity: mode.parity,
                }
            })
            .collect();
        TorusTransform {
            m,
            forward,
            inverse,
            slots,
        }
    }

    pub(crate) fn resolution(&self) -> usize {
        self.m
    }

    /// Signed wavenumber of a grid index.
    pub(crate) fn wavenumber(&self, idx: usize) -> f64 {
        if idx <= self.m / 2 {
            idx as f64
        } else {
            idx as f64 - self.m as f64
        }
    }

    /// Complex Fourier coefficients `û(k)` of both velocity components,
    /// with `u(x) = Σ_k û(k) e^{ik·x}`.
    pub(crate) fn spectrum(&self, coeffs: &[f64]) -> (Spectrum, Spectrum) {
        let size = self.m * self.m;
        let mut sx = vec![Complex64::new(0.0, 0.0); size];
        let mut sy = vec![Complex64::new(0.0, 0.0); size];
        let scale = 0.5 / crate::eigenbasis::torus_mode_norm();
        for (slot, &c) in self.slots.iter().zip(coeffs) {
            let a = c * scale;
            let (plus, minus) = match slot.parity {
                Parity::Cos => (Complex64::new(a, 0.0), Complex64::new(a, 0.0)),
                Parity::Sin => (Complex64::new(0.0, -a), Complex64::new(0.0, a)),
            };
            sx[slot.plus] += plus * slot.dir[0];
            sy[slot.plus] += plus * slot.dir[1];
            sx[slot.minus] += minus * slot.dir[0];
            sy[slot.minus] += minus * slot.dir[1];
        }
        (sx, sy)
    }

    /// Multiply a spectrum by `i k_axis` (axis 0 = x, 1 = y).
    pub(crate) fn derivative(&self, s: &[Complex64], axis: usize) -> Spectrum {
        let m = self.m;
        s.iter()
            .enumerate()
            .map(|(idx, &c)| {
                let k = if axis == 0 {
                    self.wavenumber(idx % m)
                } else {
                    self.wavenumber(idx / m)
                };
                c * Complex64::new(0.0, k)
            })
            .collect()
    }

    pub(crate) fn to_grid(&self, mut s: Spectrum) -> Vec<f64> {
        self.fft2(&mut s, &self.inverse);
        s.into_iter().map(|c| c.re).collect()
    }

    pub(crate) fn from_grid(&self, values: &[f64]) -> Spectrum {
        let mut s: Spectrum = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut s, &self.forward);
        let norm = 1.0 / (self.m * self.m) as f64;
        s.iter_mut().for_each(|c| *c *= norm);
        s
    }

    /// `⟨g, w_j⟩` from the Fourier coefficients of `g`.  Dotting with
    /// `k⊥/|k|` removes the gradient part (Leray projection).
    pub(crate) fn project(&self, sx: &[Complex64], sy: &[Complex64]) -> Vec<f64> {
        let scale = 4.0 * PI * PI / crate::eigenbasis::torus_mode_norm();
        self.slots
            .iter()
            .map(|slot| {
                let gx = sx[slot.plus];
                let gy = sy[slot.plus];
                let along = gx * slot.dir[0] + gy * slot.dir[1];
                match slot.parity {
                    Parity::Cos => scale * along.re,
                    Parity::Sin => -scale * along.im,
                }
            })
            .collect()
    }

    fn fft2(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        plan.process(data);
        let mut t = vec![Complex64::new(0.0, 0.0); m * m];
        transpose(data, &mut t, m);
        plan.process(&mut t);
        transpose(&t, data, m);
    }

    pub(crate) fn mode_grid(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let mut coeffs = vec![0.0; self.slots.len()];
        coeffs[j] = 1.0;
        let (sx, sy) = self.spectrum(&coeffs);
        (self.to_grid(sx), self.to_grid(sy))
    }

    /// Gram matrix defect computed by grid quadrature.
    pub(crate) fn gram_defect(&self, modes: &[TorusMode]) -> f64 {
        let n = modes.len();
        let grids: Vec<_> = (0..n).map(|j| self.mode_grid(j)).collect();
        let h = 2.0 * PI / self.m as f64;
        let weight = h * h;
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dot: f64 = grids[i]
                    .0
                    .iter()
                    .zip(&grids[j].0)
                    .chain(grids[i].1.iter().zip(&grids[j].1))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * weight;
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((dot - target).abs());
            }
        }
        defect
    }

    /// Largest pointwise spectral divergence over all modes.
    pub(crate) fn max_divergence(&self, modes: &[TorusMode]) -> f64 {
        (0..modes.len())
            .map(|j| {
                let (gx, gy) = self.mode_grid(j);
                let dx = self.to_grid(self.derivative(&self.from_grid(&gx), 0));
                let dy = self.to_grid(self.derivative(&self.from_grid(&gy), 1));
                dx.iter().zip(&dy).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    for r in 0..m {
        for c in 0..m {
            dst[c * m + r] = src[r * m + c];
        }
    }
}
