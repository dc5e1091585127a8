use super::{EigenBasis, Modes};
use crate::error::{Error, Result};
use crate::transform::TorusTransform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Cos = 0,
    Sin = 1,
}

/// A real divergence-free Fourier mode
/// `w = (k⊥/|k|) · cos(k·x) / (π√2)` or the same with `sin`,
/// where `k⊥ = (−k_y, k_x)`.  `k` is the canonical representative of `±k`
/// (`k_x > 0`, or `k_x = 0` and `k_y > 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusMode {
    pub k: [i64; 2],
    pub parity: Parity,
}

impl TorusMode {
    pub fn eigenvalue(&self) -> f64 {
        (self.k[0] * self.k[0] + self.k[1] * self.k[1]) as f64
    }

    /// Unit velocity direction `k⊥/|k|`.
    pub fn direction(&self) -> [f64; 2] {
        let norm = self.eigenvalue().sqrt();
        [-(self.k[1] as f64) / norm, self.k[0] as f64 / norm]
    }

    fn sort_key(&self) -> (i64, i64, i64, Parity) {
        let [kx, ky] = self.k;
        (kx * kx + ky * ky, kx, ky, self.parity)
    }
}

/// L² normalization constant: `‖cos(k·x)‖ = π√2` on `[0, 2π]²`.
pub(crate) fn mode_norm() -> f64 {
    std::f64::consts::PI * std::f64::consts::SQRT_2
}

/// First `n_modes` modes in the order `(|k|², k_x, k_y, parity)`.
pub(crate) fn enumerate(n_modes: usize) -> Vec<TorusMode> {
    if n_modes == 0 {
        return Vec::new();
    }
    // Each canonical lattice point carries two modes; a disc of radius R
    // holds about πR²/2 canonical points.
    let mut radius = 1i64;
    loop {
        let mut modes = Vec::new();
        let r2 = radius * radius;
        for kx in 0..=radius {
            for ky in -radius..=radius {
                let canonical = kx > 0 || (kx == 0 && ky > 0);
                if canonical && kx * kx + ky * ky <= r2 {
                    for parity in [Parity::Cos, Parity::Sin] {
                        modes.push(TorusMode { k: [kx, ky], parity });
                    }
                }
            }
        }
        modes.sort_by_key(TorusMode::sort_key);
        // Only shells strictly inside the disc are complete.
        let complete = modes.iter().take_while(|m| m.eigenvalue() <= r2 as f64).count();
        if complete >= n_modes {
            modes.truncate(n_modes);
            return modes;
        }
        radius *= 2;
    }
}

/// Largest Cartesian wavenumber among the modes.
pub(crate) fn max_wavenumber(modes: &[TorusMode]) -> usize {
    modes
        .iter()
        .map(|m| m.k[0].unsigned_abs().max(m.k[1].unsigned_abs()))
        .max()
        .unwrap_or(0) as usize
}

/// Quadratic products of fields with wavenumbers up to `K` are projected
/// back alias-free when the grid has more than `3K` points (2/3 rule).
pub(crate) fn min_grid(modes: &[TorusMode]) -> usize {
    let need = 3 * max_wavenumber(modes) + 1;
    need + need % 2
}

pub(super) fn build(n_modes: usize, grid_resolution: usize) -> Result<EigenBasis> {
    if n_modes == 0 {
        return Err(Error::config("n_modes must be at least 1"));
    }
    from_modes(enumerate(n_modes), grid_resolution)
}

pub(super) fn from_modes(modes: Vec<TorusMode>, grid_resolution: usize) -> Result<EigenBasis> {
    let k_max = max_wavenumber(&modes);
    if grid_resolution <= 3 * k_max {
        return Err(Error::config(format!(
            "grid resolution {grid_resolution} cannot dealias wavenumber {k_max}; need at least {}",
            3 * k_max + 1
        )));
    }
    let eigenvalues = modes.iter().map(TorusMode::eigenvalue).collect();
    let transform = TorusTransform::new(&modes, grid_resolution);
    Ok(EigenBasis::from_parts(eigenvalues, Modes::Torus { modes, transform }))
}
