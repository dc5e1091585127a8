//! Stokes-operator eigenpairs used as the Galerkin basis.
//!
//! Two domains are supported:
//!
//! * the 2π-periodic, mean-free torus, where the Stokes operator coincides
//!   with `-Δ` and the eigenfunctions are divergence-free real Fourier modes;
//! * the unit square with no-slip walls, where the eigenpairs are computed
//!   numerically from the clamped-plate stream-function problem.
//!
//! A built [`EigenBasis`] is immutable and can be shared between threads.

mod file;
mod square;
mod torus;

pub use file::{read_basis, write_basis};
pub use square::{SquareModes, SquareSolverOptions};
pub use torus::{Parity, TorusMode};
pub(crate) use torus::mode_norm as torus_mode_norm;

use crate::error::{Error, Result};
use crate::transform::TorusTransform;

/// Orthonormality defect tolerated for either domain.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Spectral divergence residual tolerated on the torus.
pub const TORUS_DIVERGENCE_TOL: f64 = 1e-12;
/// Relative (`h · max|div w| / max|w|`) divergence residual tolerated on the square.
pub const SQUARE_DIVERGENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Torus,
    NoSlipSquare,
}

impl DomainKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DomainKind::Torus => "torus",
            DomainKind::NoSlipSquare => "square",
        }
    }
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(DomainKind::Torus),
            "square" => Ok(DomainKind::NoSlipSquare),
            other => Err(Error::config(format!("unknown domain '{other}' (expected torus|square)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Modes {
    Torus {
        modes: Vec<TorusMode>,
        transform: TorusTransform,
    },
    Square(SquareModes),
}

/// Ordered Stokes eigenpairs `(λ_j, w_j)` with `λ_1 ≤ λ_2 ≤ …`.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    eigenvalues: Vec<f64>,
    modes: Modes,
}

impl EigenBasis {
    /// Divergence-free Fourier basis of the mean-free 2π-torus.
    ///
    /// `grid_resolution` is the number of points per direction of the
    /// physical grid used for nonlinear products; it must satisfy the
    /// 2/3 dealiasing rule for the requested modes (see
    /// [`EigenBasis::min_torus_grid`]).
    pub fn torus(n_modes: usize, grid_resolution: usize) -> Result<Self> {
        torus::build(n_modes, grid_resolution)
    }

    /// Smallest alias-free grid for the first `n_modes` torus modes.
    pub fn min_torus_grid(n_modes: usize) -> usize {
        torus::min_grid(&torus::enumerate(n_modes))
    }

    /// Torus basis on the smallest alias-free grid.
    pub fn torus_auto(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::config("n_modes must be at least 1"));
        }
        Self::torus(n_modes, Self::min_torus_grid(n_modes))
    }

    /// No-slip Stokes eigenpairs of the unit square on a uniform mesh with
    /// `mesh_resolution` intervals per side.
    pub fn square(n_modes: usize, mesh_resolution: usize) -> Result<Self> {
        square::build(n_modes, mesh_resolution, &SquareSolverOptions::default())
    }

    pub fn square_with(n_modes: usize, mesh_resolution: usize, opts: &SquareSolverOptions) -> Result<Self> {
        square::build(n_modes, mesh_resolution, opts)
    }

    pub(crate) fn from_parts(eigenvalues: Vec<f64>, modes: Modes) -> Self {
        EigenBasis { eigenvalues, modes }
    }

    pub fn domain(&self) -> DomainKind {
        match self.modes {
            Modes::Torus { .. } => DomainKind::Torus,
            Modes::Square(_) => DomainKind::NoSlipSquare,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `λ_j` with 1-based `j`, matching the usual eigenvalue numbering.
    pub fn lambda(&self, j: usize) -> f64 {
        self.eigenvalues[j - 1]
    }

    pub fn lambda_1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Points per direction of the physical grid (torus), or mesh
    /// intervals per side (square).
    pub fn grid_resolution(&self) -> usize {
        match &self.modes {
            Modes::Torus { transform, .. } => transform.resolution(),
            Modes::Square(sq) => sq.intervals(),
        }
    }

    /// Grid spacing of the physical grid.
    pub fn grid_spacing(&self) -> f64 {
        match &self.modes {
            Modes::Torus { transform, .. } => 2.0 * std::f64::consts::PI / transform.resolution() as f64,
            Modes::Square(sq) => sq.spacing(),
        }
    }

    pub fn torus_modes(&self) -> Option<&[TorusMode]> {
        match &self.modes {
            Modes::Torus { modes, .. } => Some(modes),
            Modes::Square(_) => None,
        }
    }

    pub fn square_modes(&self) -> Option<&SquareModes> {
        match &self.modes {
            Modes::Square(sq) => Some(sq),
            Modes::Torus { .. } => None,
        }
    }

    pub(crate) fn modes(&self) -> &Modes {
        &self.modes
    }

    /// The first `n` eigenpairs.  On the torus the physical grid shrinks to
    /// the smallest alias-free size for the retained modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::config(format!(
                "truncation level {n} outside 1..={}",
                self.len()
            )));
        }
        match &self.modes {
            Modes::Torus { modes, .. } => {
                let kept = modes[..n].to_vec();
                let grid = torus::min_grid(&kept);
                torus::from_modes(kept, grid)
            }
            Modes::Square(sq) => Ok(EigenBasis {
                eigenvalues: self.eigenvalues[..n].to_vec(),
                modes: Modes::Square(sq.truncated(n)),
            }),
        }
    }

    /// Check the basis invariants and report every defect.
    pub fn validate(&self) -> ValidationReport {
        validate_basis(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub domain: DomainKind,
    pub n_modes: usize,
    /// `max_{i,j} |⟨w_i, w_j⟩ − δ_ij|`
    pub orthonormality_defect: f64,
    pub divergence_residual: f64,
    /// Largest tangential velocity half a cell from a wall divided by the
    /// per-mode bound `h · λ_j^{1/2} · max|w_j|` (square only, 0 on the torus).
    pub boundary_residual: f64,
    pub eigenvalues_positive: bool,
    pub eigenvalues_monotone: bool,
    pub orthonormality_tol: f64,
    pub divergence_tol: f64,
}

impl ValidationReport {
    pub fn orthonormal(&self) -> bool {
        self.orthonormality_defect <= self.orthonormality_tol
    }

    pub fn divergence_free(&self) -> bool {
        self.divergence_residual <= self.divergence_tol
    }

    pub fn boundary_ok(&self) -> bool {
        self.boundary_residual <= 1.0
    }

    pub fn passed(&self) -> bool {
        self.orthonormal()
            && self.divergence_free()
            && self.boundary_ok()
            && self.eigenvalues_positive
            && self.eigenvalues_monotone
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let flag = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(f, "domain: {} ({} modes)", self.domain.as_str(), self.n_modes)?;
        writeln!(
            f,
            "orthonormality defect: {:.3e} [{}]",
            self.orthonormality_defect,
            flag(self.orthonormal())
        )?;
        writeln!(
            f,
            "divergence residual:   {:.3e} [{}]",
            self.divergence_residual,
            flag(self.divergence_free())
        )?;
        writeln!(
            f,
            "boundary residual:     {:.3e} [{}]",
            self.boundary_residual,
            flag(self.boundary_ok())
        )?;
        writeln!(f, "eigenvalues positive:  [{}]", flag(self.eigenvalues_positive))?;
        write!(f, "eigenvalues monotone:  [{}]", flag(self.eigenvalues_monotone))
    }
}

pub fn validate_basis(basis: &EigenBasis) -> ValidationReport {
    let ev = basis.eigenvalues();
    let eigenvalues_positive = ev.iter().all(|&l| l > 0.0 && l.is_finite());
    let eigenvalues_monotone = ev.windows(2).all(|w| w[0] <= w[1]);

    let (orthonormality_defect, divergence_residual, boundary_residual, divergence_tol) = match basis.modes() {
        Modes::Torus { modes, transform } => (
            transform.gram_defect(modes),
            transform.max_divergence(modes),
            0.0,
            TORUS_DIVERGENCE_TOL,
        ),
        Modes::Square(sq) => (
            sq.gram_defect(),
            sq.max_relative_divergence(),
            sq.boundary_residual(ev),
            SQUARE_DIVERGENCE_TOL,
        ),
    };

    ValidationReport {
        domain: basis.domain(),
        n_modes: basis.len(),
        orthonormality_defect,
        divergence_residual,
        boundary_residual,
        eigenvalues_positive,
        eigenvalues_monotone,
        orthonormality_tol: ORTHONORMALITY_TOL,
        divergence_tol,
    }
}
