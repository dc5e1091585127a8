//! Spectral field algebra in the Stokes eigenbasis.
//!
//! A [`SpectralField`] stores `c_j = ⟨u, w_j⟩`.  Every linear operator the
//! solver needs (fractional Stokes powers, the Helmholtz resolvent, Galerkin
//! projections) is diagonal in this representation.

use std::ops::{Add, Mul, Sub};

use crate::eigenbasis::EigenBasis;
use crate::error::{Error, Result};

/// Velocity field as coefficients over an [`EigenBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(n: usize) -> Self {
        SpectralField { coeffs: vec![0.0; n] }
    }

    pub fn from_vec(coeffs: Vec<f64>) -> Self {
        SpectralField { coeffs }
    }

    /// The `j`-th basis vector (0-based).
    pub fn unit(n: usize, j: usize) -> Self {
        let mut f = Self::zeros(n);
        f.coeffs[j] = 1.0;
        f
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Zero-pad or truncate to `n` coefficients.
    pub fn resized(&self, n: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(n, 0.0);
        SpectralField { coeffs: c }
    }

    /// `self += a · other` on the common prefix.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        self.coeffs.iter_mut().zip(&other.coeffs).for_each(|(x, y)| *x += a * y);
    }

    pub fn map_indexed(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        SpectralField {
            coeffs: self.coeffs.iter().enumerate().map(|(j, &c)| f(j, c)).collect(),
        }
    }
}

/// Union-of-supports combination: missing coefficients count as zero.
fn combine(a: &SpectralField, b: &SpectralField, f: impl Fn(f64, f64) -> f64) -> SpectralField {
    let n = a.len().max(b.len());
    let get = |v: &SpectralField, j: usize| v.coeffs.get(j).copied().unwrap_or(0.0);
    SpectralField {
        coeffs: (0..n).map(|j| f(get(a, j), get(b, j))).collect(),
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        combine(self, rhs, |x, y| x + y)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        combine(self, rhs, |x, y| x - y)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.map_indexed(|_, c| c * rhs)
    }
}

/// `⟨u, v⟩ = Σ c_j d_j` (Parseval; coefficients beyond the shorter field are 0).
pub fn inner(u: &SpectralField, v: &SpectralField) -> f64 {
    u.coeffs.iter().zip(&v.coeffs).map(|(a, b)| a * b).sum()
}

/// `‖A^β u‖ = (Σ λ_j^{2β} c_j²)^{1/2}`.
pub fn norm_beta(basis: &EigenBasis, u: &SpectralField, beta: f64) -> f64 {
    assert!(u.len() <= basis.len(), "field longer than basis");
    u.coeffs
        .iter()
        .zip(basis.eigenvalues())
        .map(|(c, l)| l.powf(2.0 * beta) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// `‖u‖²` shortcut.
pub fn norm_sq(u: &SpectralField) -> f64 {
    inner(u, u)
}

fn check(basis: &EigenBasis, u: &SpectralField) -> Result<()> {
    if u.len() > basis.len() {
        return Err(Error::config(format!(
            "field has {} coefficients, basis only {}",
            u.len(),
            basis.len()
        )));
    }
    if !u.is_finite() {
        return Err(Error::arg("field has non-finite coefficients"));
    }
    Ok(())
}

/// `A^β u = Σ λ_j^β c_j w_j`.
pub fn apply_a_power(basis: &EigenBasis, u: &SpectralField, beta: f64) -> Result<SpectralField> {
    check(basis, u)?;
    let lam = basis.eigenvalues();
    Ok(u.map_indexed(|j, c| if beta == 0.0 { c } else { lam[j].powf(beta) * c }))
}

fn check_range(u: &SpectralField, n: usize) -> Result<()> {
    if n > u.len() {
        return Err(Error::arg(format!("projection level {n} exceeds field size {}", u.len())));
    }
    Ok(())
}

/// `P_n u`: keep the first `n` coefficients.
pub fn project(u: &SpectralField, n: usize) -> Result<SpectralField> {
    check_range(u, n)?;
    Ok(u.map_indexed(|j, c| if j < n { c } else { 0.0 }))
}

/// `P_n^⊥ u = u − P_n u`.
pub fn project_perp(u: &SpectralField, n: usize) -> Result<SpectralField> {
    check_range(u, n)?;
    Ok(u.map_indexed(|j, c| if j < n { 0.0 } else { c }))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::arg(format!("alpha must be a finite nonnegative length, got {alpha}")));
    }
    Ok(())
}

/// Helmholtz filter `J_α u = (I + α²A)⁻¹ u`.
pub fn helmholtz_filter(basis: &EigenBasis, u: &SpectralField, alpha: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    check(basis, u)?;
    let a2 = alpha * alpha;
    let lam = basis.eigenvalues();
    Ok(u.map_indexed(|j, c| c / (1.0 + a2 * lam[j])))
}

/// `(I + α²A) u`, the exact inverse of [`helmholtz_filter`].
pub fn apply_helmholtz(basis: &EigenBasis, u: &SpectralField, alpha: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    check(basis, u)?;
    let a2 = alpha * alpha;
    let lam = basis.eigenvalues();
    Ok(u.map_indexed(|j, c| c * (1.0 + a2 * lam[j])))
}
