//! Shared test helpers: random fields and an exact convolution oracle for
//! the torus bilinear forms.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use nsalpha::eigenbasis::Parity;
use nsalpha::{EigenBasis, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(n: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    SpectralField::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

pub fn norm(u: &SpectralField) -> f64 {
    u.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `|a − b| / scale`, with `scale` the natural size of the compared terms.
pub fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

type Spectrum = HashMap<(i64, i64), [Complex64; 2]>;

/// `u(x) = Σ_k û(k) e^{ik·x}` for a coefficient vector, built from the
/// mode formulas `w = (−k_y, k_x)/|k| · {cos, sin}(k·x) / (π√2)`.
fn spectrum(basis: &EigenBasis, u: &SpectralField) -> Spectrum {
    let modes = basis.torus_modes().expect("torus basis");
    let mut s: Spectrum = HashMap::new();
    let norm = PI * 2f64.sqrt();
    for (m, &c) in modes.iter().zip(u.coeffs()) {
        let [kx, ky] = m.k;
        let len = ((kx * kx + ky * ky) as f64).sqrt();
        let e = [-(ky as f64) / len, kx as f64 / len];
        // cos θ = (e^{iθ} + e^{−iθ})/2, sin θ = (e^{iθ} − e^{−iθ})/(2i)
        let (plus, minus) = match m.parity {
            Parity::Cos => (Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)),
            Parity::Sin => (Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5)),
        };
        for (key, w) in [((kx, ky), plus), ((-kx, -ky), minus)] {
            let entry = s.entry(key).or_insert([Complex64::new(0.0, 0.0); 2]);
            entry[0] += w * c * e[0] / norm;
            entry[1] += w * c * e[1] / norm;
        }
    }
    s
}

/// Coefficients `⟨g, w_j⟩ = 4π² Σ_k ĝ(k)·conj(ŵ_j(k))`.
fn project(basis: &EigenBasis, g: &Spectrum) -> SpectralField {
    let n = basis.len();
    SpectralField::from_vec(
        (0..n)
            .map(|j| {
                let w = spectrum(basis, &SpectralField::unit(n, j));
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, wk) in &w {
                    if let Some(gk) = g.get(k) {
                        acc += gk[0] * wk[0].conj() + gk[1] * wk[1].conj();
                    }
                }
                4.0 * PI * PI * acc.re
            })
            .collect(),
    )
}

fn i_times(k: (i64, i64)) -> [Complex64; 2] {
    [Complex64::new(0.0, k.0 as f64), Complex64::new(0.0, k.1 as f64)]
}

/// Direct triple sum over wavevector triads, for the form selected by `term`.
fn convolve(
    basis: &EigenBasis,
    u: &SpectralField,
    v: &SpectralField,
    term: impl Fn((i64, i64), &[Complex64; 2], (i64, i64), &[Complex64; 2]) -> [Complex64; 2],
) -> SpectralField {
    let (su, sv) = (spectrum(basis, u), spectrum(basis, v));
    let mut g: Spectrum = HashMap::new();
    for (&p, up) in &su {
        for (&q, vq) in &sv {
            let k = (p.0 + q.0, p.1 + q.1);
            let t = term(p, up, q, vq);
            let e = g.entry(k).or_insert([Complex64::new(0.0, 0.0); 2]);
            e[0] += t[0];
            e[1] += t[1];
        }
    }
    project(basis, &g)
}

/// `P((u·∇)v)`
pub fn oracle_b(basis: &EigenBasis, u: &SpectralField, v: &SpectralField) -> SpectralField {
    convolve(basis, u, v, |_, up, q, vq| {
        let iq = i_times(q);
        let a = up[0] * iq[0] + up[1] * iq[1];
        [a * vq[0], a * vq[1]]
    })
}

/// `−P(u × ∇×v)`: `(−u_y ω, u_x ω)` with `ω = ∂_x v_y − ∂_y v_x`
pub fn oracle_btilde(basis: &EigenBasis, u: &SpectralField, v: &SpectralField) -> SpectralField {
    convolve(basis, u, v, |_, up, q, vq| {
        let iq = i_times(q);
        let omega = iq[0] * vq[1] - iq[1] * vq[0];
        [-up[1] * omega, up[0] * omega]
    })
}

/// `P((∇u)ᵀ v)`: component `i` is `Σ_j ∂_i u_j v_j`
pub fn oracle_bstar(basis: &EigenBasis, u: &SpectralField, v: &SpectralField) -> SpectralField {
    convolve(basis, u, v, |p, up, _, vq| {
        let ip = i_times(p);
        let dot = up[0] * vq[0] + up[1] * vq[1];
        [ip[0] * dot, ip[1] * dot]
    })
}
