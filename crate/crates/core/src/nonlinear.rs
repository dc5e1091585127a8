//! The three bilinear convection operators, evaluated pseudospectrally:
//!
//! * `B(u, v)  =  P((u·∇)v)`
//! * `B̃(u, v) = −P(u × (∇×v))`, in 2D `(−u_y ω, u_x ω)` with `ω = ∂_x v_y − ∂_y v_x`
//! * `B⋆(u, v) =  P((∇u)ᵀ v)`, component `i` is `Σ_j ∂_i u_j v_j`
//!
//! Fields are synthesized on the physical grid together with their
//! gradients, multiplied pointwise, and projected back onto the basis.  On
//! the torus the grid satisfies the 2/3 rule, so the result is the exact
//! Galerkin coefficient of the projected product.  On the square the
//! products are formed at mesh nodes from averaged edge velocities and
//! projected by edge quadrature (second-order accurate).

use crate::eigenbasis::{EigenBasis, Modes};
use crate::error::Result;
use crate::field::SpectralField;
use crate::transform::{check_len, GridField, GridLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convection {
    /// `B(u, v) = P((u·∇)v)`
    Advective,
    /// `B̃(u, v) = −P(u × ∇×v)`
    Rotational,
    /// `B⋆(u, v) = P((∇u)ᵀv)`
    Transposed,
}

/// A field and its first derivatives at the product points.
struct Sampled {
    x: Vec<f64>,
    y: Vec<f64>,
    /// `[∂_x u_x, ∂_y u_x, ∂_x u_y, ∂_y u_y]`, empty when not requested.
    grad: Option<[Vec<f64>; 4]>,
}

fn sample(basis: &EigenBasis, u: &SpectralField, with_grad: bool) -> Sampled {
    match basis.modes() {
        Modes::Torus { transform, .. } => {
            let (sx, sy) = transform.spectrum(u.coeffs());
            let grad = with_grad.then(|| {
                [
                    transform.to_grid(transform.derivative(&sx, 0)),
                    transform.to_grid(transform.derivative(&sx, 1)),
                    transform.to_grid(transform.derivative(&sy, 0)),
                    transform.to_grid(transform.derivative(&sy, 1)),
                ]
            });
            Sampled {
                x: transform.to_grid(sx),
                y: transform.to_grid(sy),
                grad,
            }
        }
        Modes::Square(sq) => {
            let (x, y) = sq.edges_to_nodes(&sq.synthesize(u.coeffs()));
            let grad = with_grad.then(|| {
                let (xx, yx) = sq.nodal_gradient(&x);
                let (xy, yy) = sq.nodal_gradient(&y);
                [xx, yx, xy, yy]
            });
            Sampled { x, y, grad }
        }
    }
}

fn finish(basis: &EigenBasis, gx: Vec<f64>, gy: Vec<f64>) -> SpectralField {
    match basis.modes() {
        Modes::Torus { transform, .. } => {
            let sx = transform.from_grid(&gx);
            let sy = transform.from_grid(&gy);
            SpectralField::from_vec(transform.project(&sx, &sy))
        }
        Modes::Square(sq) => SpectralField::from_vec(sq.analyze(&sq.nodes_to_edges(&gx, &gy))),
    }
}

fn product(kind: Convection, u: &Sampled, v: &Sampled) -> (Vec<f64>, Vec<f64>) {
    let n = u.x.len();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    match kind {
        Convection::Advective => {
            let [vxx, vyx, vxy, vyy] = v.grad.as_ref().expect("gradient of v");
            for p in 0..n {
                gx[p] = u.x[p] * vxx[p] + u.y[p] * vyx[p];
                gy[p] = u.x[p] * vxy[p] + u.y[p] * vyy[p];
            }
        }
        Convection::Rotational => {
            let [_, vyx, vxy, _] = v.grad.as_ref().expect("gradient of v");
            for p in 0..n {
                let omega = vxy[p] - vyx[p];
                gx[p] = -u.y[p] * omega;
                gy[p] = u.x[p] * omega;
            }
        }
        Convection::Transposed => {
            let [uxx, uyx, uxy, uyy] = u.grad.as_ref().expect("gradient of u");
            for p in 0..n {
                gx[p] = uxx[p] * v.x[p] + uxy[p] * v.y[p];
                gy[p] = uyx[p] * v.x[p] + uyy[p] * v.y[p];
            }
        }
    }
    (gx, gy)
}

/// Galerkin coefficients of the chosen convection operator applied to `(u, v)`.
pub fn bilinear(basis: &EigenBasis, kind: Convection, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    check_len(basis, u)?;
    check_len(basis, v)?;
    let su = sample(basis, u, kind == Convection::Transposed);
    let sv = sample(basis, v, kind != Convection::Transposed);
    let (gx, gy) = product(kind, &su, &sv);
    Ok(finish(basis, gx, gy))
}

pub fn nonlinear_b(basis: &EigenBasis, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    bilinear(basis, Convection::Advective, u, v)
}

pub fn nonlinear_btilde(basis: &EigenBasis, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    bilinear(basis, Convection::Rotational, u, v)
}

pub fn nonlinear_bstar(basis: &EigenBasis, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    bilinear(basis, Convection::Transposed, u, v)
}

/// `[B, B̃, B⋆](u, v)` sharing one set of transforms.
pub fn all_forms(basis: &EigenBasis, u: &SpectralField, v: &SpectralField) -> Result<[SpectralField; 3]> {
    check_len(basis, u)?;
    check_len(basis, v)?;
    let su = sample(basis, u, true);
    let sv = sample(basis, v, true);
    let [a, r, t] = [Convection::Advective, Convection::Rotational, Convection::Transposed].map(|k| {
        let (gx, gy) = product(k, &su, &sv);
        finish(basis, gx, gy)
    });
    Ok([a, r, t])
}

/// `B̃(u, v)` together with the largest sampled speed of `u` (for the
/// advective step-size check).
pub(crate) fn rotational_with_speed(
    basis: &EigenBasis,
    u: &SpectralField,
    v: &SpectralField,
) -> Result<(SpectralField, f64)> {
    check_len(basis, u)?;
    check_len(basis, v)?;
    let su = sample(basis, u, false);
    let sv = sample(basis, v, true);
    let speed = match basis.modes() {
        Modes::Torus { transform, .. } => GridField {
            layout: GridLayout::Periodic { m: transform.resolution() },
            ux: su.x.clone(),
            uy: su.y.clone(),
        }
        .max_speed(),
        Modes::Square(_) => su.x.iter().zip(&su.y).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max),
    };
    let (gx, gy) = product(Convection::Rotational, &su, &sv);
    Ok((finish(basis, gx, gy), speed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inner;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> SpectralField {
        SpectralField::from_vec((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    /// Taylor-Green `(sin x cos y, −cos x sin y)` in the torus basis.
    fn taylor_green(basis: &EigenBasis) -> SpectralField {
        crate::solver::InitSpec::TaylorGreen { amplitude: 1.0 }
            .coefficients(basis)
            .unwrap()
    }

    #[test]
    fn taylor_green_convection_vanishes() {
        let basis = EigenBasis::torus_auto(8).unwrap();
        let tg = taylor_green(&basis);
        assert!(tg.max_abs() > 0.1);
        for kind in [Convection::Advective, Convection::Rotational, Convection::Transposed] {
            let b = bilinear(&basis, kind, &tg, &tg).unwrap();
            assert!(b.max_abs() < 1e-14, "{kind:?}: {}", b.max_abs());
        }
    }

    #[test]
    fn skew_symmetry_on_random_fields() {
        let basis = EigenBasis::torus_auto(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let (u, v, w) = (random(8, &mut rng), random(8, &mut rng), random(8, &mut rng));
            let lhs = inner(&nonlinear_b(&basis, &u, &v).unwrap(), &w);
            let rhs = -inner(&nonlinear_b(&basis, &u, &w).unwrap(), &v);
            assert!((lhs - rhs).abs() < 1e-11 * (lhs.abs() + 1.0));
            assert!(inner(&nonlinear_b(&basis, &u, &v).unwrap(), &v).abs() < 1e-11);
            assert!(inner(&nonlinear_btilde(&basis, &u, &v).unwrap(), &u).abs() < 1e-11);
        }
    }

    #[test]
    fn transposed_term_of_equal_arguments_is_a_gradient() {
        let basis = EigenBasis::torus_auto(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random(32, &mut rng);
        assert!(nonlinear_bstar(&basis, &u, &u).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn zero_field_gives_zero() {
        let basis = EigenBasis::torus_auto(8).unwrap();
        let z = SpectralField::zeros(8);
        let u = SpectralField::unit(8, 2);
        assert_eq!(nonlinear_b(&basis, &z, &u).unwrap().max_abs(), 0.0);
    }
}
