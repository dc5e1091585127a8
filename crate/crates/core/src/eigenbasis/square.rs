//! No-slip Stokes eigenpairs on the unit square.
//!
//! In stream-function form the eigenproblem is the clamped plate
//! buckling problem `Δ²ψ = −λΔψ`, `ψ = ∂ψ/∂n = 0` on the boundary, and the
//! velocity modes are `w = (∂_y ψ, −∂_x ψ)`.  It is discretized with the
//! 13-point biharmonic stencil (ghost-point reflection for the clamped
//! condition) and the 5-point Laplacian on a uniform node grid, and solved
//! with a shift-invert block Krylov method (shift 0, banded Cholesky of the
//! biharmonic matrix) in the inner product induced by `−Δ_h`.
//!
//! Velocities live on the staggered edge grid: `w_x` on vertical edges,
//! `w_y` on horizontal edges.  With edge quadrature the discrete L² inner
//! product of two velocity modes equals the `−Δ_h` inner product of their
//! stream functions, so M-orthonormal stream functions give exactly
//! orthonormal velocity modes, and the cell divergence vanishes identically.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EigenBasis, Modes};
use crate::error::{Error, Result};
use crate::transform::{GridField, GridLayout};

pub const MIN_MESH: usize = 16;

#[derive(Debug, Clone)]
pub struct SquareSolverOptions {
    /// Relative residual `‖K⁻¹Mψ − θψ‖_M / θ` required for every returned pair.
    pub tol: f64,
    /// Vectors added to the Krylov space per iteration.
    pub block_size: usize,
    /// Cap on the Krylov space dimension.
    pub max_subspace: usize,
    pub seed: u64,
}

impl Default for SquareSolverOptions {
    fn default() -> Self {
        SquareSolverOptions {
            tol: 1e-10,
            block_size: 4,
            max_subspace: 2000,
            seed: 0x5eed,
        }
    }
}

/// Discrete eigenmodes on a mesh with `intervals` cells per side.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareModes {
    intervals: usize,
    /// Stream functions on the `(intervals+1)²` nodes (boundary nodes are 0).
    psi: Vec<Vec<f64>>,
    wx: Vec<Vec<f64>>,
    wy: Vec<Vec<f64>>,
}

impl SquareModes {
    pub(crate) fn from_stream_functions(intervals: usize, psi: Vec<Vec<f64>>) -> Self {
        let (wx, wy) = psi.iter().map(|p| velocity_from_stream(intervals, p)).unzip();
        SquareModes { intervals, psi, wx, wy }
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn stream_function(&self, j: usize) -> &[f64] {
        &self.psi[j]
    }

    /// Edge velocities `(w_x, w_y)` of mode `j`.
    pub fn velocity(&self, j: usize) -> (&[f64], &[f64]) {
        (&self.wx[j], &self.wy[j])
    }

    pub(crate) fn truncated(&self, n: usize) -> Self {
        SquareModes {
            intervals: self.intervals,
            psi: self.psi[..n].to_vec(),
            wx: self.wx[..n].to_vec(),
            wy: self.wy[..n].to_vec(),
        }
    }

    fn layout(&self) -> GridLayout {
        GridLayout::Staggered { intervals: self.intervals }
    }

    pub(crate) fn synthesize(&self, coeffs: &[f64]) -> GridField {
        let mut g = GridField::zeros(self.layout());
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            g.ux.iter_mut().zip(&self.wx[j]).for_each(|(a, w)| *a += c * w);
            g.uy.iter_mut().zip(&self.wy[j]).for_each(|(a, w)| *a += c * w);
        }
        g
    }

    pub(crate) fn analyze(&self, g: &GridField) -> Vec<f64> {
        let h2 = self.spacing().powi(2);
        (0..self.len())
            .map(|j| h2 * (dot(&g.ux, &self.wx[j]) + dot(&g.uy, &self.wy[j])))
            .collect()
    }

    pub(crate) fn gram_defect(&self) -> f64 {
        let h2 = self.spacing().powi(2);
        let n = self.len();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let g = h2 * (dot(&self.wx[i], &self.wx[j]) + dot(&self.wy[i], &self.wy[j]));
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((g - target).abs());
            }
        }
        defect
    }

    /// `h · max|div w_j| / max|w_j|` over all cells and modes.
    pub(crate) fn max_relative_divergence(&self) -> f64 {
        let n = self.intervals;
        let mut worst = 0.0f64;
        for j in 0..self.len() {
            let (wx, wy) = (&self.wx[j], &self.wy[j]);
            let scale = max_abs(wx).max(max_abs(wy));
            for cy in 0..n {
                for cx in 0..n {
                    let d = wx[cy * (n + 1) + cx + 1] - wx[cy * (n + 1) + cx] + wy[(cy + 1) * n + cx]
                        - wy[cy * n + cx];
                    worst = worst.max(d.abs() / scale);
                }
            }
        }
        worst
    }

    /// Tangential velocity half a cell from the walls, relative to the
    /// first-order bound `h · λ_j^{1/2} · max|w_j|`.
    pub(crate) fn boundary_residual(&self, eigenvalues: &[f64]) -> f64 {
        let n = self.intervals;
        let h = self.spacing();
        let mut worst = 0.0f64;
        for j in 0..self.len() {
            let (wx, wy) = (&self.wx[j], &self.wy[j]);
            let mut trace = 0.0f64;
            for k in 0..=n {
                for i in [0, n - 1] {
                    // w_y next to x = 0 and x = 1
                    trace = trace.max(wy[k * n + i].abs());
                    // w_x next to y = 0 and y = 1
                    trace = trace.max(wx[i * (n + 1) + k].abs());
                }
            }
            let bound = h * eigenvalues[j].sqrt() * max_abs(wx).max(max_abs(wy));
            worst = worst.max(trace / bound);
        }
        worst
    }

    /// Average edge velocities onto the nodes; boundary nodes are 0.
    pub(crate) fn edges_to_nodes(&self, g: &GridField) -> (Vec<f64>, Vec<f64>) {
        let n = self.intervals;
        let stride = n + 1;
        let mut ux = vec![0.0; stride * stride];
        let mut uy = vec![0.0; stride * stride];
        for j in 1..n {
            for i in 1..n {
                ux[j * stride + i] = 0.5 * (g.ux[(j - 1) * stride + i] + g.ux[j * stride + i]);
                uy[j * stride + i] = 0.5 * (g.uy[j * n + i - 1] + g.uy[j * n + i]);
            }
        }
        (ux, uy)
    }

    /// Average nodal vectors onto the edges.
    pub(crate) fn nodes_to_edges(&self, nx: &[f64], ny: &[f64]) -> GridField {
        let n = self.intervals;
        let stride = n + 1;
        let mut g = GridField::zeros(self.layout());
        for j in 0..n {
            for i in 0..=n {
                g.ux[j * stride + i] = 0.5 * (nx[j * stride + i] + nx[(j + 1) * stride + i]);
            }
        }
        for j in 0..=n {
            for i in 0..n {
                g.uy[j * n + i] = 0.5 * (ny[j * stride + i] + ny[j * stride + i + 1]);
            }
        }
        g
    }

    /// Central-difference partial derivatives of a nodal scalar at interior
    /// nodes (boundary nodes get 0).
    pub(crate) fn nodal_gradient(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.intervals;
        let stride = n + 1;
        let inv2h = 0.5 / self.spacing();
        let mut dx = vec![0.0; stride * stride];
        let mut dy = vec![0.0; stride * stride];
        for j in 1..n {
            for i in 1..n {
                let p = j * stride + i;
                dx[p] = (f[p + 1] - f[p - 1]) * inv2h;
                dy[p] = (f[p + stride] - f[p - stride]) * inv2h;
            }
        }
        (dx, dy)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn velocity_from_stream(n: usize, psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let stride = n + 1;
    let inv_h = n as f64;
    let mut wx = vec![0.0; stride * n];
    let mut wy = vec![0.0; n * stride];
    for j in 0..n {
        for i in 0..=n {
            wx[j * stride + i] = (psi[(j + 1) * stride + i] - psi[j * stride + i]) * inv_h;
        }
    }
    for j in 0..=n {
        for i in 0..n {
            wy[j * n + i] = -(psi[j * stride + i + 1] - psi[j * stride + i]) * inv_h;
        }
    }
    (wx, wy)
}

/// Interior-node grid: unknown `(i, j)`, `1 ≤ i, j ≤ N−1`.
struct InteriorGrid {
    side: usize,
}

impl InteriorGrid {
    fn len(&self) -> usize {
        self.side * self.side
    }

    fn index(&self, i: usize, j: usize) -> usize {
        (j - 1) * self.side + (i - 1)
    }

    /// `(4ψ − Σ neighbours)`, i.e. `h²(−Δ_h)` with homogeneous Dirichlet data.
    fn apply_laplacian(&self, x: &[f64], out: &mut [f64]) {
        let s = self.side;
        for j in 0..s {
            for i in 0..s {
                let p = j * s + i;
                let mut v = 4.0 * x[p];
                if i > 0 {
                    v -= x[p - 1];
                }
                if i + 1 < s {
                    v -= x[p + 1];
                }
                if j > 0 {
                    v -= x[p - s];
                }
                if j + 1 < s {
                    v -= x[p + s];
                }
                out[p] = v;
            }
        }
    }
}

/// Lower-banded symmetric positive definite matrix and its Cholesky factor.
struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds columns `i−bw ..= i` at offsets `0 ..= bw`.
    l: Vec<f64>,
}

impl BandedCholesky {
    fn factor(n: usize, bw: usize, mut a: Vec<f64>) -> Result<Self> {
        let w = bw + 1;
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let mut s = a[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in lo..j {
                    s -= a[ri + k] * a[rj + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::Convergence {
                            message: "biharmonic matrix is not positive definite".into(),
                            iterations: i,
                            residual: s,
                        });
                    }
                    a[i * w + bw] = s.sqrt();
                } else {
                    a[i * w + (j + bw - i)] = s / a[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l: a })
    }

    fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = i * w + bw - i;
            let mut s = b[i];
            for k in lo..i {
                s -= self.l[row + k] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            let hi = (i + bw).min(n - 1);
            for k in i + 1..=hi {
                s -= self.l[k * w + (i + bw - k)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }
}

/// `h⁴ Δ_h²` with the clamped ghost-point rule, in banded lower storage.
fn assemble_biharmonic(grid: &InteriorGrid) -> (usize, Vec<f64>) {
    let s = grid.side;
    let bw = 2 * s;
    let w = bw + 1;
    let n = grid.len();
    let mut a = vec![0.0; n * w];
    let last = s as isize;
    for j in 1..=s {
        for i in 1..=s {
            let p = grid.index(i, j);
            let walls = [i == 1, i == s, j == 1, j == s].iter().filter(|&&b| b).count();
            let mut put = |di: isize, dj: isize, v: f64| {
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if ni < 1 || nj < 1 || ni > last || nj > last {
                    return;
                }
                let q = grid.index(ni as usize, nj as usize);
                if q <= p {
                    a[p * w + (q + bw - p)] += v;
                }
            };
            put(0, 0, 20.0 + walls as f64);
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                put(di, dj, -8.0);
            }
            for (di, dj) in [(-1, -1), (1, -1), (-1, 1), (1, 1)] {
                put(di, dj, 2.0);
            }
            for (di, dj) in [(-2, 0), (2, 0), (0, -2), (0, 2)] {
                put(di, dj, 1.0);
            }
        }
    }
    (bw, a)
}

pub(super) fn build(n_modes: usize, intervals: usize, opts: &SquareSolverOptions) -> Result<EigenBasis> {
    if intervals < MIN_MESH {
        return Err(Error::config(format!("mesh resolution {intervals} below minimum {MIN_MESH}")));
    }
    let grid = InteriorGrid { side: intervals - 1 };
    if n_modes == 0 || 4 * n_modes > grid.len() {
        return Err(Error::config(format!(
            "{n_modes} modes requested from {} unknowns; need 1 ≤ n ≤ unknowns/4",
            grid.len()
        )));
    }
    let (bw, band) = assemble_biharmonic(&grid);
    let chol = BandedCholesky::factor(grid.len(), bw, band)?;
    let (thetas, vectors) = block_krylov(&grid, &chol, n_modes, opts)?;

    let h = 1.0 / intervals as f64;
    // assembled h⁴Δ_h² and h²(−Δ_h): θ = 1/(λh²)
    let eigenvalues: Vec<f64> = thetas.iter().map(|t| 1.0 / (t * h * h)).collect();

    let stride = intervals + 1;
    let psi: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|v| {
            let mut full = vec![0.0; stride * stride];
            for j in 1..intervals {
                for i in 1..intervals {
                    full[j * stride + i] = v[grid.index(i, j)];
                }
            }
            full
        })
        .collect();
    let modes = SquareModes::from_stream_functions(intervals, psi);
    Ok(EigenBasis::from_parts(eigenvalues, Modes::Square(modes)))
}

/// Largest `n` eigenpairs of `K⁻¹M` (M-self-adjoint) by block Krylov with
/// full M-orthogonalization and Rayleigh-Ritz.  Returns `θ` descending and
/// M-orthonormal vectors.
fn block_krylov(
    grid: &InteriorGrid,
    chol: &BandedCholesky,
    n: usize,
    opts: &SquareSolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = grid.len();
    let cap = opts.max_subspace.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut mq: Vec<Vec<f64>> = Vec::new();
    let mut kq: Vec<Vec<f64>> = Vec::new();
    // h_mat[i][j] = (Mq_i)·(K⁻¹Mq_j)
    let mut h_mat: Vec<Vec<f64>> = Vec::new();

    let mut pending: Vec<Vec<f64>> = (0..opts.block_size.max(1))
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();

    let mut iterations = 0;
    let mut worst = f64::INFINITY;
    loop {
        iterations += 1;
        let mut added = 0;
        for mut x in pending.drain(..) {
            if q.len() >= cap {
                break;
            }
            let mut mx = vec![0.0; dim];
            grid.apply_laplacian(&x, &mut mx);
            let before = dot(&x, &mx).sqrt();
            for _ in 0..2 {
                for (qi, mqi) in q.iter().zip(&mq) {
                    let c = dot(mqi, &x);
                    x.iter_mut().zip(qi).for_each(|(a, b)| *a -= c * b);
                }
            }
            grid.apply_laplacian(&x, &mut mx);
            let norm = dot(&x, &mx).sqrt();
            if !(norm > 1e-10 * before) {
                continue;
            }
            x.iter_mut().for_each(|a| *a /= norm);
            mx.iter_mut().for_each(|a| *a /= norm);
            let mut kx = mx.clone();
            chol.solve(&mut kx);
            q.push(x);
            mq.push(mx);
            kq.push(kx);
            added += 1;
        }
        let k = q.len();
        for row in h_mat.iter_mut() {
            row.resize(k, 0.0);
        }
        h_mat.resize(k, vec![0.0; k]);
        for j in k - added..k {
            for i in 0..k {
                let v = dot(&mq[i], &kq[j]);
                h_mat[i][j] = v;
                h_mat[j][i] = v;
            }
        }

        if k >= n + opts.block_size || k == cap {
            let hm = DMatrix::from_fn(k, k, |i, j| 0.5 * (h_mat[i][j] + h_mat[j][i]));
            let eig = SymmetricEigen::new(hm);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let top = &order[..n.min(k)];
            let mut thetas = Vec::with_capacity(n);
            let mut vecs = Vec::with_capacity(n);
            worst = 0.0;
            for &idx in top {
                let theta = eig.eigenvalues[idx];
                let s = eig.eigenvectors.column(idx);
                let mut y = vec![0.0; dim];
                let mut ky = vec![0.0; dim];
                for l in 0..k {
                    let c = s[l];
                    y.iter_mut().zip(&q[l]).for_each(|(a, b)| *a += c * b);
                    ky.iter_mut().zip(&kq[l]).for_each(|(a, b)| *a += c * b);
                }
                let r: Vec<f64> = ky.iter().zip(&y).map(|(a, b)| a - theta * b).collect();
                let mut mr = vec![0.0; dim];
                grid.apply_laplacian(&r, &mut mr);
                let res = dot(&r, &mr).max(0.0).sqrt() / theta.abs();
                worst = worst.max(res);
                thetas.push(theta);
                vecs.push(y);
            }
            if worst <= opts.tol {
                finalize_vectors(grid, &mut vecs);
                return Ok((thetas, vecs));
            }
        }

        if q.len() >= cap || added == 0 {
            return Err(Error::Convergence {
                message: format!("square eigensolver did not converge with a {}-dimensional subspace", q.len()),
                iterations,
                residual: worst,
            });
        }
        pending = kq[k - added..].to_vec();
    }
}

/// M-orthonormalize (cleans roundoff and mixing inside degenerate
/// clusters) and fix signs so the largest-magnitude entry is positive.
fn finalize_vectors(grid: &InteriorGrid, vecs: &mut [Vec<f64>]) {
    let dim = grid.len();
    let mut mvecs: Vec<Vec<f64>> = Vec::with_capacity(vecs.len());
    for idx in 0..vecs.len() {
        let (done, rest) = vecs.split_at_mut(idx);
        let x = &mut rest[0];
        for _ in 0..2 {
            for (qi, mqi) in done.iter().zip(&mvecs) {
                let c = dot(mqi, x);
                x.iter_mut().zip(qi).for_each(|(a, b)| *a -= c * b);
            }
        }
        let mut mx = vec![0.0; dim];
        grid.apply_laplacian(x, &mut mx);
        let norm = dot(x, &mx).sqrt();
        let peak = x.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let scale = if peak < 0.0 { -1.0 / norm } else { 1.0 / norm };
        x.iter_mut().for_each(|a| *a *= scale);
        mx.iter_mut().for_each(|a| *a *= scale);
        mvecs.push(mx);
    }
}
