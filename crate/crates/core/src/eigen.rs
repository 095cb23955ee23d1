//! Lowest eigenpairs of Hermitian operators.
//!
//! [`lanczos_lowest`] is a thick-restart block Lanczos iteration with full
//! reorthogonalization. Block Krylov steps fill the basis up to five times the
//! Ritz window; then the window of lowest Ritz vectors is kept and the
//! residuals of the unconverged ones seed the next block. When residuals stop
//! improving the window doubles, which lets a tight cluster larger than the
//! window converge. Operators with real matrix elements are handled in real
//! arithmetic. After convergence the returned set is widened until the next
//! eigenvalue is separated from the last returned one by more than
//! [`LanczosOptions::cluster_gap`], so a degenerate multiplet is never cut in
//! half.
//!
//! [`dense_spectrum`] is the brute-force oracle used to check it.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{
    error::{Error, Result},
    sparse::{CsrMatrix, LinearOperator},
    C64,
};

/// Largest dimension [`dense_spectrum`] accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 4096;

/// Restarts between checks for residual stagnation.
const STAGNATION_PERIOD: usize = 10;

/// Eigenpairs in ascending eigenvalue order.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    /// `||H v - E v||` for each pair, measured with a fresh matvec.
    pub residuals: Vec<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|<v_i|v_j> - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).norm());
            }
        }
        worst
    }

    /// `exp(-i H t) psi` through the eigendecomposition. Only exact when the
    /// pairs span the whole space (as returned by [`dense_spectrum`]).
    pub fn propagate(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        for (e, v) in self.values.iter().zip(&self.vectors) {
            let c = dot(v, psi) * C64::from_polar(1.0, -e * t);
            axpy(c, v, &mut out);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Residual bound every returned pair must satisfy.
    pub tol: f64,
    pub seed: u64,
    /// Eigenvalues closer than this count as one cluster; `None` returns
    /// exactly `k` pairs.
    pub cluster_gap: Option<f64>,
    /// Restart cap; defaults to 50 times the current Ritz window.
    pub max_restarts: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-10, seed: 0, cluster_gap: Some(1e-8), max_restarts: None }
    }
}

impl LanczosOptions {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }
}

/// The `k` lowest eigenpairs of `op` (more when the cluster rule widens the set).
pub fn lanczos_lowest<A: LinearOperator + ?Sized>(op: &A, k: usize, opts: &LanczosOptions) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let (values, vectors) = if op.is_real() {
        let (values, vectors) = lanczos_core::<f64>(n, &|x, y| op.apply_real(x, y), k, opts)?;
        let vectors = vectors.into_iter().map(|v| v.into_iter().map(|x| C64::new(x, 0.0)).collect()).collect();
        (values, vectors)
    } else {
        lanczos_core::<C64>(n, &|x, y| op.apply(x, y), k, opts)?
    };
    Ok(finalize(op, values, vectors))
}

/// Scalars the iteration runs on: `f64` for real operators, `C64` otherwise.
trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {
    fn sample(rng: &mut ChaCha8Rng) -> Self;
}

impl Scalar for f64 {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        rng.random_range(-1.0..1.0)
    }
}

impl Scalar for C64 {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }
}

type Apply<'a, T> = dyn Fn(&[T], &mut [T]) + Sync + 'a;

fn lanczos_core<T: Scalar>(
    n: usize,
    apply: &Apply<'_, T>,
    k: usize,
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<T>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let extra = |want: usize| (want / 2).max(4);
    let mut want = k;
    let mut window = n.min(want + extra(want));
    let max_restarts = |window: usize| opts.max_restarts.unwrap_or(50 * window);
    let max_basis = |window: usize| n.min((5 * window).max(window + 40));
    let block_size = |window: usize, want: usize| window.min((want / 2).max(8));

    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut images: Vec<Vec<T>> = Vec::new();
    let mut projected = DMatrix::<T>::zeros(0, 0);
    let mut block: Vec<Vec<T>> = (0..block_size(window, want)).map(|_| random_vector(n, &mut rng)).collect();
    let mut restarts = 0;
    let mut stalls = 0;
    let mut last_residuals = Vec::new();
    let mut checkpoint = f64::INFINITY;

    loop {
        let fresh = orthonormalize_against(&basis, block);
        if fresh.is_empty() && basis.len() < n {
            // The block collapsed into the current basis: invariant subspace hit.
            stalls += 1;
            if stalls > 10 * n.max(1) {
                return Err(no_convergence(restarts, last_residuals));
            }
            block = (0..block_size(window, want).min(n - basis.len())).map(|_| random_vector(n, &mut rng)).collect();
            continue;
        }
        let fresh_images: Vec<Vec<T>> = fresh
            .iter()
            .map(|v| {
                let mut hv = vec![T::zero(); n];
                apply(v, &mut hv);
                hv
            })
            .collect();
        basis.extend(fresh);
        images.extend(fresh_images.iter().cloned());
        projected = extend_projection(&projected, &basis, &images);

        let m = basis.len();
        if m < max_basis(window) && m < n {
            // Block Krylov step: the next block is the image of the last one.
            block = fresh_images;
            block.truncate(max_basis(window) - m);
            continue;
        }

        let (theta, coeffs) = sorted_eigen(&projected);
        let nw = window.min(m);
        let ritz: Vec<(Vec<T>, Vec<T>)> = (0..nw)
            .into_par_iter()
            .map(|i| (combine(&basis, coeffs.column(i).as_slice()), combine(&images, coeffs.column(i).as_slice())))
            .collect();
        let residual_vectors: Vec<Vec<T>> = ritz
            .par_iter()
            .zip(theta.par_iter())
            .map(|((y, z), &t)| z.iter().zip(y).map(|(&zi, &yi)| zi - yi * T::from_real(t)).collect())
            .collect();
        let residuals: Vec<f64> = residual_vectors.iter().map(|r| norm_of(r)).collect();
        let converged = residuals.iter().take_while(|&&r| r < opts.tol).count();
        last_residuals = residuals.clone();

        let need = match opts.cluster_gap {
            Some(_) if want < n => want + 1,
            _ => want,
        };
        if converged >= need {
            let count = match opts.cluster_gap {
                Some(gap) => {
                    let mut count = want;
                    while count < converged && theta[count] - theta[count - 1] <= gap {
                        count += 1;
                    }
                    count
                }
                None => want,
            };
            if count == n || count < converged || opts.cluster_gap.is_none() {
                let (values, vectors) = ritz.into_iter().zip(theta).take(count).map(|((y, _), t)| (t, y)).unzip();
                return Ok((values, vectors));
            }
            // The cluster runs past the converged set: widen and keep going.
            want = count;
            window = window.max(n.min(want + extra(want)));
        }

        // A cluster wider than the window gets cut at every restart and the
        // residuals stagnate; widen the window until it holds the cluster.
        if restarts % STAGNATION_PERIOD == 0 {
            let worst = residuals.iter().take(need.min(nw)).copied().fold(0.0, f64::max);
            if worst > 0.5 * checkpoint && window < n {
                window = n.min(2 * window);
            }
            checkpoint = worst;
        }

        // Thick restart: keep the Ritz vectors, continue from the residuals of
        // the unconverged ones.
        restarts += 1;
        if restarts > max_restarts(window) {
            return Err(no_convergence(restarts - 1, last_residuals));
        }
        block = residual_vectors
            .into_iter()
            .zip(&residuals)
            .filter(|(_, &r)| r >= opts.tol)
            .map(|(v, &r)| v.into_iter().map(|x| x / T::from_real(r)).collect())
            .take(block_size(window, want))
            .collect();
        if block.is_empty() {
            // Window grew past the Ritz vectors we have: seed the new directions.
            block = (0..(window - nw).max(1)).map(|_| random_vector(n, &mut rng)).collect();
        }
        if m > nw {
            let (kept, kept_images): (Vec<_>, Vec<_>) = ritz.into_iter().unzip();
            basis = kept;
            images = kept_images;
            projected = DMatrix::from_fn(nw, nw, |i, j| if i == j { T::from_real(theta[i]) } else { T::zero() });
        }
        block.truncate(max_basis(window).saturating_sub(basis.len()).max(1));
    }
}

/// Complete eigendecomposition through a dense Hermitian solve.
pub fn dense_spectrum(h: &CsrMatrix) -> Result<EigenPairs> {
    dense_spectrum_capped(h, DEFAULT_ORACLE_CAP)
}

pub fn dense_spectrum_capped(h: &CsrMatrix, cap: usize) -> Result<EigenPairs> {
    if h.dim() > cap {
        return Err(Error::Capacity { dim: h.dim(), budget: cap });
    }
    let dense = h.to_dense();
    let hermitian = (&dense + dense.adjoint()) * C64::new(0.5, 0.0);
    let (values, vectors): (Vec<f64>, Vec<Vec<C64>>) = if h.is_real() {
        let (values, vectors) = sorted_eigen(&hermitian.map(|x| x.re));
        (values, vectors.column_iter().map(|c| c.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
    } else {
        let (values, vectors) = sorted_eigen(&hermitian);
        (values, vectors.column_iter().map(|c| c.iter().copied().collect()).collect())
    };
    Ok(finalize(h, values, vectors))
}

/// Interval `(e_min, e_max)` enclosing the spectrum of `op`.
///
/// Extremal Ritz values are moved outward by their residual and then padded
/// by `1e-3` of the span (or `1e-6` absolute when the span is below `1e-12`).
pub fn spectral_bounds<A: LinearOperator + ?Sized>(op: &A, seed: u64) -> Result<(f64, f64)> {
    if op.dim() < 2 {
        return Err(Error::InvalidArgument("spectral bounds need dimension >= 2".into()));
    }
    let opts = LanczosOptions { tol: 1e-6, seed, cluster_gap: None, max_restarts: Some(500) };
    let low = lanczos_lowest(op, 1, &opts)?;
    let high = lanczos_lowest(&Negated(op), 1, &opts.clone().with_seed(seed.wrapping_add(1)))?;
    let e_min = low.values[0] - low.residuals[0];
    let e_max = -high.values[0] + high.residuals[0];
    let span = e_max - e_min;
    let pad = if span < 1e-12 { 1e-6 } else { 1e-3 * span };
    Ok((e_min - pad, e_max + pad))
}

/// `-A` as an operator.
pub struct Negated<'a, A: ?Sized>(pub &'a A);

impl<A: LinearOperator + ?Sized> LinearOperator for Negated<'_, A> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.0.apply(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }

    fn is_real(&self) -> bool {
        self.0.is_real()
    }

    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_real(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }
}

fn finalize<A: LinearOperator + ?Sized>(op: &A, values: Vec<f64>, vectors: Vec<Vec<C64>>) -> EigenPairs {
    let residuals = vectors
        .par_iter()
        .zip(values.par_iter())
        .map(|(v, &e)| {
            let mut hv = vec![C64::new(0.0, 0.0); v.len()];
            op.apply(v, &mut hv);
            hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    EigenPairs { values, vectors, residuals }
}

fn no_convergence(restarts: usize, residuals: Vec<f64>) -> Error {
    let worst_residual = residuals.iter().copied().fold(0.0, f64::max);
    Error::NoConvergence { restarts, worst_residual, residuals }
}

/// Eigen-decomposition of a small Hermitian matrix, ascending.
fn sorted_eigen<T: Scalar>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Grows the projected matrix `V^dagger H V` to cover newly appended columns.
fn extend_projection<T: Scalar>(old: &DMatrix<T>, basis: &[Vec<T>], images: &[Vec<T>]) -> DMatrix<T> {
    let m_old = old.nrows();
    let m = basis.len();
    let mut out = DMatrix::zeros(m, m);
    out.view_mut((0, 0), (m_old, m_old)).copy_from(old);
    let cols: Vec<Vec<T>> =
        (m_old..m).into_par_iter().map(|j| (0..=j).map(|i| dot_of(&basis[i], &images[j])).collect()).collect();
    for (j, col) in (m_old..m).zip(cols) {
        for (i, v) in col.into_iter().enumerate() {
            if i == j {
                out[(j, j)] = T::from_real(v.real());
            } else {
                out[(i, j)] = v;
                out[(j, i)] = v.conjugate();
            }
        }
    }
    out
}

/// Classical Gram-Schmidt, applied twice, against `basis` and the earlier
/// accepted members of `block`. Vectors that lose all but `1e-10` of their
/// norm are dropped.
fn orthonormalize_against<T: Scalar>(basis: &[Vec<T>], block: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let mut accepted: Vec<Vec<T>> = Vec::new();
    for mut x in block {
        let start = norm_of(&x);
        if start == 0.0 || !start.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for q in basis.iter().chain(&accepted) {
                let c = dot_of(q, &x);
                axpy_of(-c, q, &mut x);
            }
        }
        let after = norm_of(&x);
        if after > 1e-10 * start {
            x.iter_mut().for_each(|v| *v /= T::from_real(after));
            accepted.push(x);
        }
    }
    accepted
}

fn random_vector<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut v: Vec<T> = (0..n).map(|_| T::sample(rng)).collect();
    let nv = norm_of(&v);
    v.iter_mut().for_each(|x| *x /= T::from_real(nv));
    v
}

fn combine<T: Scalar>(vectors: &[Vec<T>], coeffs: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); vectors[0].len()];
    for (v, &c) in vectors.iter().zip(coeffs) {
        axpy_of(c, v, &mut out);
    }
    out
}

fn dot_of<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x.conjugate() * y)
}

fn norm_of<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

fn axpy_of<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `<a|b>` (conjugate-linear in `a`).
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
