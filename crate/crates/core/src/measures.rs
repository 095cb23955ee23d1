//! Link reduced states and their entanglement.
//!
//! The two links are the first and last site of a [`SiteLayout`]; everything
//! in between is traced out. Entanglement is the logarithmic negativity
//! `log2(2 N + 1)`, `N` being the summed magnitude of the negative eigenvalues
//! of the partial transpose, reported both raw and divided by `log2 d_link`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::{
    eigen::{norm, EigenPairs},
    error::{Error, Result},
    spin::SiteLayout,
    C64,
};

/// Partial-transpose eigenvalues above `-NEGATIVE_FLOOR` count as zero.
pub const NEGATIVE_FLOOR: f64 = 1e-12;

/// Two-link density matrix, indexed `(a, b)` with `a` the first link
/// (most significant) and `b` the second.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkDensityMatrix {
    d_link: usize,
    rho: DMatrix<C64>,
}

impl LinkDensityMatrix {
    pub fn new(rho: DMatrix<C64>, d_link: usize) -> Result<Self> {
        let d2 = d_link * d_link;
        if rho.nrows() != d2 || rho.ncols() != d2 {
            return Err(Error::DimensionMismatch { expected: d2, actual: rho.nrows() });
        }
        Ok(Self { d_link, rho })
    }

    /// `|psi><psi|` of a two-link vector.
    pub fn from_pure(psi: &[C64], d_link: usize) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint(), d_link)
    }

    pub fn d_link(&self) -> usize {
        self.d_link
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.rho)
    }

    /// Conjugates both links by local unitaries: `(U ⊗ V) rho (U ⊗ V)^dagger`.
    pub fn local_unitary(&self, u: &DMatrix<C64>, v: &DMatrix<C64>) -> Self {
        let uv = u.kronecker(v);
        Self { d_link: self.d_link, rho: &uv * &self.rho * uv.adjoint() }
    }
}

/// Thermal weights over a window of low-lying eigenstates.
#[derive(Clone, Debug)]
pub struct SpectralEnsemble {
    pub pairs: EigenPairs,
    pub beta: f64,
    /// `exp(-beta (E_k - E_0)) / Z`, summing to one.
    pub weights: Vec<f64>,
    /// `exp(-beta (E_max - E_0))` over the window; small means the window
    /// captures all states with appreciable weight.
    pub truncation_margin: f64,
}

impl SpectralEnsemble {
    pub fn new(pairs: EigenPairs, beta: f64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("ensemble needs at least one state".into()));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        let e0 = pairs.values[0];
        let boltzmann: Vec<f64> = pairs.values.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = boltzmann.iter().sum();
        let weights = boltzmann.into_iter().map(|w| w / z).collect();
        let truncation_margin = (-beta * (pairs.values[pairs.len() - 1] - e0)).exp();
        Ok(Self { pairs, beta, weights, truncation_margin })
    }

    pub fn ground_energy(&self) -> f64 {
        self.pairs.values[0]
    }
}

/// `Tr_bulk |psi><psi|`.
pub fn reduce_state(psi: &[C64], layout: &SiteLayout) -> Result<LinkDensityMatrix> {
    check_state(psi, layout)?;
    let (d_a, d_b, d_c) = link_dims(layout);
    Ok(LinkDensityMatrix {
        d_link: d_a,
        rho: accumulate(psi, d_a, d_b, d_c, 1.0, DMatrix::zeros(d_a * d_b, d_a * d_b)),
    })
}

/// `sum_k w_k Tr_bulk |psi_k><psi_k|`.
pub fn reduce_ensemble(ensemble: &SpectralEnsemble, layout: &SiteLayout) -> Result<LinkDensityMatrix> {
    let (d_a, d_b, d_c) = link_dims(layout);
    let mut rho = DMatrix::zeros(d_a * d_b, d_a * d_b);
    for (psi, &w) in ensemble.pairs.vectors.iter().zip(&ensemble.weights) {
        check_state(psi, layout)?;
        if w > 0.0 {
            rho = accumulate(psi, d_a, d_b, d_c, w, rho);
        }
    }
    Ok(LinkDensityMatrix { d_link: d_a, rho })
}

fn check_state(psi: &[C64], layout: &SiteLayout) -> Result<()> {
    if psi.len() != layout.total_dim() {
        return Err(Error::DimensionMismatch { expected: layout.total_dim(), actual: psi.len() });
    }
    let n = norm(psi);
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

fn link_dims(layout: &SiteLayout) -> (usize, usize, usize) {
    let d_a = layout.dims()[0];
    let d_b = layout.dims()[layout.n_sites() - 1];
    (d_a, d_b, layout.total_dim() / (d_a * d_b))
}

/// Adds `w * Tr_C |psi><psi|` with `psi` viewed as `psi[a][c][b]`.
fn accumulate(psi: &[C64], d_a: usize, d_b: usize, d_c: usize, w: f64, mut rho: DMatrix<C64>) -> DMatrix<C64> {
    let stride_a = d_c * d_b;
    for a in 0..d_a {
        for a2 in 0..d_a {
            for b in 0..d_b {
                for b2 in 0..d_b {
                    let mut acc = C64::new(0.0, 0.0);
                    for c in 0..d_c {
                        let base = c * d_b;
                        acc += psi[a * stride_a + base + b] * psi[a2 * stride_a + base + b2].conj();
                    }
                    rho[(a * d_b + b, a2 * d_b + b2)] += acc * w;
                }
            }
        }
    }
    rho
}

/// Transpose on the first link: `(i,j),(k,l) -> (k,j),(i,l)`.
pub fn partial_transpose(rho: &LinkDensityMatrix) -> DMatrix<C64> {
    let d = rho.d_link;
    DMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (c / d, c % d);
        rho.rho[(k * d + j, i * d + l)]
    })
}

/// Transpose on the second link: `(i,j),(k,l) -> (i,l),(k,j)`.
pub fn partial_transpose_second(rho: &LinkDensityMatrix) -> DMatrix<C64> {
    let d = rho.d_link;
    DMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (c / d, c % d);
        rho.rho[(i * d + l, k * d + j)]
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogNegativity {
    /// `log2(2 N + 1)`.
    pub raw: f64,
    /// `raw / log2(d_link)`, in `[0, 1]`.
    pub normalized: f64,
    /// Summed magnitude of the negative partial-transpose eigenvalues.
    pub negativity: f64,
}

pub fn log_negativity(rho: &LinkDensityMatrix) -> LogNegativity {
    let negativity: f64 = hermitian_eigenvalues(&partial_transpose(rho))
        .into_iter()
        .filter(|&e| e < -NEGATIVE_FLOOR)
        .map(f64::abs)
        .sum::<f64>()
        + 0.0; // an empty f64 sum is -0.0
    let raw = (2.0 * negativity + 1.0).log2();
    LogNegativity { raw, normalized: raw / (rho.d_link as f64).log2(), negativity }
}

/// `sum_k w_k^2` over the ensemble window.
pub fn purity(ensemble: &SpectralEnsemble) -> f64 {
    ensemble.weights.iter().map(|w| w * w).sum()
}

fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut v: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
