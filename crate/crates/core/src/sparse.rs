//! Compressed sparse row storage for complex square matrices.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::{
    error::{Error, Result},
    C64,
};

/// Rows per rayon task in [`CsrMatrix::apply`]. Each row is summed
/// sequentially, so the result does not depend on the thread count.
const ROW_CHUNK: usize = 256;
/// Below this many stored entries a matvec runs on the calling thread.
const PARALLEL_NNZ: usize = 1 << 16;

/// Anything that can act on a vector: the only access the iterative solvers need.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// The operator has only real matrix elements, so [`Self::apply_real`]
    /// is available. Solvers then work in real arithmetic.
    fn is_real(&self) -> bool {
        false
    }

    /// `y = A x` on real vectors. Only called when [`Self::is_real`] holds.
    fn apply_real(&self, _x: &[f64], _y: &mut [f64]) {
        unimplemented!("operator is not real")
    }
}

/// Square complex matrix in compressed sparse row layout, immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
    /// Copy of `values` when every entry is real, for the faster product.
    real: Option<Vec<f64>>,
}

impl CsrMatrix {
    /// Builds a matrix row by row. `row_fn(r, buf)` pushes `(column, value)`
    /// pairs in any order; duplicates are summed and exact zeros dropped.
    pub fn from_row_fn<F>(dim: usize, mut row_fn: F) -> Self
    where
        F: FnMut(usize, &mut Vec<(usize, C64)>),
    {
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut buf = Vec::new();
        indptr.push(0);
        for r in 0..dim {
            buf.clear();
            row_fn(r, &mut buf);
            buf.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < buf.len() {
                let col = buf[k].0;
                debug_assert!(col < dim);
                let mut v = C64::new(0.0, 0.0);
                while k < buf.len() && buf[k].0 == col {
                    v += buf[k].1;
                    k += 1;
                }
                if v != C64::new(0.0, 0.0) {
                    indices.push(col);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        let real = real_parts(&values);
        Self { dim, indptr, indices, values, real }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_row_fn(diag.len(), |r, buf| buf.push((r, C64::new(diag[r], 0.0))))
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
        }
        Ok(Self::from_row_fn(m.nrows(), |r, buf| {
            buf.extend((0..m.ncols()).map(|c| (c, m[(r, c)])));
        }))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(columns, values)` of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[C64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    /// Iterates over stored `(row, column, value)` triples in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|r| self.get(r, r)).sum()
    }

    pub fn max_nnz_per_row(&self) -> usize {
        self.indptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn adjoint(&self) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for (r, c, v) in self.iter() {
            rows[c].push((r, v.conj()));
        }
        Self::from_row_fn(self.dim, |r, buf| buf.extend_from_slice(&rows[r]))
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_row_fn(self.dim, |r, buf| {
            let (c1, v1) = self.row(r);
            let (c2, v2) = other.row(r);
            buf.extend(c1.iter().zip(v1).map(|(&c, &v)| (c, a * v)));
            buf.extend(c2.iter().zip(v2).map(|(&c, &v)| (c, b * v)));
        }))
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out.real = real_parts(&out.values);
        out
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_row_fn(self.dim, |r, buf| {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (c2, v2) = other.row(k);
                buf.extend(c2.iter().zip(v2).map(|(&c, &b)| (c, a * b)));
            }
        }))
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.linear_combination(C64::new(1.0, 0.0), &ba, C64::new(-1.0, 0.0))
    }

    /// Frobenius norm; an upper bound on the operator norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|self_rc - other_rc|` over all entries.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let diff = self.linear_combination(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))?;
        Ok(diff.values.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    /// Largest `|A - A^dagger|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint()).unwrap_or(f64::INFINITY)
    }

    /// Principal submatrix on the given (sorted, distinct) basis indices.
    pub fn restrict(&self, basis: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.dim];
        for (k, &i) in basis.iter().enumerate() {
            position[i] = k;
        }
        Self::from_row_fn(basis.len(), |r, buf| {
            let (cols, vals) = self.row(basis[r]);
            buf.extend(
                cols.iter().zip(vals).filter(|(&c, _)| position[c] != usize::MAX).map(|(&c, &v)| (position[c], v)),
            );
        })
    }

    /// `<x|A|x>`.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: other.dim });
        }
        Ok(())
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        let cols = &self.indices[span.clone()];
        if let Some(real) = &self.real {
            let (mut re, mut im) = (0.0, 0.0);
            for (&c, &v) in cols.iter().zip(&real[span]) {
                re += v * x[c].re;
                im += v * x[c].im;
            }
            return C64::new(re, im);
        }
        let mut acc = C64::new(0.0, 0.0);
        for (&c, &v) in cols.iter().zip(&self.values[span]) {
            acc += v * x[c];
        }
        acc
    }
}

impl CsrMatrix {
    fn row_dot_real(&self, r: usize, real: &[f64], x: &[f64]) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().zip(&real[span]).map(|(&c, &v)| v * x[c]).sum()
    }
}

fn real_parts(values: &[C64]) -> Option<Vec<f64>> {
    values.iter().all(|v| v.im == 0.0).then(|| values.iter().map(|v| v.re).collect())
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if self.nnz() < PARALLEL_NNZ {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = self.row_dot(r, x);
            }
        } else {
            y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * ROW_CHUNK;
                for (k, yr) in ys.iter_mut().enumerate() {
                    *yr = self.row_dot(base + k, x);
                }
            });
        }
    }

    fn is_real(&self) -> bool {
        self.real.is_some()
    }

    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let real = self.real.as_deref().expect("matrix has complex entries");
        if self.nnz() < PARALLEL_NNZ {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = self.row_dot_real(r, real, x);
            }
        } else {
            y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * ROW_CHUNK;
                for (k, yr) in ys.iter_mut().enumerate() {
                    *yr = self.row_dot_real(base + k, real, x);
                }
            });
        }
    }
}
