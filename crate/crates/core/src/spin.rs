//! Spin-s operators, rotation unitaries and the site layout of a mixed-spin chain.
//!
//! The single-site basis `|0>, |1>, ..., |2s>` runs over descending `Sz`
//! eigenvalues, so `|0>` is the fully polarized `m = +s` state.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{
    error::{Error, Result},
    sparse::CsrMatrix,
    C64,
};

/// A spin quantum number stored as `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin(u32);

impl Spin {
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);

    /// Parses `s` from a float; it must be a positive multiple of 1/2.
    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !twice.is_finite() || twice < 0.5 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(s));
        }
        Ok(Spin(twice.round() as u32))
    }

    pub fn from_twice(twice_s: u32) -> Result<Self> {
        if twice_s == 0 {
            return Err(Error::InvalidSpin(0.0));
        }
        Ok(Spin(twice_s))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Local Hilbert space dimension `2s + 1`.
    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn is_half(self) -> bool {
        self.0 == 1
    }

    /// `Sz` eigenvalue of basis state `|index>`.
    pub fn m(self, index: usize) -> f64 {
        self.value() - index as f64
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl serde::Serialize for Spin {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> serde::Deserialize<'de> for Spin {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = f64::deserialize(deserializer)?;
        Spin::new(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// The operator triple `(Sx, Sy, Sz)` of a single spin.
#[derive(Clone, Debug)]
pub struct SpinOps {
    pub spin: Spin,
    pub sx: DMatrix<C64>,
    pub sy: DMatrix<C64>,
    pub sz: DMatrix<C64>,
}

impl SpinOps {
    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn component(&self, axis: Axis) -> &DMatrix<C64> {
        match axis {
            Axis::X => &self.sx,
            Axis::Y => &self.sy,
            Axis::Z => &self.sz,
        }
    }
}

/// Builds `Sx`, `Sy`, `Sz` from the ladder operators.
///
/// `S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>`; in the descending basis `S+` sits
/// on the first superdiagonal.
pub fn spin_operators(spin: Spin) -> SpinOps {
    let d = spin.dim();
    let s = spin.value();
    let mut sz = DMatrix::zeros(d, d);
    let mut splus = DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        sz[(i, i)] = C64::new(spin.m(i), 0.0);
    }
    for i in 1..d {
        // |i> has m = s - i; S+ maps it to |i - 1>.
        let m = spin.m(i);
        splus[(i - 1, i)] = C64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let sminus = splus.adjoint();
    let sx = (&splus + &sminus).scale(0.5);
    let sy = (&splus - &sminus) * C64::new(0.0, -0.5);
    SpinOps { spin, sx, sy, sz }
}

/// `exp(-i angle S_axis)` for a single spin.
pub fn rotation_unitary(spin: Spin, axis: Axis, angle: f64) -> DMatrix<C64> {
    let ops = spin_operators(spin);
    let d = spin.dim();
    if axis == Axis::Z {
        return DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::from_polar(1.0, -angle * spin.m(i))
            } else {
                C64::new(0.0, 0.0)
            }
        });
    }
    let eig = SymmetricEigen::new(ops.component(axis).clone());
    let phases = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::from_polar(1.0, -angle * eig.eigenvalues[i])
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Per-site dimensions and row-major strides of the chain's tensor-product basis.
///
/// Site 0 is the most significant index and site `n - 1` has stride 1. The
/// links occupy sites 0 and `n - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteLayout {
    spins: Vec<Spin>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl SiteLayout {
    pub fn new(spins: Vec<Spin>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::InvalidArgument("a layout needs at least one site".into()));
        }
        let dims: Vec<usize> = spins.iter().map(|s| s.dim()).collect();
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len() - 1).rev() {
            strides[i] = strides[i + 1]
                .checked_mul(dims[i + 1])
                .ok_or_else(|| Error::InvalidArgument("Hilbert space dimension overflows".into()))?;
        }
        let total_dim = strides[0]
            .checked_mul(dims[0])
            .ok_or_else(|| Error::InvalidArgument("Hilbert space dimension overflows".into()))?;
        Ok(Self { spins, dims, strides, total_dim })
    }

    /// `[s_link, s_bulk, ..., s_bulk, s_link]` with `n_sites` sites in total.
    pub fn chain(n_sites: usize, s_bulk: Spin, s_link: Spin) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidArgument(format!("chain needs two link sites, got {n_sites} sites")));
        }
        let mut spins = vec![s_bulk; n_sites];
        spins[0] = s_link;
        spins[n_sites - 1] = s_link;
        Self::new(spins)
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Local basis index of `site` inside the global basis index `index`.
    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site]
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites() {
            return Err(Error::SiteOutOfRange { site, n_sites: self.n_sites() });
        }
        Ok(())
    }
}

/// Sparse matrix of `op` acting on `sites` (in the order given) and the
/// identity elsewhere.
///
/// `op` is indexed by the combined local index of `sites`, the first listed
/// site being most significant.
pub fn embed_operator(op: &DMatrix<C64>, sites: &[usize], layout: &SiteLayout) -> Result<CsrMatrix> {
    for (k, &s) in sites.iter().enumerate() {
        layout.check_site(s)?;
        if sites[..k].contains(&s) {
            return Err(Error::InvalidArgument(format!("site {s} listed twice")));
        }
    }
    let local_dims: Vec<usize> = sites.iter().map(|&s| layout.dims()[s]).collect();
    let local_dim: usize = local_dims.iter().product();
    if op.nrows() != local_dim || op.ncols() != local_dim {
        return Err(Error::DimensionMismatch { expected: local_dim, actual: op.nrows().max(op.ncols()) });
    }
    // Nonzeros of each local row, with the global index offset of the column.
    let rows: Vec<Vec<(isize, C64)>> = (0..local_dim)
        .map(|lr| {
            let r_digits = split_local(lr, &local_dims);
            (0..local_dim)
                .filter(|&lc| op[(lr, lc)] != C64::new(0.0, 0.0))
                .map(|lc| {
                    let c_digits = split_local(lc, &local_dims);
                    let offset = sites
                        .iter()
                        .zip(r_digits.iter().zip(&c_digits))
                        .map(|(&s, (&dr, &dc))| (dc as isize - dr as isize) * layout.strides()[s] as isize)
                        .sum::<isize>();
                    (offset, op[(lr, lc)])
                })
                .collect()
        })
        .collect();
    Ok(CsrMatrix::from_row_fn(layout.total_dim(), |r, buf| {
        let lr = sites.iter().fold(0, |acc, &s| acc * layout.dims()[s] + layout.digit(r, s));
        buf.extend(rows[lr].iter().map(|&(off, v)| ((r as isize + off) as usize, v)));
    }))
}

fn split_local(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        digits[k] = index % dims[k];
        index /= dims[k];
    }
    digits
}
