//! Chain description and Hamiltonian assembly.
//!
//! The chain is open with `n_sites` sites. Sites `0` and `n_sites - 1` hold the
//! link spins, everything in between is bulk. With `J` the energy unit,
//!
//! ```text
//! H = J [ sum_{bulk NN} H_ij + J2 sum_{bulk NNN} H_ij ]
//!   + lambda J [ H_01 + H_{n-2,n-1} + J2 (H_02 + H_{n-3,n-1}) ]
//! ```
//!
//! and every pair term is the bilinear-biquadratic coupling of
//! [`two_site_coupling`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{
    error::{Error, Result},
    sparse::CsrMatrix,
    spin::{spin_operators, SiteLayout, Spin},
    C64,
};

/// Default ceiling on the Hilbert-space dimension accepted by [`build_hamiltonian`].
pub const DEFAULT_MAX_DIM: usize = 1 << 22;

/// Full model description. Energies are in units of `j`, `lambda` and `j2`
/// are relative to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub s_bulk: Spin,
    pub s_link: Spin,
    pub lambda: f64,
    pub j2: f64,
    pub theta: f64,
    pub j: f64,
}

impl ChainSpec {
    /// Heisenberg chain (`theta = 0`, `j2 = 0`, `lambda = 0`, `j = 1`).
    pub fn new(n_sites: usize, s_bulk: f64, s_link: f64) -> Result<Self> {
        let spec = Self {
            n_sites,
            s_bulk: Spin::new(s_bulk)?,
            s_link: Spin::new(s_link)?,
            lambda: 0.0,
            j2: 0.0,
            theta: 0.0,
            j: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_j2(self, j2: f64) -> Self {
        Self { j2, ..self }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn with_j(self, j: f64) -> Self {
        Self { j, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 4 {
            return Err(Error::InvalidArgument(format!(
                "n_sites must be at least 4 (two links and two bulk sites), got {}",
                self.n_sites
            )));
        }
        if !(self.j > 0.0 && self.j.is_finite()) {
            return Err(Error::InvalidArgument(format!("j must be positive, got {}", self.j)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !self.j2.is_finite() || !self.theta.is_finite() {
            return Err(Error::InvalidArgument("j2 and theta must be finite".into()));
        }
        Ok(())
    }

    /// Link dimension `d_l = 2 s_link + 1`.
    pub fn d_link(&self) -> usize {
        self.s_link.dim()
    }

    /// The bare link coupling `lambda * j`.
    pub fn lambda_tilde(&self) -> f64 {
        self.lambda * self.j
    }

    pub fn layout(&self) -> Result<SiteLayout> {
        SiteLayout::chain(self.n_sites, self.s_bulk, self.s_link)
    }
}

/// One pair term `coefficient * H_ij` of the Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub coefficient: f64,
}

/// All pair terms of the chain, bulk first. Zero-coefficient bonds are omitted.
pub fn bonds(spec: &ChainSpec) -> Vec<Bond> {
    let n = spec.n_sites;
    let (j, j2, lt) = (spec.j, spec.j2, spec.lambda_tilde());
    let mut out = Vec::new();
    out.extend((1..n - 2).map(|i| Bond { i, j: i + 1, coefficient: j }));
    out.extend((1..n - 3).map(|i| Bond { i, j: i + 2, coefficient: j * j2 }));
    out.push(Bond { i: 0, j: 1, coefficient: lt });
    out.push(Bond { i: n - 2, j: n - 1, coefficient: lt });
    out.push(Bond { i: 0, j: 2, coefficient: lt * j2 });
    out.push(Bond { i: n - 3, j: n - 1, coefficient: lt * j2 });
    out.retain(|b| b.coefficient != 0.0);
    out
}

/// `S_i . S_j` on the product space of two spins, site `i` most significant.
pub fn heisenberg_pair(s_i: Spin, s_j: Spin) -> DMatrix<C64> {
    let a = spin_operators(s_i);
    let b = spin_operators(s_j);
    a.sx.kronecker(&b.sx) + a.sy.kronecker(&b.sy) + a.sz.kronecker(&b.sz)
}

/// Pair coupling: plain `S_i . S_j` when either spin is 1/2, otherwise
/// `cos(theta) S_i.S_j + sin(theta) (S_i.S_j)^2`.
pub fn two_site_coupling(s_i: Spin, s_j: Spin, theta: f64) -> DMatrix<C64> {
    let dot = heisenberg_pair(s_i, s_j);
    if s_i.is_half() || s_j.is_half() {
        return dot;
    }
    let sq = &dot * &dot;
    dot * C64::new(theta.cos(), 0.0) + sq * C64::new(theta.sin(), 0.0)
}

/// Assembles `H` with the default dimension budget.
pub fn build_hamiltonian(spec: &ChainSpec) -> Result<(CsrMatrix, SiteLayout)> {
    build_hamiltonian_with_budget(spec, DEFAULT_MAX_DIM)
}

/// Nonzeros of one local row: `(digit_i, digit_j, value)`.
type LocalRow = Vec<(usize, usize, C64)>;

pub fn build_hamiltonian_with_budget(spec: &ChainSpec, max_dim: usize) -> Result<(CsrMatrix, SiteLayout)> {
    spec.validate()?;
    let layout = spec.layout()?;
    if layout.total_dim() > max_dim {
        return Err(Error::Capacity { dim: layout.total_dim(), budget: max_dim });
    }
    let terms: Vec<(Bond, Vec<LocalRow>)> = bonds(spec)
        .into_iter()
        .map(|bond| {
            let (si, sj) = (layout.spins()[bond.i], layout.spins()[bond.j]);
            let pair = two_site_coupling(si, sj, spec.theta);
            let dj = sj.dim();
            // local row -> [(digit_i', digit_j', coefficient * value)]
            let rows = (0..pair.nrows())
                .map(|lr| {
                    (0..pair.ncols())
                        .filter(|&lc| pair[(lr, lc)].norm() > 1e-14)
                        .map(|lc| (lc / dj, lc % dj, pair[(lr, lc)] * bond.coefficient))
                        .collect()
                })
                .collect();
            (bond, rows)
        })
        .collect();
    let strides = layout.strides();
    let h = CsrMatrix::from_row_fn(layout.total_dim(), |r, buf| {
        for (bond, rows) in &terms {
            let (di, dj) = (layout.digit(r, bond.i), layout.digit(r, bond.j));
            let base = r - di * strides[bond.i] - dj * strides[bond.j];
            let lr = di * layout.dims()[bond.j] + dj;
            buf.extend(rows[lr].iter().map(|&(ci, cj, v)| (base + ci * strides[bond.i] + cj * strides[bond.j], v)));
        }
    });
    Ok((h, layout))
}

/// `2 m` of the total `Sz` for every basis state, as integers.
pub fn twice_total_sz(layout: &SiteLayout) -> Vec<i64> {
    (0..layout.total_dim())
        .map(|r| {
            layout
                .spins()
                .iter()
                .enumerate()
                .map(|(site, s)| i64::from(s.twice()) - 2 * layout.digit(r, site) as i64)
                .sum()
        })
        .collect()
}

/// Diagonal operator `sum_i Sz_i`.
pub fn total_sz(layout: &SiteLayout) -> CsrMatrix {
    let diag: Vec<f64> = twice_total_sz(layout).into_iter().map(|m2| m2 as f64 / 2.0).collect();
    CsrMatrix::diagonal(&diag)
}

/// Basis states sharing one total-`Sz` eigenvalue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SzSector {
    pub twice_m: i64,
    pub basis: Vec<usize>,
}

/// Splits the basis into total-`Sz` sectors, highest magnetization first.
///
/// `H` is block diagonal in these sectors, so a sector block
/// (`h.restrict(&sector.basis)`) can be diagonalized on its own. Thermal and
/// quench states mix sectors, so nothing in the crate does this by default.
pub fn sz_sectors(layout: &SiteLayout) -> Vec<SzSector> {
    let m2 = twice_total_sz(layout);
    let mut sectors: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    for (r, m) in m2.into_iter().enumerate() {
        sectors.entry(m).or_default().push(r);
    }
    sectors.into_iter().rev().map(|(twice_m, basis)| SzSector { twice_m, basis }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use std::f64::consts::PI;

    fn sorted_eigs(m: &DMatrix<C64>) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn spin_half_pair_singlet_triplet() {
        for theta in [0.0, 1.0, -PI / 3.0] {
            let e = sorted_eigs(&two_site_coupling(Spin::HALF, Spin::HALF, theta));
            let want = [-0.75, 0.25, 0.25, 0.25];
            assert!(e.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn mixed_pair_drops_biquadratic_term() {
        let a = two_site_coupling(Spin::HALF, Spin::ONE, PI / 3.0);
        let b = two_site_coupling(Spin::HALF, Spin::ONE, 0.0);
        assert_eq!(a, b);
        // (S.S)^2 = (1 - S.S)/2 for a spin-1/2 partner
        let dot = heisenberg_pair(Spin::HALF, Spin::ONE);
        let id = DMatrix::<C64>::identity(6, 6);
        let diff = &dot * &dot - (id - &dot) * C64::new(0.5, 0.0);
        assert!(diff.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn spin_one_pair_bbq_spectrum() {
        // Oracle: S.S has eigenvalues -2 (x1), -1 (x3), 1 (x5); H(theta) is a
        // polynomial in S.S so its spectrum is cos*x + sin*x^2 per multiplet.
        for theta in [0.0, -PI / 3.0, PI / 3.0] {
            let got = sorted_eigs(&two_site_coupling(Spin::ONE, Spin::ONE, theta));
            let mut want: Vec<f64> = [(-2.0, 1), (-1.0, 3), (1.0, 5)]
                .iter()
                .flat_map(|&(x, m)| std::iter::repeat_n(theta.cos() * x + theta.sin() * x * x, m))
                .collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "theta {theta}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn pair_commutes_with_total_spin() {
        for (a, b) in
            [(Spin::ONE, Spin::ONE), (Spin::HALF, Spin::new(1.5).unwrap()), (Spin::ONE, Spin::new(2.0).unwrap())]
        {
            let h = two_site_coupling(a, b, -0.4);
            let (oa, ob) = (spin_operators(a), spin_operators(b));
            let (ia, ib) = (DMatrix::<C64>::identity(a.dim(), a.dim()), DMatrix::<C64>::identity(b.dim(), b.dim()));
            let tot = |x: &DMatrix<C64>, y: &DMatrix<C64>| x.kronecker(&ib) + ia.kronecker(y);
            let sz = tot(&oa.sz, &ob.sz);
            let s2 = {
                let sx = tot(&oa.sx, &ob.sx);
                let sy = tot(&oa.sy, &ob.sy);
                &sx * &sx + &sy * &sy + &sz * &sz
            };
            for op in [sz, s2] {
                assert!((&h * &op - &op * &h).iter().all(|z| z.norm() < 1e-10));
            }
        }
    }

    #[test]
    fn bond_list() {
        let spec = ChainSpec::new(6, 0.5, 1.0).unwrap().with_lambda(0.1).with_j2(0.2);
        let pairs: Vec<(usize, usize)> = bonds(&spec).iter().map(|b| (b.i, b.j)).collect();
        assert_eq!(pairs, vec![(1, 2), (2, 3), (3, 4), (1, 3), (2, 4), (0, 1), (4, 5), (0, 2), (3, 5)]);
        let nnn = ChainSpec::new(4, 0.5, 0.5).unwrap().with_lambda(1.0).with_j2(0.5);
        let pairs: Vec<(usize, usize)> = bonds(&nnn).iter().map(|b| (b.i, b.j)).collect();
        assert_eq!(pairs, vec![(1, 2), (0, 1), (2, 3), (0, 2), (1, 3)]);
        assert!(bonds(&ChainSpec::new(5, 1.0, 1.0).unwrap()).iter().all(|b| b.i > 0 && b.j < 4));
    }

    #[test]
    fn uniform_four_site_chain_matches_dense() {
        let spec = ChainSpec::new(4, 0.5, 0.5).unwrap().with_lambda(1.0);
        let (h, _) = build_hamiltonian(&spec).unwrap();
        // dense oracle: sum of kron-embedded S.S on neighbours
        let dot = heisenberg_pair(Spin::HALF, Spin::HALF);
        let id = |n: usize| DMatrix::<C64>::identity(n, n);
        let dense = dot.kronecker(&id(4)) + id(2).kronecker(&dot).kronecker(&id(2)) + id(4).kronecker(&dot);
        assert!((h.to_dense() - &dense).iter().all(|z| z.norm() < 1e-14));
        let e0 = sorted_eigs(&dense)[0];
        assert!((e0 - (-(3.0 + 2.0 * 3f64.sqrt()) / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn hermitian_and_sz_conserving_over_grid() {
        for n in 4..=7 {
            for sb in [0.5, 1.0] {
                for sl in [0.5, 1.0, 1.5] {
                    if n == 7 && (sb == 1.0 || sl == 1.5) {
                        continue;
                    }
                    for theta in [0.0, PI / 3.0, -PI / 3.0] {
                        for j2 in [0.0, 0.1, 0.2] {
                            let spec =
                                ChainSpec::new(n, sb, sl).unwrap().with_lambda(0.3).with_j2(j2).with_theta(theta);
                            let (h, layout) = build_hamiltonian(&spec).unwrap();
                            assert!(h.hermiticity_defect() < 1e-12);
                            let c = h.commutator(&total_sz(&layout)).unwrap();
                            assert!(c.frobenius_norm() < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn chain_is_reflection_symmetric() {
        let spec = ChainSpec::new(6, 1.0, 0.5).unwrap().with_lambda(0.2).with_j2(0.1).with_theta(-0.5);
        let (h, layout) = build_hamiltonian(&spec).unwrap();
        let reflect = |r: usize| {
            (0..layout.n_sites()).fold(0, |acc, s| acc * layout.dims()[s] + layout.digit(r, layout.n_sites() - 1 - s))
        };
        for (r, c, v) in h.iter() {
            assert!((h.get(reflect(r), reflect(c)) - v).norm() < 1e-14);
        }
    }

    #[test]
    fn theta_only_enters_spin_one_pairs() {
        let base = ChainSpec::new(6, 0.5, 1.0).unwrap().with_lambda(0.4).with_j2(0.2);
        let (a, _) = build_hamiltonian(&base.with_theta(0.0)).unwrap();
        let (b, _) = build_hamiltonian(&base.with_theta(1.2)).unwrap();
        assert_eq!(a, b);
        let bulk_one = ChainSpec::new(5, 1.0, 0.5).unwrap().with_lambda(0.4);
        let (a, _) = build_hamiltonian(&bulk_one.with_theta(0.0)).unwrap();
        let (b, _) = build_hamiltonian(&bulk_one.with_theta(1.2)).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() > 0.1);
    }

    #[test]
    fn total_sz_values() {
        let l = SiteLayout::chain(2, Spin::HALF, Spin::HALF).unwrap();
        let sz = total_sz(&l);
        let diag: Vec<f64> = (0..4).map(|i| sz.get(i, i).re).collect();
        assert_eq!(diag, vec![1.0, 0.0, 0.0, -1.0]);
        let l = SiteLayout::chain(5, Spin::ONE, Spin::new(1.5).unwrap()).unwrap();
        let m2 = twice_total_sz(&l);
        assert_eq!(*m2.iter().max().unwrap(), 12);
        assert_eq!(*m2.iter().min().unwrap(), -12);
        assert!(m2.iter().all(|m| m % 2 == 0));
    }

    #[test]
    fn sectors_partition_the_basis_and_block_h() {
        let spec = ChainSpec::new(5, 0.5, 1.0).unwrap().with_lambda(0.3);
        let (h, layout) = build_hamiltonian(&spec).unwrap();
        let sectors = sz_sectors(&layout);
        assert_eq!(sectors.iter().map(|s| s.basis.len()).sum::<usize>(), layout.total_dim());
        let mut sector_of = vec![0i64; layout.total_dim()];
        for s in &sectors {
            s.basis.iter().for_each(|&r| sector_of[r] = s.twice_m);
        }
        assert!(h.iter().all(|(r, c, _)| sector_of[r] == sector_of[c]));
        assert_eq!(sectors[0].twice_m, 7);
        assert_eq!(sectors[0].basis, vec![0]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ChainSpec::new(3, 0.5, 0.5).is_err());
        assert!(ChainSpec::new(4, 0.3, 0.5).is_err());
        let spec = ChainSpec::new(4, 0.5, 0.5).unwrap();
        assert!(spec.with_j(0.0).validate().is_err());
        assert!(spec.with_lambda(-0.1).validate().is_err());
        let big = ChainSpec::new(12, 1.0, 1.0).unwrap();
        assert!(matches!(build_hamiltonian_with_budget(&big, 1000), Err(Error::Capacity { .. })));
    }
}
