//! Sparse solvers and reductions checked against brute-force references on
//! every chain with at most 1296 basis states.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use qudit_link::{
    dynamics::{prepare_initial_state, ChebyshevPropagator, LinkSeed, QuenchSetup, TimeGrid},
    eigen::{dense_spectrum, lanczos_lowest, spectral_bounds, LanczosOptions},
    measures::reduce_state,
    model::{build_hamiltonian, ChainSpec},
    spin::SiteLayout,
    C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_DIM: usize = 1296;

/// All (N, s_bulk, s_link) chains within the budget, each with a coupling,
/// NNN strength and angle drawn from a fixed rotation so that every term of
/// the Hamiltonian is exercised somewhere.
fn small_specs() -> Vec<ChainSpec> {
    let lambdas = [0.01, 0.1, 1.0];
    let j2s = [0.0, 0.2];
    let thetas = [0.0, -PI / 3.0, PI / 3.0];
    let mut out = Vec::new();
    for s_bulk in [0.5, 1.0] {
        for s_link in [0.5, 1.0, 1.5] {
            for n in 4.. {
                let spec = ChainSpec::new(n, s_bulk, s_link).unwrap();
                if spec.layout().unwrap().total_dim() > MAX_DIM {
                    break;
                }
                let i = out.len();
                out.push(spec.with_lambda(lambdas[i % 3]).with_j2(j2s[i % 2]).with_theta(thetas[i % 3]));
            }
        }
    }
    out
}

fn label(spec: &ChainSpec) -> String {
    format!(
        "N={} s_b={} s_l={} lambda={} j2={} theta={:.3}",
        spec.n_sites, spec.s_bulk, spec.s_link, spec.lambda, spec.j2, spec.theta
    )
}

fn overlap(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// `rho[(a b), (a' b')] = sum over full-basis pairs whose bulk digits agree`.
fn naive_link_reduction(psi: &[C64], layout: &SiteLayout) -> DMatrix<C64> {
    let n = layout.n_sites();
    let d = layout.dims()[0];
    let dim = layout.total_dim();
    let digits: Vec<Vec<usize>> = (0..dim).map(|i| (0..n).map(|s| layout.digit(i, s)).collect()).collect();
    let mut rho = DMatrix::zeros(d * d, d * d);
    for i in 0..dim {
        for j in 0..dim {
            if digits[i][1..n - 1] == digits[j][1..n - 1] {
                let r = digits[i][0] * d + digits[i][n - 1];
                let c = digits[j][0] * d + digits[j][n - 1];
                rho[(r, c)] += psi[i] * psi[j].conj();
            }
        }
    }
    rho
}

#[test]
fn spec_grid_covers_all_spin_combinations() {
    let specs = small_specs();
    assert_eq!(specs.len(), 28);
    assert!(specs.iter().all(|s| s.layout().unwrap().total_dim() <= MAX_DIM));
    assert!(specs.iter().any(|s| s.layout().unwrap().total_dim() == MAX_DIM));
}

#[test]
fn lanczos_matches_dense_spectrum() {
    for spec in small_specs() {
        let (h, _) = build_hamiltonian(&spec).unwrap();
        let dense = dense_spectrum(&h).unwrap();
        let d = spec.d_link();
        let k = (9 * d * d).min(h.dim());
        let pairs = lanczos_lowest(&h, k, &LanczosOptions::default().with_seed(11)).unwrap();
        assert!(pairs.len() >= k);
        let worst = pairs.values.iter().zip(&dense.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{}: eigenvalue deviation {worst:e}", label(&spec));
        assert!(pairs.max_residual() < 1e-10, "{}: residual {:e}", label(&spec), pairs.max_residual());
    }
}

#[test]
fn chebyshev_matches_dense_propagator() {
    let horizon = 50.0;
    for (i, spec) in small_specs().into_iter().enumerate() {
        let (h, layout) = build_hamiltonian(&spec).unwrap();
        let dense = dense_spectrum(&h).unwrap();
        let bounds = spectral_bounds(&h, 3).unwrap();
        let seed = [LinkSeed::Zero, LinkSeed::One, LinkSeed::Uniform][i % 3];
        let setup = QuenchSetup::new(spec, seed, PI / 3.0, 0.7).unwrap();
        let psi0 = prepare_initial_state(&setup, &layout).unwrap();
        let grid = TimeGrid::covering(horizon, 0.25).unwrap();
        let prop = ChebyshevPropagator::new(bounds, grid.dt, 1e-14).unwrap();
        let mut psi = psi0.clone();
        let mut work = [vec![], vec![], vec![]];
        let mut worst: f64 = 0.0;
        for (step, t) in grid.times().enumerate().skip(1) {
            prop.step(&h, &mut psi, &mut work).unwrap();
            if step % 20 == 0 || step == grid.steps {
                let exact = dense.propagate(&psi0, t);
                worst = worst.max(1.0 - overlap(&exact, &psi).norm());
            }
        }
        assert!(grid.horizon() >= horizon);
        assert!(worst < 1e-9, "{}: fidelity deficit {worst:e}", label(&spec));
    }
}

#[test]
fn link_reduction_matches_index_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in small_specs() {
        let (h, layout) = build_hamiltonian(&spec).unwrap();
        let ground = lanczos_lowest(&h, 1, &LanczosOptions::default()).unwrap().vectors.remove(0);
        for psi in [random_state(layout.total_dim(), &mut rng), ground] {
            let fast = reduce_state(&psi, &layout).unwrap();
            let naive = naive_link_reduction(&psi, &layout);
            let worst = (fast.matrix() - &naive).iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "{}: elementwise deviation {worst:e}", label(&spec));
        }
    }
}

#[test]
fn larger_chains_match_dense_low_spectrum() {
    // Spectrum agreement up to the oracle budget: 3 * 3 d_link^2 pairs.
    for (n, s_bulk, s_link) in [(11, 0.5, 0.5), (7, 1.0, 1.0), (10, 0.5, 1.0)] {
        let spec = ChainSpec::new(n, s_bulk, s_link).unwrap().with_lambda(0.05);
        let (h, _) = build_hamiltonian(&spec).unwrap();
        assert!(h.dim() <= 4096);
        let dense = dense_spectrum(&h).unwrap();
        let d = spec.d_link();
        let pairs = lanczos_lowest(&h, (9 * d * d).min(h.dim()), &LanczosOptions::default()).unwrap();
        let worst = pairs.values.iter().zip(&dense.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{}: eigenvalue deviation {worst:e}", label(&spec));
    }
}
