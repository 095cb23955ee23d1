//! Randomized invariants of the measures, the thermal protocol and the quench
//! dynamics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qudit_link::{
    dynamics::{entanglement_trajectory, LinkSeed, QuenchSetup, TimeGrid},
    eigen::{lanczos_lowest, LanczosOptions},
    equilibrium::{entanglement_vs_lambda, thermal_link_state, ThermalOptions},
    measures::{log_negativity, purity, reduce_state, LinkDensityMatrix, SpectralEnsemble},
    model::{build_hamiltonian, ChainSpec},
    C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    random_matrix(n, rng).qr().q()
}

/// `A A^dagger / Tr`, full rank with probability one.
fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let a = random_matrix(n, rng);
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Mixture of `rank` random pure states.
fn random_mixture(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let mut rho = DMatrix::zeros(n, n);
    let mut total = 0.0;
    for _ in 0..rank {
        let psi = random_matrix(n, rng).column(0).normalize();
        let w: f64 = rng.random::<f64>() + 0.1;
        rho += &psi * psi.adjoint() * C64::new(w, 0.0);
        total += w;
    }
    rho / C64::new(total, 0.0)
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn spin_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(1.5)]
}

fn seed_strategy() -> impl Strategy<Value = LinkSeed> {
    prop_oneof![Just(LinkSeed::Zero), Just(LinkSeed::One), Just(LinkSeed::Uniform)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn negativity_is_local_unitary_invariant(seed: u64, d in 2usize..=4, rank in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = LinkDensityMatrix::new(random_mixture(d * d, rank, &mut rng), d).unwrap();
        let rotated = rho.local_unitary(&random_unitary(d, &mut rng), &random_unitary(d, &mut rng));
        let (a, b) = (log_negativity(&rho).normalized, log_negativity(&rotated).normalized);
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&a));
    }

    #[test]
    fn product_states_are_unentangled(seed: u64, d in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let product = random_density(d, &mut rng).kronecker(&random_density(d, &mut rng));
        let ln = log_negativity(&LinkDensityMatrix::new(product, d).unwrap());
        prop_assert!(ln.normalized.abs() < 1e-12, "{}", ln.normalized);
    }

    #[test]
    fn reduced_link_state_is_a_density_matrix(seed: u64, n in 4usize..=7, s_bulk in spin_strategy(), s_link in spin_strategy()) {
        let spec = ChainSpec::new(n, s_bulk, s_link).unwrap();
        let layout = spec.layout().unwrap();
        prop_assume!(layout.total_dim() <= 4096);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = reduce_state(&random_state(layout.total_dim(), &mut rng), &layout).unwrap();
        prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(rho.hermiticity_defect() < 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|&e| e > -1e-12));
        prop_assert!(rho.purity() > 0.0 && rho.purity() <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn purity_grows_with_beta(lambda in 0.005f64..1.0, beta in 1.0f64..1e3, factor in 1.0f64..100.0) {
        let spec = ChainSpec::new(6, 0.5, 1.0).unwrap().with_lambda(lambda);
        let (h, _) = build_hamiltonian(&spec).unwrap();
        let pairs = lanczos_lowest(&h, 27, &LanczosOptions::default()).unwrap();
        let cold = purity(&SpectralEnsemble::new(pairs.clone(), beta * factor).unwrap());
        let warm = purity(&SpectralEnsemble::new(pairs, beta).unwrap());
        prop_assert!(warm > 0.0 && cold <= 1.0 + 1e-12);
        prop_assert!(warm <= cold + 1e-12, "{warm} > {cold}");
    }

    #[test]
    fn certified_points_stay_certified_when_colder(lambda in 0.005f64..1.0, beta in 10.0f64..1e4, factor in 1.0f64..10.0) {
        let spec = ChainSpec::new(6, 0.5, 0.5).unwrap().with_lambda(lambda);
        let (_, warm) = thermal_link_state(&spec, beta, &ThermalOptions::default()).unwrap();
        prop_assume!(warm.valid);
        let opts = ThermalOptions { k_cap: Some(warm.k_used), ..Default::default() };
        let (_, cold) = thermal_link_state(&spec, beta * factor, &opts).unwrap();
        prop_assert!(cold.valid);
        prop_assert!(cold.truncation_margin <= warm.truncation_margin);
    }

    #[test]
    fn angle_is_irrelevant_for_spin_half_chains(lambda in 0.005f64..1.0, theta_a in -PI..PI, theta_b in -PI..PI, j2 in 0.0f64..0.3) {
        let base = ChainSpec::new(6, 0.5, 0.5).unwrap().with_j2(j2);
        let grid = [lambda, 2.0 * lambda];
        let opts = ThermalOptions::default();
        let a = entanglement_vs_lambda(&base.with_theta(theta_a), 1e4, &grid, &opts).unwrap();
        let b = entanglement_vs_lambda(&base.with_theta(theta_b), 1e4, &grid, &opts).unwrap();
        prop_assert_eq!(a.points, b.points);
    }

    #[test]
    fn lanczos_is_seed_deterministic(seed_a: u64, seed_b: u64, lambda in 0.01f64..1.0) {
        let spec = ChainSpec::new(6, 1.0, 0.5).unwrap().with_lambda(lambda);
        let (h, _) = build_hamiltonian(&spec).unwrap();
        let run = |seed| lanczos_lowest(&h, 12, &LanczosOptions::default().with_seed(seed)).unwrap();
        let (a, again, b) = (run(seed_a), run(seed_a), run(seed_b));
        prop_assert_eq!(&a.values, &again.values);
        prop_assert_eq!(&a.vectors, &again.vectors);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quench_conserves_norm_energy_and_magnetization(
        n in 4usize..=6,
        s_bulk in prop_oneof![Just(0.5), Just(1.0)],
        s_link in spin_strategy(),
        lambda in 0.01f64..1.0,
        omega in 0.0..PI,
        phi in 0.0..2.0 * PI,
        seed in seed_strategy(),
    ) {
        let spec = ChainSpec::new(n, s_bulk, s_link).unwrap().with_lambda(lambda).with_theta(0.3);
        let setup = QuenchSetup::new(spec, seed, omega, phi).unwrap().with_times(TimeGrid::new(0.25, 200).unwrap());
        let tr = entanglement_trajectory(&setup).unwrap();
        prop_assert!(tr.max_norm_drift() < 1e-8, "norm drift {:e}", tr.max_norm_drift());
        prop_assert!(tr.energy_drift < 1e-8, "energy drift {:e}", tr.energy_drift);
        prop_assert!(tr.sz_drift < 1e-8, "Sz drift {:e}", tr.sz_drift);
        prop_assert!(tr.entanglement.iter().all(|e| (0.0..=1.0 + 1e-9).contains(e)));
    }

    #[test]
    fn entanglement_series_ignores_phi(
        n in 4usize..=6,
        s_link in spin_strategy(),
        lambda in 0.01f64..1.0,
        omega in 0.0..PI,
        phi in 0.0..2.0 * PI,
        seed in seed_strategy(),
    ) {
        let spec = ChainSpec::new(n, 1.0, s_link).unwrap().with_lambda(lambda);
        let grid = TimeGrid::new(0.25, 200).unwrap();
        let run = |phi| entanglement_trajectory(&QuenchSetup::new(spec, seed, omega, phi).unwrap().with_times(grid)).unwrap();
        let (a, b) = (run(0.0), run(phi));
        for (x, y) in a.entanglement.iter().zip(&b.entanglement) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn thermal_curves_are_reproducible() {
    let spec = ChainSpec::new(7, 0.5, 1.0).unwrap();
    let grid = [0.01, 0.05, 0.2];
    let opts = ThermalOptions { seed: 9, ..Default::default() };
    let a = entanglement_vs_lambda(&spec, 1e4, &grid, &opts).unwrap();
    let b = entanglement_vs_lambda(&spec, 1e4, &grid, &opts).unwrap();
    assert_eq!(serde_json::to_string(&a.points).unwrap(), serde_json::to_string(&b.points).unwrap());
}
