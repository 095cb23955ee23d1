//! Block Lanczos against full diagonalization on a small chain.

use qudit_link::{
    eigen::{dense_spectrum, lanczos_lowest, spectral_bounds, LanczosOptions},
    model::{build_hamiltonian, ChainSpec},
};

fn main() {
    let spec = ChainSpec::new(6, 1.0, 1.0).unwrap().with_lambda(0.1);
    let (h, _) = build_hamiltonian(&spec).unwrap();
    let t = std::time::Instant::now();
    let pairs = lanczos_lowest(&h, 10, &LanczosOptions::default().with_seed(1)).unwrap();
    let lanczos_time = t.elapsed();
    let t = std::time::Instant::now();
    let dense = dense_spectrum(&h).unwrap();
    let dense_time = t.elapsed();
    // the cluster rule may return more than 10 to keep multiplets whole
    println!("{} Lanczos pairs in {lanczos_time:?}, dense in {dense_time:?}", pairs.len());
    for (i, (a, b)) in pairs.values.iter().zip(&dense.values).enumerate() {
        println!("{i:3} {a:+.12} {b:+.12} residual {:.1e}", pairs.residuals[i]);
    }
    let (lo, hi) = spectral_bounds(&h, 0).unwrap();
    println!("bounds [{lo:.6}, {hi:.6}] enclose [{:.6}, {:.6}]", dense.values[0], dense.values.last().unwrap());
}
