//! Link entanglement of the low-temperature state versus coupling.

use qudit_link::{
    equilibrium::{default_lambda_grid, entanglement_vs_lambda, ThermalOptions},
    model::ChainSpec,
};

fn main() {
    let spec = ChainSpec::new(8, 0.5, 0.5).unwrap();
    let curve = entanglement_vs_lambda(&spec, 1e4, &default_lambda_grid(), &ThermalOptions::default()).unwrap();
    println!("{:>10} {:>10} {:>8} {:>4} {:>10}", "lambda", "E", "purity", "k", "margin");
    for p in &curve.points {
        println!(
            "{:>10.5} {:>10.6} {:>8.4} {:>4} {:>10.2e}",
            p.lambda, p.entanglement, p.purity, p.k_used, p.truncation_margin
        );
    }
    let s = &curve.summary;
    println!(
        "max E = {:.6} at lambda = {:.5} (purity {:.6}); vanishing below {:?}",
        s.entanglement_max, s.lambda_max, s.purity_at_max, s.lambda_vanishing
    );
}
