//! Logarithmic negativity of textbook two-qudit states.

use nalgebra::DMatrix;
use qudit_link::{
    measures::{log_negativity, LinkDensityMatrix},
    C64,
};

fn maximally_entangled(d: usize) -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        psi[i * d + i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    psi
}

fn main() {
    for d in 2..=5 {
        let rho = LinkDensityMatrix::from_pure(&maximally_entangled(d), d).unwrap();
        let ln = log_negativity(&rho);
        println!("maximally entangled d = {d}: E = {:.12}, log2(2N+1) = {:.6}", ln.normalized, ln.raw);
    }
    // Werner state p |Bell><Bell| + (1 - p) I/4
    let bell = maximally_entangled(2);
    for p in [0.2, 1.0 / 3.0, 0.5, 0.8] {
        let m = DMatrix::from_fn(4, 4, |i, j| {
            bell[i] * bell[j].conj() * p + if i == j { C64::new((1.0 - p) / 4.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let ln = log_negativity(&LinkDensityMatrix::new(m, 2).unwrap());
        println!("Werner p = {p:.3}: E = {:.6}, negativity = {:.6}", ln.normalized, ln.negativity);
    }
}
