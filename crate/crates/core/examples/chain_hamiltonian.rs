//! Assembling the chain Hamiltonian and inspecting its structure.

use qudit_link::{
    model::{bonds, build_hamiltonian, sz_sectors, ChainSpec},
    LinearOperator,
};

fn main() {
    let spec = ChainSpec::new(8, 1.0, 0.5).unwrap().with_lambda(0.05).with_j2(0.1).with_theta(-0.4);
    let (h, layout) = build_hamiltonian(&spec).unwrap();
    println!("sites {:?}", layout.dims());
    println!("dimension {}, stored entries {}, max per row {}", h.dim(), h.nnz(), h.max_nnz_per_row());
    println!("hermiticity defect {:.1e}, real: {}", h.hermiticity_defect(), h.is_real());
    for b in bonds(&spec) {
        println!("  bond ({}, {}) x {:.4}", b.i, b.j, b.coefficient);
    }
    let sectors = sz_sectors(&layout);
    let largest = sectors.iter().map(|s| s.basis.len()).max().unwrap();
    println!("{} total-Sz sectors, largest {largest}", sectors.len());
}
