//! Spin matrices, their algebra, and link rotations.

use qudit_link::{
    spin::{rotation_unitary, spin_operators, Axis, Spin},
    C64,
};

fn main() {
    for twice in 1..=4 {
        let spin = Spin::from_twice(twice).unwrap();
        let ops = spin_operators(spin);
        let commutator = &ops.sx * &ops.sy - &ops.sy * &ops.sx;
        let defect = (commutator - &ops.sz * C64::new(0.0, 1.0)).norm();
        let casimir = &ops.sx * &ops.sx + &ops.sy * &ops.sy + &ops.sz * &ops.sz;
        let s = spin.value();
        println!(
            "s = {spin}: dim {}, |[Sx,Sy] - i Sz| = {defect:.1e}, S^2 = {:.4} (s(s+1) = {:.4})",
            ops.dim(),
            casimir[(0, 0)].re,
            s * (s + 1.0)
        );
    }

    // |0> is the maximal-Sz state; rotating it by omega about y and phi about z
    let (omega, phi) = (std::f64::consts::FRAC_PI_3, 0.4);
    for spin in [Spin::HALF, Spin::ONE] {
        let u = rotation_unitary(spin, Axis::Z, phi) * rotation_unitary(spin, Axis::Y, omega);
        let amplitudes: Vec<String> = u.column(0).iter().map(|a| format!("{:.4}{:+.4}i", a.re, a.im)).collect();
        println!("Uz({phi}) Uy(pi/3)|0>, s = {spin}: [{}]", amplitudes.join(", "));
    }
}
