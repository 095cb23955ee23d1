//! One quench trajectory: rotated spin-1/2 links on a polarized spin-1 bulk.

use std::f64::consts::FRAC_PI_2;

use qudit_link::{
    dynamics::{entanglement_trajectory, LinkSeed, QuenchSetup},
    model::ChainSpec,
};

fn main() {
    let spec = ChainSpec::new(6, 1.0, 0.5).unwrap().with_lambda(0.03);
    let setup = QuenchSetup::new(spec, LinkSeed::Zero, FRAC_PI_2, 0.0).unwrap();
    let tr = entanglement_trajectory(&setup).unwrap();
    let stride = (tr.times.len() / 40).max(1);
    for (t, e) in tr.times.iter().zip(&tr.entanglement).step_by(stride) {
        println!("{t:8.1} {e:.4} {}", "#".repeat((e * 60.0) as usize));
    }
    println!(
        "peak {:.4} at t = {:.2}; mean {:.4} (converged: {}); first collapse at {:?}",
        tr.peak,
        tr.peak_time,
        tr.time_average,
        tr.average_converged,
        tr.first_collapse(0.5, 0.05)
    );
    println!(
        "norm drift {:.1e}, energy drift {:.1e}, Sz drift {:.1e}",
        tr.max_norm_drift(),
        tr.energy_drift,
        tr.sz_drift
    );
}
