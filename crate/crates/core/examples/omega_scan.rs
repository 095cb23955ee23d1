//! Maximizing the quench entanglement over the link rotation angle.

use qudit_link::{
    dynamics::{maximize_over_omega, omega_grid, LinkSeed, QuenchContext, QuenchSetup},
    model::ChainSpec,
};

fn main() {
    let spec = ChainSpec::new(8, 0.5, 1.0).unwrap().with_lambda(0.03);
    let ctx = QuenchContext::new(&spec, 1 << 20, 0).unwrap();
    let template = QuenchSetup::new(spec, LinkSeed::Zero, 0.0, 0.0).unwrap();
    let scan = maximize_over_omega(&ctx, &template, &omega_grid(17), None).unwrap();
    for s in &scan.per_omega {
        println!(
            "omega/pi = {:.4}: peak {:.4} at t = {:8.2}, mean {:.4}",
            s.omega / std::f64::consts::PI,
            s.peak,
            s.peak_time,
            s.time_average
        );
    }
    println!(
        "max over (t, omega): {:.4} at omega = {:.4}, t = {:.2}; best time average {:.4}",
        scan.max_entanglement, scan.best_omega, scan.best_time, scan.max_time_average
    );
}
