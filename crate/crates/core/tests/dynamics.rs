//! Quench scenarios with known qualitative outcomes.

use std::f64::consts::{FRAC_PI_2, PI};

use qudit_link::{
    dynamics::{
        entanglement_trajectory, maximize_over_omega, omega_grid, LinkSeed, QuenchContext, QuenchSetup, TimeGrid,
    },
    model::ChainSpec,
};

#[test]
fn unrotated_polarized_links_stay_unentangled() {
    for (n, s_bulk, s_link) in [(6, 0.5, 0.5), (6, 1.0, 1.0), (8, 0.5, 1.0), (5, 1.0, 1.5)] {
        let spec = ChainSpec::new(n, s_bulk, s_link).unwrap().with_lambda(0.05);
        let setup = QuenchSetup::new(spec, LinkSeed::Zero, 0.0, 0.0).unwrap();
        let tr = entanglement_trajectory(&setup).unwrap();
        let max = tr.entanglement.iter().copied().fold(0.0, f64::max);
        assert!(max < 1e-9, "N={n} s_b={s_bulk} s_l={s_link}: max E {max:e}");
    }
}

#[test]
fn phi_sweep_leaves_series_unchanged() {
    let spec = ChainSpec::new(6, 1.0, 1.0).unwrap().with_lambda(0.03);
    let ctx = QuenchContext::new(&spec, 1 << 20, 0).unwrap();
    let template =
        QuenchSetup::new(spec, LinkSeed::One, 1.1, 0.0).unwrap().with_times(TimeGrid::new(0.25, 1200).unwrap());
    let reference = ctx.trajectory(&template).unwrap();
    assert!(reference.peak > 0.1);
    for phi in [0.5, PI / 2.0, 2.0, PI, 5.5] {
        let tr = ctx.trajectory(&QuenchSetup { phi, ..template.clone() }).unwrap();
        let worst = tr.entanglement.iter().zip(&reference.entanglement).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "phi = {phi}: deviation {worst:e}");
    }
}

#[test]
fn collapse_time_scales_inversely_with_coupling() {
    let collapse = |lambda: f64| {
        let spec = ChainSpec::new(6, 1.0, 0.5).unwrap().with_lambda(lambda);
        let tr = entanglement_trajectory(&QuenchSetup::new(spec, LinkSeed::Zero, FRAC_PI_2, 0.0).unwrap()).unwrap();
        tr.first_collapse(0.5, 0.05).expect("entanglement rises and collapses")
    };
    let ratio = collapse(0.01) / collapse(0.03);
    assert!((ratio / 3.0 - 1.0).abs() < 0.25, "collapse-time ratio {ratio}");
}

#[test]
fn spin_half_links_prefer_quarter_turn() {
    let grid = omega_grid(33);
    let step = grid[1] - grid[0];
    for lambda in [0.01, 0.03] {
        let spec = ChainSpec::new(6, 1.0, 0.5).unwrap().with_lambda(lambda);
        let ctx = QuenchContext::new(&spec, 1 << 20, 0).unwrap();
        let template = QuenchSetup::new(spec, LinkSeed::Zero, 0.0, 0.0).unwrap();
        let scan = maximize_over_omega(&ctx, &template, &grid, None).unwrap();
        assert!((scan.best_omega - FRAC_PI_2).abs() <= step + 1e-12, "lambda {lambda}: omega* = {}", scan.best_omega);
        assert!(
            (scan.best_average_omega - FRAC_PI_2).abs() <= step + 1e-12,
            "lambda {lambda}: averaged omega* = {}",
            scan.best_average_omega
        );
    }
}

#[test]
fn omega_scan_reports_consistent_maxima() {
    let spec = ChainSpec::new(6, 0.5, 1.0).unwrap().with_lambda(0.1);
    let ctx = QuenchContext::new(&spec, 1 << 20, 0).unwrap();
    let template = QuenchSetup::new(spec, LinkSeed::Uniform, 0.0, 0.0).unwrap();
    let grid = omega_grid(9);
    let mut kept = Vec::new();
    let scan = maximize_over_omega(&ctx, &template, &grid, Some(&mut kept)).unwrap();
    assert_eq!(kept.len(), grid.len());
    assert_eq!(scan.per_omega.len(), grid.len());
    let best = kept.iter().map(|t| t.peak).fold(0.0, f64::max);
    assert_eq!(scan.max_entanglement, best);
    let winner = kept.iter().find(|t| t.peak == best).unwrap();
    assert_eq!((scan.best_omega, scan.best_time), (winner.omega, winner.peak_time));
    let best_avg = kept.iter().map(|t| t.time_average).fold(0.0, f64::max);
    assert_eq!(scan.max_time_average, best_avg);
    for tr in &kept {
        assert!(tr.max_norm_drift() < 1e-8);
        assert!(tr.entanglement.iter().all(|e| (0.0..=1.0 + 1e-9).contains(e)));
    }
}
