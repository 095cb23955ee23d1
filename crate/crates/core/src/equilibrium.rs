//! Low-temperature link entanglement.
//!
//! The thermal state is approximated by Boltzmann-weighting the lowest `k`
//! eigenstates, starting from `k = 3 d_link^2` and doubling until the highest
//! kept state carries relative weight `exp(-beta dE_max) < eps`.

use rayon::prelude::*;
use serde::Serialize;

use crate::{
    eigen::{lanczos_lowest, LanczosOptions},
    error::{Error, Result},
    measures::{log_negativity, purity, reduce_ensemble, LinkDensityMatrix, SpectralEnsemble},
    model::{build_hamiltonian_with_budget, ChainSpec, DEFAULT_MAX_DIM},
    sparse::CsrMatrix,
    spin::SiteLayout,
};

/// Entanglement below this marks the "vanishing" side of a curve.
pub const VANISHING_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct ThermalOptions {
    /// Bound on the truncation margin `exp(-beta dE_max)`.
    pub eps: f64,
    /// Eigenpair residual tolerance.
    pub tol: f64,
    pub seed: u64,
    /// Largest window size tried; defaults to the full dimension.
    pub k_cap: Option<usize>,
    pub max_dim: usize,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self { eps: 1e-6, tol: 1e-10, seed: 0, k_cap: None, max_dim: DEFAULT_MAX_DIM }
    }
}

/// One point of an entanglement-vs-coupling curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThermalPoint {
    pub lambda: f64,
    pub beta: f64,
    /// Normalized logarithmic negativity of the link state.
    pub entanglement: f64,
    pub purity: f64,
    pub k_used: usize,
    pub truncation_margin: f64,
    pub ground_energy: f64,
    pub max_residual: f64,
    /// The truncation margin is below `eps`.
    pub valid: bool,
    /// Set when the point could not be computed; numeric fields are NaN then.
    pub error: Option<String>,
}

impl ThermalPoint {
    fn failed(lambda: f64, beta: f64, err: &Error) -> Self {
        Self {
            lambda,
            beta,
            entanglement: f64::NAN,
            purity: f64::NAN,
            k_used: 0,
            truncation_margin: f64::NAN,
            ground_energy: f64::NAN,
            max_residual: f64::NAN,
            valid: false,
            error: Some(err.to_string()),
        }
    }
}

/// Thermal link state of `spec` at inverse temperature `beta` (units of `1/J`).
pub fn thermal_link_state(
    spec: &ChainSpec,
    beta: f64,
    opts: &ThermalOptions,
) -> Result<(LinkDensityMatrix, ThermalPoint)> {
    let (h, layout) = build_hamiltonian_with_budget(spec, opts.max_dim)?;
    thermal_state_of(&h, &layout, spec, beta, opts)
}

/// Same as [`thermal_link_state`] on an already assembled Hamiltonian.
pub fn thermal_state_of(
    h: &CsrMatrix,
    layout: &SiteLayout,
    spec: &ChainSpec,
    beta: f64,
    opts: &ThermalOptions,
) -> Result<(LinkDensityMatrix, ThermalPoint)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive and finite, got {beta}")));
    }
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {}", opts.eps)));
    }
    let dim = h.dim();
    let cap = opts.k_cap.unwrap_or(dim).clamp(1, dim);
    let lanczos = LanczosOptions { tol: opts.tol, seed: opts.seed, ..Default::default() };
    let d = spec.d_link();
    let mut k = (3 * d * d).min(cap);
    let ensemble = loop {
        let pairs = lanczos_lowest(h, k, &lanczos)?;
        let ensemble = SpectralEnsemble::new(pairs, beta)?;
        if ensemble.truncation_margin < opts.eps || k >= cap {
            break ensemble;
        }
        k = (2 * k).min(cap);
    };
    let rho = reduce_ensemble(&ensemble, layout)?;
    let ln = log_negativity(&rho);
    let point = ThermalPoint {
        lambda: spec.lambda,
        beta,
        entanglement: ln.normalized,
        purity: purity(&ensemble),
        k_used: ensemble.pairs.len(),
        truncation_margin: ensemble.truncation_margin,
        ground_energy: ensemble.ground_energy(),
        max_residual: ensemble.pairs.max_residual(),
        valid: ensemble.truncation_margin < opts.eps,
        error: None,
    };
    Ok((rho, point))
}

/// Curve-derived quantities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveSummary {
    /// Coupling with the largest entanglement (smallest such on ties).
    pub lambda_max: f64,
    pub entanglement_max: f64,
    pub purity_at_max: f64,
    /// Largest grid coupling below `lambda_max` whose entanglement is under
    /// [`VANISHING_THRESHOLD`].
    pub lambda_vanishing: Option<f64>,
    /// Some point failed or is uncertified.
    pub partial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThermalCurve {
    pub points: Vec<ThermalPoint>,
    pub summary: CurveSummary,
}

impl ThermalCurve {
    /// Log10-width of the part of the coupling grid where the entanglement is
    /// at least `threshold`. Each point owns the cell reaching halfway (in
    /// `log10 lambda`) to its neighbours; an end cell mirrors its inner half.
    pub fn window_measure(&self, threshold: f64) -> f64 {
        let logs: Vec<f64> = self.points.iter().map(|p| p.lambda.log10()).collect();
        let n = logs.len();
        if n < 2 {
            return 0.0;
        }
        (0..n)
            .filter(|&i| self.points[i].entanglement >= threshold)
            .map(|i| {
                let left = if i > 0 { logs[i] - logs[i - 1] } else { logs[1] - logs[0] };
                let right = if i + 1 < n { logs[i + 1] - logs[i] } else { logs[n - 1] - logs[n - 2] };
                (left + right) / 2.0
            })
            .sum::<f64>()
            // an empty f64 sum is -0.0
            + 0.0
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

/// 48 log-spaced couplings in `[1e-3, 1]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-3, 1.0, 48)
}

/// Entanglement at every coupling of `grid`, points solved independently in parallel.
pub fn entanglement_vs_lambda(
    template: &ChainSpec,
    beta: f64,
    grid: &[f64],
    opts: &ThermalOptions,
) -> Result<ThermalCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("coupling grid is empty".into()));
    }
    if grid.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("couplings must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("coupling grid must be strictly ascending".into()));
    }
    template.validate()?;
    let points: Vec<ThermalPoint> = grid
        .par_iter()
        .map(|&lambda| match thermal_link_state(&template.with_lambda(lambda), beta, opts) {
            Ok((_, point)) => point,
            Err(e) => ThermalPoint::failed(lambda, beta, &e),
        })
        .collect();
    let summary = summarize(&points);
    Ok(ThermalCurve { points, summary })
}

fn summarize(points: &[ThermalPoint]) -> CurveSummary {
    let partial = points.iter().any(|p| !p.valid);
    let best =
        points.iter().enumerate().filter(|(_, p)| p.error.is_none()).fold(None::<(usize, f64)>, |best, (i, p)| {
            match best {
                Some((_, e)) if p.entanglement <= e => best,
                _ => Some((i, p.entanglement)),
            }
        });
    let Some((m, e_max)) = best else {
        return CurveSummary {
            lambda_max: f64::NAN,
            entanglement_max: f64::NAN,
            purity_at_max: f64::NAN,
            lambda_vanishing: None,
            partial: true,
        };
    };
    let lambda_vanishing =
        points[..m].iter().rev().find(|p| p.error.is_none() && p.entanglement < VANISHING_THRESHOLD).map(|p| p.lambda);
    CurveSummary {
        lambda_max: points[m].lambda,
        entanglement_max: e_max,
        purity_at_max: points[m].purity,
        lambda_vanishing,
        partial,
    }
}
