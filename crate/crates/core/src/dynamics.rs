//! Quench dynamics from a rotated product state.
//!
//! The bulk starts fully polarized (`|0>` on every bulk site) and both links
//! start in `Uz(phi) Uy(omega) |seed>`. The state is propagated with a
//! Chebyshev expansion of `exp(-i H dt)`, and the link entanglement is
//! recorded on a uniform time grid.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    eigen::{axpy, dot, norm, spectral_bounds},
    error::{Error, Result},
    measures::{log_negativity, reduce_state},
    model::{build_hamiltonian_with_budget, total_sz, ChainSpec, DEFAULT_MAX_DIM},
    sparse::{CsrMatrix, LinearOperator},
    spin::{rotation_unitary, Axis, SiteLayout, Spin},
    C64,
};

/// Default truncation threshold on the Chebyshev coefficients.
pub const DEFAULT_CHEBYSHEV_TOL: f64 = 1e-14;
/// Time-average convergence threshold.
pub const AVERAGE_CONVERGENCE: f64 = 1e-3;

/// Link state before rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkSeed {
    /// `|0>`, the maximal-`Sz` state.
    Zero,
    /// `|1>`.
    One,
    /// `(1/sqrt d) sum_i |i>`.
    Uniform,
}

impl LinkSeed {
    pub fn vector(self, spin: Spin) -> Vec<C64> {
        let d = spin.dim();
        let mut v = vec![C64::new(0.0, 0.0); d];
        match self {
            LinkSeed::Zero => v[0] = C64::new(1.0, 0.0),
            LinkSeed::One => v[1] = C64::new(1.0, 0.0),
            LinkSeed::Uniform => v.iter_mut().for_each(|x| *x = C64::new(1.0 / (d as f64).sqrt(), 0.0)),
        }
        v
    }
}

/// Uniform time grid `0, dt, 2 dt, ..., steps * dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { dt, steps })
    }

    /// Grid reaching at least `horizon` with step `dt`.
    pub fn covering(horizon: f64, dt: f64) -> Result<Self> {
        let g = Self::new(dt, 0)?;
        Ok(Self { steps: (horizon / dt - 1e-9).ceil().max(0.0) as usize, ..g })
    }

    /// Horizon `8 pi / (lambda J)` with step `min(0.25 / J, horizon / 2000)`.
    pub fn default_for(spec: &ChainSpec) -> Result<Self> {
        let lt = spec.lambda_tilde();
        if !(lt > 0.0) {
            return Err(Error::InvalidArgument("default time grid needs lambda > 0".into()));
        }
        let horizon = 8.0 * PI / lt;
        Self::covering(horizon, (0.25 / spec.j).min(horizon / 2000.0))
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |i| i as f64 * self.dt)
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuenchSetup {
    pub spec: ChainSpec,
    pub seed_state: LinkSeed,
    pub omega: f64,
    pub phi: f64,
    pub times: TimeGrid,
    pub chebyshev_tol: f64,
}

impl QuenchSetup {
    /// Setup with the default time grid and Chebyshev tolerance.
    pub fn new(spec: ChainSpec, seed_state: LinkSeed, omega: f64, phi: f64) -> Result<Self> {
        let setup = Self {
            spec,
            seed_state,
            omega,
            phi,
            times: TimeGrid::default_for(&spec)?,
            chebyshev_tol: DEFAULT_CHEBYSHEV_TOL,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn with_times(self, times: TimeGrid) -> Self {
        Self { times, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(0.0..=PI + 1e-12).contains(&self.omega) {
            return Err(Error::InvalidArgument(format!("omega must lie in [0, pi], got {}", self.omega)));
        }
        if !(0.0..2.0 * PI).contains(&self.phi) {
            return Err(Error::InvalidArgument(format!("phi must lie in [0, 2 pi), got {}", self.phi)));
        }
        if self.seed_state == LinkSeed::One && self.spec.s_link.dim() < 2 {
            return Err(Error::InvalidArgument("seed |1> needs a link dimension of at least 2".into()));
        }
        if !(self.chebyshev_tol > 0.0) {
            return Err(Error::InvalidArgument("chebyshev_tol must be positive".into()));
        }
        TimeGrid::new(self.times.dt, self.times.steps)?;
        Ok(())
    }
}

/// `|link> ⊗ |0...0>_bulk ⊗ |link>` with both links rotated.
pub fn prepare_initial_state(setup: &QuenchSetup, layout: &SiteLayout) -> Result<Vec<C64>> {
    let s_link = layout.spins()[0];
    if layout.spins()[layout.n_sites() - 1] != s_link {
        return Err(Error::InvalidArgument("both links must carry the same spin".into()));
    }
    let u = rotation_unitary(s_link, Axis::Z, setup.phi) * rotation_unitary(s_link, Axis::Y, setup.omega);
    let seed = nalgebra::DVector::from_vec(setup.seed_state.vector(s_link));
    let link = u * seed;
    let d = s_link.dim();
    let stride_a = layout.strides()[0];
    let mut psi = vec![C64::new(0.0, 0.0); layout.total_dim()];
    // bulk digits all zero: only the link digits vary
    for a in 0..d {
        for b in 0..d {
            psi[a * stride_a + b] = link[a] * link[b];
        }
    }
    Ok(psi)
}

/// `J_n(x)` for `n = 0..=n_max`, by Miller's downward recurrence normalized
/// with `J_0 + 2 sum_k J_2k = 1`.
pub fn bessel_j_sequence(x: f64, n_max: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = {
        let m = n_max.max(ax.ceil() as usize) + 20 + (ax.sqrt() * 8.0) as usize;
        m + (m % 2)
    };
    let mut values = vec![0.0; start + 2];
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut sum = 0.0;
    for n in (0..=start).rev() {
        values[n] = cur;
        if n % 2 == 0 {
            sum += if n == 0 { cur } else { 2.0 * cur };
        }
        let prev = 2.0 * n as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            // rescale everything accumulated so far
            let s = 1e-250;
            values[n..=start].iter_mut().for_each(|v| *v *= s);
            sum *= s;
            next *= s;
            cur *= s;
        }
    }
    values.truncate(n_max + 1);
    values
        .into_iter()
        .enumerate()
        .map(|(n, v)| {
            let j = v / sum;
            // J_n(-x) = (-1)^n J_n(x)
            if x < 0.0 && n % 2 == 1 {
                -j
            } else {
                j
            }
        })
        .collect()
}

/// Chebyshev expansion of `exp(-i H dt)` for a fixed step.
///
/// With `H = a X + b` and the spectrum of `X` inside `[-1, 1]`,
/// `exp(-i H dt) = exp(-i b dt) sum_n (2 - delta_n0) (-i)^n J_n(a dt) T_n(X)`.
#[derive(Clone, Debug)]
pub struct ChebyshevPropagator {
    dt: f64,
    center: f64,
    half_width: f64,
    coefficients: Vec<C64>,
}

impl ChebyshevPropagator {
    pub fn new(bounds: (f64, f64), dt: f64, tol: f64) -> Result<Self> {
        let (lo, hi) = bounds;
        if !(hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid spectral bounds ({lo}, {hi})")));
        }
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be >= 0, got {dt}")));
        }
        let center = (hi + lo) / 2.0;
        let half_width = (hi - lo) / 2.0;
        let x = half_width * dt;
        // |J_n(x)| decays super-exponentially once n > x
        let n_max = (x + 10.0 * x.cbrt() + 40.0).ceil() as usize;
        let bessel = bessel_j_sequence(x, n_max);
        let mut terms = n_max + 1;
        while terms > 1 && (bessel[terms - 1].abs() < tol && (terms - 1) as f64 > x) {
            terms -= 1;
        }
        let phase = C64::from_polar(1.0, -center * dt);
        let minus_i_pow = [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0)];
        let coefficients = (0..terms)
            .map(|n| {
                let weight = if n == 0 { 1.0 } else { 2.0 };
                phase * minus_i_pow[n % 4] * (weight * bessel[n])
            })
            .collect();
        Ok(Self { dt, center, half_width, coefficients })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_terms(&self) -> usize {
        self.coefficients.len()
    }

    /// One step on `psi`, in place. `work` must hold three vectors of the state length.
    pub fn step<A: LinearOperator + ?Sized>(&self, h: &A, psi: &mut [C64], work: &mut [Vec<C64>; 3]) -> Result<()> {
        let n = psi.len();
        let norm_in = norm(psi);
        let [prev, cur, next] = work;
        for w in [&mut *prev, &mut *cur, &mut *next] {
            w.resize(n, C64::new(0.0, 0.0));
        }
        let (a, b) = (self.half_width, self.center);
        prev.copy_from_slice(psi);
        let mut out: Vec<C64> = psi.iter().map(|&v| v * self.coefficients[0]).collect();
        if self.coefficients.len() > 1 {
            // T_1 = X psi
            h.apply(prev, cur);
            cur.iter_mut().zip(prev.iter()).for_each(|(c, &p)| *c = (*c - p * b) / a);
            axpy(self.coefficients[1], cur, &mut out);
            for &coef in &self.coefficients[2..] {
                // T_{n+1} = 2 X T_n - T_{n-1}
                h.apply(cur, next);
                next.iter_mut()
                    .zip(cur.iter().zip(prev.iter()))
                    .for_each(|(nx, (&c, &p))| *nx = (*nx - c * b) * (2.0 / a) - p);
                axpy(coef, next, &mut out);
                std::mem::swap(prev, cur);
                std::mem::swap(cur, next);
            }
        }
        let norm_out = norm(&out);
        if !norm_out.is_finite() || (norm_out - norm_in).abs() > 1e-6 * norm_in.max(1e-300) {
            return Err(Error::SpectralBounds { norm: norm_out });
        }
        psi.copy_from_slice(&out);
        Ok(())
    }
}

/// `exp(-i H dt) psi` in a single Chebyshev expansion.
pub fn chebyshev_evolve<A: LinearOperator + ?Sized>(
    h: &A,
    psi: &[C64],
    dt: f64,
    bounds: (f64, f64),
    tol: f64,
) -> Result<Vec<C64>> {
    if h.dim() != psi.len() {
        return Err(Error::DimensionMismatch { expected: h.dim(), actual: psi.len() });
    }
    let prop = ChebyshevPropagator::new(bounds, dt, tol)?;
    let mut out = psi.to_vec();
    prop.step(h, &mut out, &mut Default::default())?;
    Ok(out)
}

/// Link entanglement along one quench.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub omega: f64,
    pub phi: f64,
    pub times: Vec<f64>,
    pub entanglement: Vec<f64>,
    /// `| ||psi(t)|| - 1 |` at each grid time.
    pub norm_drift: Vec<f64>,
    /// Largest deviation of `<H>` from its initial value.
    pub energy_drift: f64,
    /// Largest deviation of `<Sz_total>` from its initial value.
    pub sz_drift: f64,
    pub peak_time: f64,
    pub peak: f64,
    /// Mean of the entanglement over the grid.
    pub time_average: f64,
    /// The mean over the trailing half of the grid is within
    /// [`AVERAGE_CONVERGENCE`] of the full mean.
    pub average_converged: bool,
    pub chebyshev_terms: usize,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().copied().fold(0.0, f64::max)
    }

    /// First time after the first crossing of `rise` at which the entanglement
    /// drops back below `fall`.
    pub fn first_collapse(&self, rise: f64, fall: f64) -> Option<f64> {
        let start = self.entanglement.iter().position(|&e| e >= rise)?;
        self.entanglement[start..].iter().position(|&e| e < fall).map(|k| self.times[start + k])
    }
}

/// Builds `H` and its spectral bounds, then runs one trajectory.
pub fn entanglement_trajectory(setup: &QuenchSetup) -> Result<Trajectory> {
    let ctx = QuenchContext::new(&setup.spec, DEFAULT_MAX_DIM, 0)?;
    ctx.trajectory(setup)
}

/// Hamiltonian, layout and spectral bounds shared across trajectories.
#[derive(Clone, Debug)]
pub struct QuenchContext {
    pub spec: ChainSpec,
    pub hamiltonian: CsrMatrix,
    pub layout: SiteLayout,
    pub bounds: (f64, f64),
    sz_diag: Vec<f64>,
}

impl QuenchContext {
    pub fn new(spec: &ChainSpec, max_dim: usize, seed: u64) -> Result<Self> {
        let (hamiltonian, layout) = build_hamiltonian_with_budget(spec, max_dim)?;
        let bounds = spectral_bounds(&hamiltonian, seed)?;
        let sz = total_sz(&layout);
        let sz_diag = (0..layout.total_dim()).map(|i| sz.get(i, i).re).collect();
        Ok(Self { spec: *spec, hamiltonian, layout, bounds, sz_diag })
    }

    pub fn trajectory(&self, setup: &QuenchSetup) -> Result<Trajectory> {
        setup.validate()?;
        if setup.spec != self.spec {
            return Err(Error::InvalidArgument("setup does not match the context's chain".into()));
        }
        let h = &self.hamiltonian;
        let prop = ChebyshevPropagator::new(self.bounds, setup.times.dt, setup.chebyshev_tol)?;
        let mut psi = prepare_initial_state(setup, &self.layout)?;
        let mut work: [Vec<C64>; 3] = Default::default();
        let mut hpsi = vec![C64::new(0.0, 0.0); psi.len()];
        let energy = |psi: &[C64], hpsi: &mut [C64]| {
            h.apply(psi, hpsi);
            dot(psi, hpsi).re
        };
        let sz_of = |psi: &[C64]| psi.iter().zip(&self.sz_diag).map(|(v, s)| v.norm_sqr() * s).sum::<f64>();
        let (e0, sz0) = (energy(&psi, &mut hpsi), sz_of(&psi));
        let n_points = setup.times.steps + 1;
        let mut times = Vec::with_capacity(n_points);
        let mut entanglement = Vec::with_capacity(n_points);
        let mut norm_drift = Vec::with_capacity(n_points);
        let (mut energy_drift, mut sz_drift) = (0.0f64, 0.0f64);
        for (i, t) in setup.times.times().enumerate() {
            if i > 0 {
                prop.step(h, &mut psi, &mut work)?;
                energy_drift = energy_drift.max((energy(&psi, &mut hpsi) - e0).abs());
                sz_drift = sz_drift.max((sz_of(&psi) - sz0).abs());
            }
            let nrm = norm(&psi);
            norm_drift.push((nrm - 1.0).abs());
            // measure on the normalized state; psi itself is never rescaled
            let unit: Vec<C64> = psi.iter().map(|v| v / nrm).collect();
            entanglement.push(log_negativity(&reduce_state(&unit, &self.layout)?).normalized);
            times.push(t);
        }
        let (peak_index, peak) =
            entanglement
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &e)| if e > best.1 { (i, e) } else { best });
        let time_average = entanglement.iter().sum::<f64>() / n_points as f64;
        let tail = &entanglement[n_points / 2..];
        let tail_average = tail.iter().sum::<f64>() / tail.len() as f64;
        Ok(Trajectory {
            omega: setup.omega,
            phi: setup.phi,
            peak_time: times[peak_index],
            times,
            entanglement,
            norm_drift,
            energy_drift,
            sz_drift,
            peak,
            time_average,
            average_converged: (tail_average - time_average).abs() < AVERAGE_CONVERGENCE,
            chebyshev_terms: prop.n_terms(),
        })
    }
}

/// `n` uniform rotation angles covering `[0, pi]`.
pub fn omega_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Per-angle trajectory summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaSummary {
    pub omega: f64,
    pub peak: f64,
    pub peak_time: f64,
    pub time_average: f64,
    pub average_converged: bool,
    pub max_norm_drift: f64,
    pub energy_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaScan {
    pub lambda: f64,
    pub per_omega: Vec<OmegaSummary>,
    /// Maximum entanglement over times and angles.
    pub max_entanglement: f64,
    pub best_time: f64,
    pub best_omega: f64,
    /// Largest time-averaged entanglement over angles.
    pub max_time_average: f64,
    pub best_average_omega: f64,
}

/// Runs one trajectory per angle (in parallel) and maximizes over them.
///
/// Ties go to the smaller angle, then the earlier time. `keep` receives every
/// full trajectory in angle order, for callers that want to record them.
pub fn maximize_over_omega(
    ctx: &QuenchContext,
    template: &QuenchSetup,
    omegas: &[f64],
    keep: Option<&mut Vec<Trajectory>>,
) -> Result<OmegaScan> {
    if omegas.is_empty() {
        return Err(Error::InvalidArgument("omega grid is empty".into()));
    }
    let trajectories: Vec<Trajectory> = omegas
        .par_iter()
        .map(|&omega| ctx.trajectory(&QuenchSetup { omega, ..template.clone() }))
        .collect::<Result<_>>()?;
    let per_omega: Vec<OmegaSummary> = trajectories
        .iter()
        .map(|t| OmegaSummary {
            omega: t.omega,
            peak: t.peak,
            peak_time: t.peak_time,
            time_average: t.time_average,
            average_converged: t.average_converged,
            max_norm_drift: t.max_norm_drift(),
            energy_drift: t.energy_drift,
        })
        .collect();
    let best = per_omega.iter().fold(&per_omega[0], |b, s| if s.peak > b.peak { s } else { b });
    let best_avg = per_omega.iter().fold(&per_omega[0], |b, s| if s.time_average > b.time_average { s } else { b });
    let scan = OmegaScan {
        lambda: template.spec.lambda,
        max_entanglement: best.peak,
        best_time: best.peak_time,
        best_omega: best.omega,
        max_time_average: best_avg.time_average,
        best_average_omega: best_avg.omega,
        per_omega,
    };
    if let Some(out) = keep {
        *out = trajectories;
    }
    Ok(scan)
}
