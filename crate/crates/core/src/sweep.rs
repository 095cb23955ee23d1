//! Batch sweeps driven by TOML configuration files, and the command-line
//! front-end built on them.
//!
//! A configuration looks like
//!
//! ```toml
//! mode = "thermal"
//!
//! [model]
//! n_sites = 8
//! s_bulk = 0.5
//! s_link = 0.5
//!
//! [grid]
//! lambda_log = { min = 1e-3, max = 1.0, points = 48 }
//! beta = [1e4]
//!
//! [solver]
//! seed = 7
//! ```
//!
//! Unknown keys are rejected, and every error names the offending line.
//!
//! Output tables (all plain CSV with a fixed header):
//!
//! - `thermal_<ts>.csv`: `beta,lambda,entanglement,purity,k_used,truncation_margin,ground_energy,max_residual,valid,error`
//! - `dynamics_<ts>.csv`: `lambda,omega,t,entanglement,norm_drift` (skipped with `output.trajectories = false`)
//! - `dynamics_<ts>_omega.csv`: `lambda,omega,peak,peak_time,time_average,average_converged,max_norm_drift,energy_drift`
//! - `dynamics_<ts>_summary.csv`: `lambda,max_entanglement,best_time,best_omega,max_time_average,best_average_omega,dt,horizon,error`
//! - `oracle-check_<ts>.csv`: `lambda,dim,eigenvalues,max_eigen_deviation,max_fidelity_deficit,horizon,pass`
//!
//! `<ts>` is the run start in Unix seconds. A `manifest.json` next to the
//! tables holds the resolved configuration, the seed, the crate version and the
//! per-point certificates.

use std::{
    ffi::OsString,
    fmt, fs, io,
    path::{Path, PathBuf},
    time::{SystemTime, UNIX_EPOCH},
};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{
    dynamics::{
        maximize_over_omega, omega_grid, LinkSeed, QuenchContext, QuenchSetup, TimeGrid, DEFAULT_CHEBYSHEV_TOL,
    },
    eigen::{dense_spectrum_capped, dot, lanczos_lowest, LanczosOptions, DEFAULT_ORACLE_CAP},
    equilibrium::{default_lambda_grid, entanglement_vs_lambda, log_grid, ThermalCurve, ThermalOptions},
    model::{build_hamiltonian_with_budget, ChainSpec, DEFAULT_MAX_DIM},
    spin::Spin,
};

/// Fidelity-deficit and eigenvalue thresholds for `oracle-check`.
pub const ORACLE_EIGEN_TOL: f64 = 1e-10;
pub const ORACLE_FIDELITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Thermal,
    Dynamics,
    OracleCheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Thermal => "thermal",
            Mode::Dynamics => "dynamics",
            Mode::OracleCheck => "oracle-check",
        }
    }
}

/// Configuration file as written.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mode: Mode,
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_sites: usize,
    pub s_bulk: f64,
    pub s_link: f64,
    /// Biquadratic angle in radians. Exclusive with `theta_over_pi`.
    pub theta: Option<f64>,
    pub theta_over_pi: Option<f64>,
    #[serde(default)]
    pub j2: f64,
    #[serde(default = "one")]
    pub j: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Explicit couplings. Exclusive with `lambda_log`.
    pub lambda: Option<Vec<f64>>,
    pub lambda_log: Option<LogRange>,
    pub beta: Option<Vec<f64>>,
    /// Number of uniform angles on `[0, pi]`. Exclusive with `omega`.
    pub omega_points: Option<usize>,
    pub omega: Option<Vec<f64>>,
    pub phi: Option<f64>,
    pub link_state: Option<LinkSeed>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub eps: Option<f64>,
    pub k_cap: Option<usize>,
    pub oracle_cap: Option<usize>,
    pub chebyshev_tol: Option<f64>,
    pub max_dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Write the full `(t, omega)` table in dynamics mode.
    #[serde(default = "yes")]
    pub trajectories: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), trajectories: true }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_directory() -> PathBuf {
    PathBuf::from("results")
}

/// Fully defaulted, range-checked configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub mode: Mode,
    pub model: ChainSpec,
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    pub omega: Vec<f64>,
    pub phi: f64,
    pub link_state: LinkSeed,
    /// `None` means the per-coupling default `8 pi / lambda` (dynamics) or
    /// 50 (oracle-check).
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub seed: u64,
    pub tol: f64,
    pub eps: f64,
    pub k_cap: Option<usize>,
    pub oracle_cap: usize,
    pub chebyshev_tol: f64,
    pub max_dim: usize,
    pub output_directory: PathBuf,
    pub trajectories: bool,
}

/// A configuration problem, located in the source when possible.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{}:", p.display())?;
        }
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: ")?,
            (Some(l), None) => write!(f, "{l}: ")?,
            _ if self.path.is_some() => f.write_str(" ")?,
            _ => {}
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Line and column (1-based) of byte `offset` in `src`.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, col)
}

/// Line of `key = ...` inside `[section]` (top level when `section` is empty).
fn key_line(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = header.trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim();
        // dotted keys such as `model.n_sites = 8` at top level
        let full = if current.is_empty() { k.to_string() } else { format!("{current}.{k}") };
        let want = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        if full == want {
            return Some(i + 1);
        }
    }
    None
}

/// 1-based line of the `[section]` header, for errors about missing keys.
fn section_line(src: &str, section: &str) -> Option<usize> {
    src.lines()
        .position(|l| l.trim().strip_prefix('[').and_then(|l| l.split(']').next()).is_some_and(|h| h.trim() == section))
        .map(|i| i + 1)
}

struct Checker<'a> {
    src: &'a str,
}

impl Checker<'_> {
    fn fail(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let field = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        ConfigError {
            path: None,
            line: key_line(self.src, section, key).or_else(|| section_line(self.src, section)),
            column: None,
            message: format!("{field}: {}", message.into()),
        }
    }
}

impl SweepConfig {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(src, s.start)).unzip();
            ConfigError { path: None, line, column, message: e.message().trim().to_string() }
        })
    }

    /// Applies defaults and range checks. `src` is only used to locate errors.
    pub fn resolve(&self, src: &str, seed_override: Option<u64>) -> Result<ResolvedConfig, ConfigError> {
        let c = Checker { src };
        let m = &self.model;
        let spin = |key: &str, s: f64| {
            Spin::new(s).map_err(|_| c.fail("model", key, format!("{s} is not a positive multiple of 1/2")))
        };
        let (s_bulk, s_link) = (spin("s_bulk", m.s_bulk)?, spin("s_link", m.s_link)?);
        if m.n_sites < 4 {
            return Err(c.fail(
                "model",
                "n_sites",
                format!("must be at least 4 (two links and two bulk sites), got {}", m.n_sites),
            ));
        }
        if !(m.j > 0.0 && m.j.is_finite()) {
            return Err(c.fail("model", "j", format!("must be positive, got {}", m.j)));
        }
        if !m.j2.is_finite() {
            return Err(c.fail("model", "j2", "must be finite"));
        }
        let theta = match (m.theta, m.theta_over_pi) {
            (Some(_), Some(_)) => {
                return Err(c.fail("model", "theta_over_pi", "give either theta or theta_over_pi, not both"))
            }
            (Some(t), None) => t,
            (None, Some(t)) => t * std::f64::consts::PI,
            (None, None) => 0.0,
        };
        if !theta.is_finite() {
            return Err(c.fail("model", "theta", "must be finite"));
        }
        let model = ChainSpec { n_sites: m.n_sites, s_bulk, s_link, lambda: 0.0, j2: m.j2, theta, j: m.j };

        let g = &self.grid;
        let lambda = match (&g.lambda, &g.lambda_log) {
            (Some(_), Some(_)) => {
                return Err(c.fail("grid", "lambda_log", "give either lambda or lambda_log, not both"))
            }
            (Some(list), None) => list.clone(),
            (None, Some(r)) => {
                if !(r.min > 0.0 && r.max >= r.min && r.max.is_finite()) {
                    return Err(c.fail("grid", "lambda_log", "needs 0 < min <= max"));
                }
                if r.points == 0 {
                    return Err(c.fail("grid", "lambda_log", "points must be at least 1"));
                }
                log_grid(r.min, r.max, r.points)
            }
            (None, None) => default_lambda_grid(),
        };
        if lambda.is_empty() {
            return Err(c.fail("grid", "lambda", "coupling grid is empty"));
        }
        if lambda.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(c.fail("grid", "lambda", "couplings must be finite and >= 0"));
        }
        if lambda.windows(2).any(|w| w[1] <= w[0]) {
            return Err(c.fail("grid", "lambda", "couplings must be strictly ascending"));
        }
        let beta = g.beta.clone().unwrap_or_else(|| vec![1e4]);
        if beta.is_empty() || beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(c.fail("grid", "beta", "needs at least one positive, finite inverse temperature"));
        }
        let omega = match (&g.omega, g.omega_points) {
            (Some(_), Some(_)) => {
                return Err(c.fail("grid", "omega_points", "give either omega or omega_points, not both"))
            }
            (Some(list), None) => list.clone(),
            (None, Some(n)) => omega_grid(n),
            (None, None) if self.mode == Mode::OracleCheck => vec![std::f64::consts::FRAC_PI_2],
            (None, None) => omega_grid(33),
        };
        if omega.is_empty() {
            return Err(c.fail(
                "grid",
                if g.omega.is_some() { "omega" } else { "omega_points" },
                "angle grid is empty",
            ));
        }
        if omega.iter().any(|&w| !(0.0..=std::f64::consts::PI).contains(&w)) {
            return Err(c.fail("grid", "omega", "angles must lie in [0, pi]"));
        }
        let phi = g.phi.unwrap_or(0.0);
        if !(0.0..2.0 * std::f64::consts::PI).contains(&phi) {
            return Err(c.fail("grid", "phi", format!("must lie in [0, 2 pi), got {phi}")));
        }
        let link_state = g.link_state.unwrap_or(LinkSeed::Zero);
        if let Some(h) = g.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(c.fail("grid", "horizon", format!("must be positive, got {h}")));
            }
        }
        if let Some(dt) = g.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(c.fail("grid", "dt", format!("must be positive, got {dt}")));
            }
        }
        if self.mode == Mode::Dynamics && g.horizon.is_none() && lambda.contains(&0.0) {
            return Err(c.fail("grid", "lambda", "lambda = 0 needs an explicit grid.horizon in dynamics mode"));
        }

        let s = &self.solver;
        let seed = match (seed_override, s.seed) {
            (Some(v), _) | (None, Some(v)) => v,
            (None, None) => {
                return Err(ConfigError {
                    path: None,
                    line: section_line(src, "solver"),
                    column: None,
                    message: "solver.seed is required (set it in the file or pass --seed)".into(),
                })
            }
        };
        let positive = |key: &str, v: Option<f64>, default: f64| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(c.fail("solver", key, format!("must be positive, got {x}"))),
            Some(x) => Ok(x),
            None => Ok(default),
        };
        let tol = positive("tol", s.tol, 1e-10)?;
        let eps = positive("eps", s.eps, 1e-6)?;
        if eps >= 1.0 {
            return Err(c.fail("solver", "eps", "must be below 1"));
        }
        let chebyshev_tol = positive("chebyshev_tol", s.chebyshev_tol, DEFAULT_CHEBYSHEV_TOL)?;
        if s.k_cap == Some(0) {
            return Err(c.fail("solver", "k_cap", "must be at least 1"));
        }
        let oracle_cap = s.oracle_cap.unwrap_or(DEFAULT_ORACLE_CAP);
        let max_dim = s.max_dim.unwrap_or(DEFAULT_MAX_DIM);
        let dim = model.layout().map_err(|e| c.fail("model", "n_sites", e.to_string()))?.total_dim();
        if dim > max_dim {
            return Err(c.fail(
                "model",
                "n_sites",
                format!("Hilbert space dimension {dim} exceeds solver.max_dim = {max_dim}"),
            ));
        }
        if self.mode == Mode::OracleCheck && dim > oracle_cap {
            return Err(c.fail(
                "model",
                "n_sites",
                format!("dimension {dim} exceeds the dense oracle cap {oracle_cap}"),
            ));
        }

        Ok(ResolvedConfig {
            mode: self.mode,
            model,
            lambda,
            beta,
            omega,
            phi,
            link_state,
            horizon: g.horizon,
            dt: g.dt,
            seed,
            tol,
            eps,
            k_cap: s.k_cap,
            oracle_cap,
            chebyshev_tol,
            max_dim,
            output_directory: self.output.directory.clone(),
            trajectories: self.output.trajectories,
        })
    }
}

/// Reads, parses and resolves a configuration file.
pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ResolvedConfig, CliError> {
    let src = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    SweepConfig::parse(&src)
        .and_then(|c| c.resolve(&src, seed_override))
        .map_err(|e| CliError::Config(ConfigError { path: Some(path.to_path_buf()), ..e }))
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Every point of the sweep failed, or the oracle check did not pass.
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Files written by one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// Human-readable one-line result.
    pub report: String,
}

struct Table {
    name: String,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(name: String, header: &str) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        // writing into memory cannot fail
        writer.write_record(header.split(',')).expect("in-memory write");
        Self { name, writer }
    }

    fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).expect("in-memory write");
    }

    fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

/// Plain decimals for moderate magnitudes, exponent form otherwise. Both
/// round-trip exactly.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e7).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Runs the sweep described by `cfg`, writing into `cfg.output_directory`.
pub fn run(cfg: &ResolvedConfig) -> Result<RunOutput, CliError> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let prefix = format!("{}_{stamp}", cfg.mode.name());
    let (tables, certificates, report, all_failed) = match cfg.mode {
        Mode::Thermal => run_thermal(cfg, &prefix),
        Mode::Dynamics => run_dynamics(cfg, &prefix),
        Mode::OracleCheck => run_oracle_check(cfg, &prefix),
    };
    let dir = &cfg.output_directory;
    let io = |e: io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let names: Vec<String> = tables.iter().map(|t| t.name.clone()).collect();
    let mut paths = Vec::new();
    for t in tables {
        let p = dir.join(&t.name);
        fs::write(&p, t.into_bytes()).map_err(io)?;
        paths.push(p);
    }
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": stamp,
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "config": cfg,
        "tables": names,
        "certificates": certificates,
        "report": report,
    });
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&manifest_path, text + "\n").map_err(io)?;
    if let Some(msg) = all_failed {
        return Err(CliError::Solver(msg));
    }
    Ok(RunOutput { tables: paths, manifest: manifest_path, report })
}

type ModeResult = (Vec<Table>, serde_json::Value, String, Option<String>);

fn thermal_options(cfg: &ResolvedConfig) -> ThermalOptions {
    ThermalOptions { eps: cfg.eps, tol: cfg.tol, seed: cfg.seed, k_cap: cfg.k_cap, max_dim: cfg.max_dim }
}

fn run_thermal(cfg: &ResolvedConfig, prefix: &str) -> ModeResult {
    let mut table = Table::new(
        format!("{prefix}.csv"),
        "beta,lambda,entanglement,purity,k_used,truncation_margin,ground_energy,max_residual,valid,error",
    );
    let opts = thermal_options(cfg);
    let mut summaries = Vec::new();
    let (mut failed, mut total) = (0, 0);
    for &beta in &cfg.beta {
        let curve: ThermalCurve = match entanglement_vs_lambda(&cfg.model, beta, &cfg.lambda, &opts) {
            Ok(c) => c,
            Err(e) => {
                // grid and model are pre-validated, so this is unexpected
                failed += cfg.lambda.len();
                total += cfg.lambda.len();
                summaries.push(json!({ "beta": beta, "error": e.to_string() }));
                continue;
            }
        };
        for p in &curve.points {
            total += 1;
            failed += p.error.is_some() as usize;
            table.row(&[
                num(beta),
                num(p.lambda),
                num(p.entanglement),
                num(p.purity),
                p.k_used.to_string(),
                num(p.truncation_margin),
                num(p.ground_energy),
                num(p.max_residual),
                p.valid.to_string(),
                p.error.clone().unwrap_or_default(),
            ]);
        }
        summaries
            .push(json!({ "beta": beta, "summary": curve.summary, "window_log10_at_0.9": curve.window_measure(0.9) }));
    }
    let report = summaries
        .iter()
        .map(|s| match s["summary"]["entanglement_max"].as_f64() {
            Some(e) => format!("beta={}: max entanglement {e:.6} at lambda={}", s["beta"], s["summary"]["lambda_max"]),
            None => format!("beta={}: no valid point", s["beta"]),
        })
        .collect::<Vec<_>>()
        .join("; ");
    let all_failed = (failed == total).then(|| format!("all {total} thermal points failed"));
    (vec![table], json!({ "curves": summaries }), report, all_failed)
}

fn time_grid(cfg: &ResolvedConfig, spec: &ChainSpec, default_horizon: Option<f64>) -> crate::Result<TimeGrid> {
    match (cfg.horizon.or(default_horizon), cfg.dt) {
        (None, None) => TimeGrid::default_for(spec),
        (h, dt) => {
            let horizon = match h {
                Some(h) => h,
                None => TimeGrid::default_for(spec)?.horizon(),
            };
            let dt = dt.unwrap_or_else(|| (0.25 / spec.j).min(horizon / 2000.0));
            TimeGrid::covering(horizon, dt)
        }
    }
}

fn run_dynamics(cfg: &ResolvedConfig, prefix: &str) -> ModeResult {
    let mut traj_table = Table::new(format!("{prefix}.csv"), "lambda,omega,t,entanglement,norm_drift");
    let mut omega_table = Table::new(
        format!("{prefix}_omega.csv"),
        "lambda,omega,peak,peak_time,time_average,average_converged,max_norm_drift,energy_drift",
    );
    let mut summary_table = Table::new(
        format!("{prefix}_summary.csv"),
        "lambda,max_entanglement,best_time,best_omega,max_time_average,best_average_omega,dt,horizon,error",
    );
    let mut certificates = Vec::new();
    let mut reports = Vec::new();
    let mut failed = 0;
    for &lambda in &cfg.lambda {
        let spec = cfg.model.with_lambda(lambda);
        let outcome = (|| {
            let times = time_grid(cfg, &spec, None)?;
            let ctx = QuenchContext::new(&spec, cfg.max_dim, cfg.seed)?;
            let template = QuenchSetup {
                spec,
                seed_state: cfg.link_state,
                omega: cfg.omega[0],
                phi: cfg.phi,
                times,
                chebyshev_tol: cfg.chebyshev_tol,
            };
            let mut trajectories = Vec::new();
            let scan = maximize_over_omega(&ctx, &template, &cfg.omega, Some(&mut trajectories))?;
            Ok::<_, crate::Error>((times, ctx.bounds, scan, trajectories))
        })();
        match outcome {
            Ok((times, bounds, scan, trajectories)) => {
                if cfg.trajectories {
                    for tr in &trajectories {
                        for ((t, e), d) in tr.times.iter().zip(&tr.entanglement).zip(&tr.norm_drift) {
                            traj_table.row(&[num(lambda), num(tr.omega), num(*t), num(*e), num(*d)]);
                        }
                    }
                }
                for s in &scan.per_omega {
                    omega_table.row(&[
                        num(lambda),
                        num(s.omega),
                        num(s.peak),
                        num(s.peak_time),
                        num(s.time_average),
                        s.average_converged.to_string(),
                        num(s.max_norm_drift),
                        num(s.energy_drift),
                    ]);
                }
                summary_table.row(&[
                    num(lambda),
                    num(scan.max_entanglement),
                    num(scan.best_time),
                    num(scan.best_omega),
                    num(scan.max_time_average),
                    num(scan.best_average_omega),
                    num(times.dt),
                    num(times.horizon()),
                    String::new(),
                ]);
                let worst_norm = scan.per_omega.iter().map(|s| s.max_norm_drift).fold(0.0, f64::max);
                let worst_energy = scan.per_omega.iter().map(|s| s.energy_drift).fold(0.0, f64::max);
                certificates.push(json!({
                    "lambda": lambda,
                    "spectral_bounds": [bounds.0, bounds.1],
                    "dt": times.dt,
                    "steps": times.steps,
                    "chebyshev_terms": trajectories.first().map(|t| t.chebyshev_terms),
                    "max_norm_drift": worst_norm,
                    "max_energy_drift": worst_energy,
                }));
                reports.push(format!(
                    "lambda={lambda}: max entanglement {:.6} (omega={:.4}, t={}), max time average {:.6}",
                    scan.max_entanglement, scan.best_omega, scan.best_time, scan.max_time_average
                ));
            }
            Err(e) => {
                failed += 1;
                let mut row = vec![num(lambda)];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(e.to_string());
                summary_table.row(&row);
                certificates.push(json!({ "lambda": lambda, "error": e.to_string() }));
                reports.push(format!("lambda={lambda}: failed: {e}"));
            }
        }
    }
    let mut tables = Vec::new();
    if cfg.trajectories {
        tables.push(traj_table);
    }
    tables.extend([omega_table, summary_table]);
    let all_failed = (failed == cfg.lambda.len()).then(|| format!("all {failed} dynamics points failed"));
    (tables, json!({ "points": certificates }), reports.join("; "), all_failed)
}

fn run_oracle_check(cfg: &ResolvedConfig, prefix: &str) -> ModeResult {
    let mut table = Table::new(
        format!("{prefix}.csv"),
        "lambda,dim,eigenvalues,max_eigen_deviation,max_fidelity_deficit,horizon,pass",
    );
    let mut all_pass = true;
    let mut certificates = Vec::new();
    let (mut worst_eig, mut worst_fid) = (0.0f64, 0.0f64);
    for &lambda in &cfg.lambda {
        let spec = cfg.model.with_lambda(lambda);
        let outcome = (|| {
            let (h, _) = build_hamiltonian_with_budget(&spec, cfg.max_dim)?;
            let dense = dense_spectrum_capped(&h, cfg.oracle_cap)?;
            let d = spec.d_link();
            let k = cfg.k_cap.unwrap_or(3 * d * d).min(h.dim());
            let opts = LanczosOptions { tol: cfg.tol, seed: cfg.seed, ..Default::default() };
            let pairs = lanczos_lowest(&h, k, &opts)?;
            let eig_dev = pairs.values.iter().zip(&dense.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

            let times = time_grid(cfg, &spec, Some(50.0))?;
            let ctx = QuenchContext::new(&spec, cfg.max_dim, cfg.seed)?;
            let mut fid_dev = 0.0f64;
            for &omega in &cfg.omega {
                let setup = QuenchSetup {
                    spec,
                    seed_state: cfg.link_state,
                    omega,
                    phi: cfg.phi,
                    times,
                    chebyshev_tol: cfg.chebyshev_tol,
                };
                let psi0 = crate::dynamics::prepare_initial_state(&setup, &ctx.layout)?;
                let prop = crate::dynamics::ChebyshevPropagator::new(ctx.bounds, times.dt, cfg.chebyshev_tol)?;
                let mut psi = psi0.clone();
                let mut work = Default::default();
                for t in times.times().skip(1) {
                    prop.step(&ctx.hamiltonian, &mut psi, &mut work)?;
                    let exact = dense.propagate(&psi0, t);
                    fid_dev = fid_dev.max(1.0 - dot(&exact, &psi).norm());
                }
            }
            Ok::<_, crate::Error>((h.dim(), pairs.len(), eig_dev, fid_dev, times.horizon()))
        })();
        match outcome {
            Ok((dim, count, eig, fid, horizon)) => {
                let pass = eig < ORACLE_EIGEN_TOL && fid < ORACLE_FIDELITY_TOL;
                all_pass &= pass;
                worst_eig = worst_eig.max(eig);
                worst_fid = worst_fid.max(fid);
                table.row(&[
                    num(lambda),
                    dim.to_string(),
                    count.to_string(),
                    num(eig),
                    num(fid),
                    num(horizon),
                    pass.to_string(),
                ]);
                certificates.push(
                    json!({ "lambda": lambda, "max_eigen_deviation": eig, "max_fidelity_deficit": fid, "pass": pass }),
                );
            }
            Err(e) => {
                all_pass = false;
                table.row(&[
                    num(lambda),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "false".into(),
                ]);
                certificates.push(json!({ "lambda": lambda, "error": e.to_string() }));
            }
        }
    }
    let verdict = if all_pass { "PASS" } else { "FAIL" };
    let report = format!("{verdict}: max eigenvalue deviation {worst_eig:.3e}, max fidelity deficit {worst_fid:.3e}");
    let failure = (!all_pass).then(|| report.clone());
    (vec![table], json!({ "points": certificates, "verdict": verdict }), report, failure)
}

#[derive(Debug, Parser)]
#[command(name = "qudit-link", version, about = "Link entanglement through spin-s chains: thermal and quench sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seed (overrides `solver.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entanglement of the low-temperature link state versus coupling.
    Thermal(RunArgs),
    /// Quench trajectories maximized over the link rotation angle.
    Dynamics(RunArgs),
    /// Compare the iterative solvers against dense diagonalization.
    OracleCheck(RunArgs),
    /// Parse and range-check a configuration, printing the resolved values.
    Validate(RunArgs),
}

fn execute(command: Command, stdout: &mut dyn io::Write) -> Result<(), CliError> {
    let (args, mode) = match &command {
        Command::Thermal(a) => (a, Some(Mode::Thermal)),
        Command::Dynamics(a) => (a, Some(Mode::Dynamics)),
        Command::OracleCheck(a) => (a, Some(Mode::OracleCheck)),
        Command::Validate(a) => (a, None),
    };
    let mut cfg = load_config(&args.config, args.seed)?;
    if let Some(out) = &args.out {
        cfg.output_directory = out.clone();
    }
    let io = |e: io::Error| CliError::Io(e.to_string());
    let Some(mode) = mode else {
        let text = toml::to_string(&cfg).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(stdout, "{}: ok\n{text}", args.config.display()).map_err(io)?;
        return Ok(());
    };
    if cfg.mode != mode {
        return Err(CliError::Config(ConfigError {
            path: Some(args.config.clone()),
            line: Some(key_line(&fs::read_to_string(&args.config).unwrap_or_default(), "", "mode").unwrap_or(1)),
            column: None,
            message: format!("mode = \"{}\" does not match the `{}` subcommand", cfg.mode.name(), mode.name()),
        }));
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config(ConfigError {
                path: None,
                line: None,
                column: None,
                message: "--threads must be at least 1".into(),
            }));
        }
        // the global pool can only be set once per process; later calls keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = run(&cfg)?;
    writeln!(stdout, "{}", out.report).map_err(io)?;
    for t in &out.tables {
        writeln!(stdout, "wrote {}", t.display()).map_err(io)?;
    }
    writeln!(stdout, "wrote {}", out.manifest.display()).map_err(io)?;
    Ok(())
}

/// Entry point of the binary. Returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn io::Write, stderr: &mut dyn io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version are not errors
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 2;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            if let CliError::Solver(_) = e {
                // the report line is the useful part for oracle-check
                let _ = writeln!(stdout, "{e}");
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"mode = "thermal"

[model]
n_sites = 6
s_bulk = 0.5
s_link = 0.5

[grid]
lambda = [0.05, 0.1]

[solver]
seed = 3
"#;

    fn resolve(src: &str) -> Result<ResolvedConfig, ConfigError> {
        SweepConfig::parse(src)?.resolve(src, None)
    }

    #[test]
    fn resolves_defaults() {
        let cfg = resolve(BASE).unwrap();
        assert_eq!(cfg.beta, vec![1e4]);
        assert_eq!(cfg.omega.len(), 33);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.model.theta, 0.0);
        assert_eq!(cfg.link_state, LinkSeed::Zero);
        assert_eq!(SweepConfig::parse(BASE).unwrap().resolve(BASE, Some(11)).unwrap().seed, 11);
    }

    #[test]
    fn unknown_key_is_located() {
        let src = BASE.replace("s_link = 0.5", "s_link = 0.5\nlamda = 0.1");
        let e = resolve(&src).unwrap_err();
        assert_eq!(e.line, Some(7));
        assert!(e.message.contains("lamda"), "{}", e.message);
    }

    #[test]
    fn range_errors_name_field_and_line() {
        let e = resolve(&BASE.replace("s_bulk = 0.5", "s_bulk = 0.3")).unwrap_err();
        assert_eq!(e.line, Some(5));
        assert!(e.message.starts_with("model.s_bulk"));
        let e = resolve(&BASE.replace("n_sites = 6", "n_sites = 3")).unwrap_err();
        assert_eq!(e.line, Some(4));
        let e = resolve(&BASE.replace("lambda = [0.05, 0.1]", "lambda = []")).unwrap_err();
        assert_eq!(e.line, Some(9));
        assert!(e.message.contains("empty"));
        let e = resolve(&BASE.replace("seed = 3", "")).unwrap_err();
        assert!(e.message.contains("seed"));
        let e = resolve(&BASE.replace("lambda = [0.05, 0.1]", "lambda = [0.1, 0.05]")).unwrap_err();
        assert!(e.message.contains("ascending"));
    }

    #[test]
    fn exclusive_keys() {
        let src = BASE.replace("s_link = 0.5", "s_link = 0.5\ntheta = 1.0\ntheta_over_pi = 0.5");
        assert!(resolve(&src).unwrap_err().message.contains("not both"));
        let src = BASE.replace("s_link = 0.5", "s_link = 0.5\ntheta_over_pi = -0.25");
        assert!((resolve(&src).unwrap().model.theta + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn log_range_and_type_errors() {
        let src = BASE.replace("lambda = [0.05, 0.1]", "lambda_log = { min = 1e-3, max = 1.0, points = 4 }");
        let cfg = resolve(&src).unwrap();
        assert_eq!(cfg.lambda.len(), 4);
        assert!((cfg.lambda[3] - 1.0).abs() < 1e-12);
        let e = resolve(&BASE.replace("n_sites = 6", "n_sites = \"six\"")).unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.column.is_some());
    }

    #[test]
    fn key_line_scanner() {
        let src = "a = 1\n[x]\nb = 2\n[y]\nb = 3\n";
        assert_eq!(key_line(src, "", "a"), Some(1));
        assert_eq!(key_line(src, "y", "b"), Some(5));
        assert_eq!(key_line(src, "x", "c"), None);
        assert_eq!(section_line(src, "y"), Some(4));
        assert_eq!(section_line(src, "z"), None);
    }
}
