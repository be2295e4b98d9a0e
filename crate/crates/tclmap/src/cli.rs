//! Scenario runner: strict TOML configs, named experiments, CSV/JSON artifacts, and
//! comparison against external trajectories.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis;
use crate::bath::{self, BathSpec};
use crate::error::{Error, Result};
use crate::generators::{self, SystemSpec};
use crate::linalg::{CMat, Superoperator};
use crate::reconstruction::{self, GeneratorSource, ReconstructionOpts};
use crate::rwa::{self, SpectralOracle};
use crate::sbm::{self, SbmMapParams, TailForm};

pub const WORKERS_ENV: &str = "TCLMAP_WORKERS";

pub const SCENARIOS: [(&str, &str, &str); 9] = [
    ("fig2", "|f(t)| from exponential decay into the algebraic tail, Ohmic and sub-Ohmic", include_str!("../scenarios/fig2.toml")),
    ("fig3", "magnitude and phase of f(t) near t_P against the two-component model", include_str!("../scenarios/fig3.toml")),
    ("fig4", "L_{11,11}(t): exact, resummed TCL, and reconstructed across the spike", include_str!("../scenarios/fig4.toml")),
    ("fig5", "nonsecular transfer amplitude Phi_{21,12}: reconstruction, closed form, Bloch-Redfield", include_str!("../scenarios/fig5.toml")),
    ("fig6", "coherence singular values and Choi minimum of the closed-form spin-boson map", include_str!("../scenarios/fig6.toml")),
    ("nesting", "nested renormalized frequency for increasing depth", include_str!("../scenarios/nesting.toml")),
    ("acceptance-rwa", "rotating-wave checks: oracle agreement, invertibility, two-component fidelity", include_str!("../scenarios/acceptance-rwa.toml")),
    ("acceptance-sbm", "spin-boson checks: anisotropy phase, population sector, t_P", include_str!("../scenarios/acceptance-sbm.toml")),
    ("sweep", "balance time and closed-form t_P over a (s, lambda^2) grid", include_str!("../scenarios/sweep.toml")),
];

// ---------------------------------------------------------------------------------------
// config

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Trajectory,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Nesting,
    AcceptanceRwa,
    AcceptanceSbm,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Rwa,
    Sbm,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Amplitude,
    AmplitudeVolterra,
    Maps,
    Generators,
    Sigma,
    Frequencies,
    Report,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub lambda_sq: f64,
    pub s: f64,
    pub omega_c: f64,
    /// Inverse temperature; omitted means T = 0.
    pub beta: Option<f64>,
}

impl BathConfig {
    pub fn spec(&self) -> Result<BathSpec> {
        BathSpec::new(self.lambda_sq, self.s, self.omega_c, self.beta.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub delta: Option<f64>,
    /// General model: energies in descending order.
    pub energies: Option<Vec<f64>>,
    /// General model: coupling operator rows of [re, im] pairs.
    pub coupling: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t_min: f64,
    pub t_max: f64,
    /// Omitted: adaptive step min(0.05, T₂/200, 1/(4ω_c)).
    pub n_points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_kernel_tol")]
    pub kernel: f64,
    #[serde(default = "default_ode_tol")]
    pub ode: f64,
    #[serde(default = "default_root_tol")]
    pub root: f64,
}

fn default_kernel_tol() -> f64 {
    bath::RHS_TOL
}
fn default_ode_tol() -> f64 {
    1e-9
}
fn default_root_tol() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel: default_kernel_tol(),
            ode: default_ode_tol(),
            root: default_root_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default = "all_artifacts")]
    pub artifacts: Vec<Artifact>,
}

fn all_artifacts() -> Vec<Artifact> {
    vec![Artifact::Amplitude, Artifact::Maps, Artifact::Generators, Artifact::Sigma, Artifact::Frequencies, Artifact::Report]
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub s: Vec<f64>,
    pub lambda_sq: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_experiment")]
    pub experiment: Experiment,
    pub model: Model,
    pub bath: BathConfig,
    #[serde(default)]
    pub extra_baths: Vec<BathConfig>,
    pub system: SystemConfig,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub outputs: OutputConfig,
    pub reference_data: Option<PathBuf>,
    pub sweep: Option<SweepConfig>,
    pub depths: Option<Vec<u32>>,
}

fn default_experiment() -> Experiment {
    Experiment::Trajectory
}

impl ScenarioConfig {
    /// Strict parse; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.outputs.directory.is_relative() {
            cfg.outputs.directory = base.join(&cfg.outputs.directory);
        }
        if let Some(r) = &cfg.reference_data {
            let r = if r.is_relative() { base.join(r) } else { r.clone() };
            if !r.is_file() {
                return Err(Error::Config(format!("reference_data {} does not exist", r.display())));
            }
            cfg.reference_data = Some(r);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn validate(&self) -> Result<()> {
        let cfgerr = |e: Error| Error::Config(e.to_string());
        self.bath.spec().map_err(cfgerr)?;
        for b in &self.extra_baths {
            b.spec().map_err(cfgerr)?;
        }
        self.system().map_err(cfgerr)?;
        if let Some(g) = &self.grid {
            if g.t_max.partial_cmp(&g.t_min) != Some(std::cmp::Ordering::Greater) || g.t_min < 0.0 {
                return Err(Error::Config("grid needs 0 <= t_min < t_max".into()));
            }
            if g.spacing == Spacing::Log && g.t_min <= 0.0 {
                return Err(Error::Config("log grid needs t_min > 0".into()));
            }
            if matches!(g.n_points, Some(n) if n < 2) {
                return Err(Error::Config("grid needs n_points >= 2".into()));
            }
        }
        let needs_grid = !matches!(self.experiment, Experiment::Sweep);
        if needs_grid && self.grid.is_none() {
            return Err(Error::Config("missing [grid] section".into()));
        }
        let reconstructs = matches!(self.experiment, Experiment::Fig4 | Experiment::Fig5)
            || self.experiment == Experiment::Trajectory && self.model != Model::Rwa;
        if reconstructs && self.grid.map(|g| g.t_min) != Some(0.0) {
            return Err(Error::Config("map reconstruction needs a grid starting at t = 0".into()));
        }
        let wants = |m: &[Model]| m.contains(&self.model);
        let ok = match self.experiment {
            Experiment::Fig2 | Experiment::Fig3 | Experiment::Fig4 | Experiment::Nesting | Experiment::AcceptanceRwa => wants(&[Model::Rwa]),
            Experiment::Fig5 | Experiment::Fig6 | Experiment::AcceptanceSbm | Experiment::Sweep => wants(&[Model::Sbm]),
            Experiment::Trajectory => true,
        };
        if !ok {
            return Err(Error::Config(format!("experiment {:?} does not support model {:?}", self.experiment, self.model)));
        }
        if self.experiment == Experiment::Sweep && self.sweep.is_none() {
            return Err(Error::Config("sweep experiment needs a [sweep] section".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<SystemSpec> {
        let b = self.bath.spec()?;
        match self.model {
            Model::Rwa | Model::Sbm => {
                let d = self.system.delta.ok_or_else(|| Error::Config("system.delta is required".into()))?;
                if self.model == Model::Rwa {
                    SystemSpec::rwa(d, b)
                } else {
                    SystemSpec::sbm(d, b)
                }
            }
            Model::General => {
                let e = self.system.energies.clone().ok_or_else(|| Error::Config("system.energies is required".into()))?;
                let rows = self.system.coupling.as_ref().ok_or_else(|| Error::Config("system.coupling is required".into()))?;
                let n = e.len();
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!("coupling must be {n}x{n}")));
                }
                let a = CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
                SystemSpec::new(e, vec![a], vec![b])
            }
        }
    }

    pub fn times(&self, sys: &SystemSpec) -> Result<Vec<f64>> {
        let g = self.grid.ok_or_else(|| Error::Config("missing [grid] section".into()))?;
        let n = match g.n_points {
            Some(n) => n,
            None => {
                let dt = 0.05f64.min(sys.t2() / 200.0).min(0.25 / self.bath.omega_c);
                ((g.t_max - g.t_min) / dt).ceil() as usize + 1
            }
        };
        let step = |k: usize| k as f64 / (n - 1) as f64;
        Ok(match g.spacing {
            Spacing::Linear => (0..n).map(|k| if k + 1 == n { g.t_max } else { g.t_min + (g.t_max - g.t_min) * step(k) }).collect(),
            Spacing::Log => {
                let (a, b) = (g.t_min.ln(), g.t_max.ln());
                (0..n).map(|k| if k + 1 == n { g.t_max } else { (a + (b - a) * step(k)).exp() }).collect()
            }
        })
    }

    fn recon_opts(&self) -> ReconstructionOpts {
        ReconstructionOpts {
            kernel_tol: self.tolerances.kernel,
            ..ReconstructionOpts::with_tol(self.tolerances.ode)
        }
    }
}

pub fn default_config(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|s| s.0 == name).map(|s| s.2)
}

fn suggest(name: &str) -> Option<&'static str> {
    fn dist(a: &str, b: &str) -> usize {
        let b: Vec<char> = b.chars().collect();
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for (i, ca) in a.chars().enumerate() {
            let mut cur = vec![i + 1];
            for (j, cb) in b.iter().enumerate() {
                cur.push((prev[j] + usize::from(ca != *cb)).min(prev[j + 1] + 1).min(cur[j] + 1));
            }
            prev = cur;
        }
        prev[b.len()]
    }
    SCENARIOS.iter().map(|s| (dist(name, s.0), s.0)).min().filter(|d| d.0 <= 4).map(|d| d.1)
}

// ---------------------------------------------------------------------------------------
// tables

/// 17 significant digits, locale-free.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub artifact: Artifact,
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(artifact: Artifact, name: &str, header: &[&str]) -> Self {
        Self {
            artifact,
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if self.rows.windows(2).any(|w| w[1][0].partial_cmp(&w[0][0]) != Some(std::cmp::Ordering::Greater)) && self.header[0] == "t" {
            return Err(Error::Diagnostic(format!("{}: times not strictly increasing", self.name)));
        }
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| fmt_f64(x))).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn element_header(dim: usize, prefix: &str) -> Vec<String> {
    let pairs = crate::linalg::basis_pairs(dim);
    let mut h = vec!["t".to_string()];
    for &(a, b) in &pairs {
        for &(i, j) in &pairs {
            let tag = format!("{prefix}_{}{}_{}{}", a + 1, b + 1, i + 1, j + 1);
            h.push(format!("re_{tag}"));
            h.push(format!("im_{tag}"));
        }
    }
    h
}

fn element_row(t: f64, m: &Superoperator) -> Vec<f64> {
    let pairs = crate::linalg::basis_pairs(m.dim);
    let mut r = vec![t];
    for &(a, b) in &pairs {
        for &(i, j) in &pairs {
            let v = m.get(a, b, i, j);
            r.push(v.re);
            r.push(v.im);
        }
    }
    r
}

// ---------------------------------------------------------------------------------------
// run

#[derive(Debug, Clone, Default, Serialize)]
pub struct Derived {
    pub label: String,
    pub j_delta: Option<f64>,
    pub delta_tilde: Option<f64>,
    pub theta: Option<f64>,
    pub x0: Option<f64>,
    pub b_inf: Option<f64>,
    pub t2: Option<f64>,
    pub t_l: Option<f64>,
    pub t_p: Option<f64>,
    pub t_p_balance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub bound: String,
    pub pass: bool,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub derived: Vec<Derived>,
    pub checks: Vec<Check>,
    pub extra: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

fn derived_for(label: &str, model: Model, sys: &SystemSpec, tol: f64) -> Derived {
    let b = &sys.baths[0];
    let mut d = Derived {
        label: label.into(),
        ..Derived::default()
    };
    if !sys.is_qubit() {
        return d;
    }
    let delta = sys.delta();
    d.j_delta = bath::gamma_asymptotic(b, Complex64::new(delta, 0.0), tol).ok().map(|g| g.re).or_else(|| Some(bath::spectral_density(b, delta)));
    d.t2 = d.j_delta.map(|j| 4.0 / j);
    match model {
        Model::Rwa => {
            d.delta_tilde = bath::gamma_asymptotic(b, Complex64::new(delta, 0.0), tol).ok().map(|g| delta + g.im / 4.0);
            if b.is_zero_temperature() {
                d.t_p_balance = rwa::tp_estimate(b, delta).ok().map(|e| e.bisection);
            }
        }
        _ => {
            if let Ok(p) = SbmMapParams::new(b, delta, tol) {
                d.delta_tilde = Some(p.delta_tilde);
                d.theta = Some(p.theta);
                d.x0 = Some(p.x0);
                d.b_inf = Some(p.b_inf);
            }
            if b.is_zero_temperature() {
                d.t_p_balance = rwa::tp_estimate(b, delta).ok().map(|e| e.bisection);
            }
        }
    }
    if let Some(t2) = d.t2 {
        let end = 3.6 * (b.s + 1.0) * t2;
        let n = 300usize.max((end / (PI / (4.0 * delta))).ceil() as usize);
        let scan: Vec<f64> = (1..=n).map(|k| end * k as f64 / n as f64).collect();
        d.t_l = generators::validity_time(sys, &scan, bath::RHS_TOL).ok();
    }
    d
}

fn oracle_series(b: &BathSpec, delta: f64, times: &[f64]) -> Result<Vec<(Complex64, Complex64)>> {
    let oracle = SpectralOracle::new(b, delta, *times.last().unwrap())?;
    Ok(times.par_iter().map(|&t| oracle.eval(t)).collect())
}

fn unwrap_phase(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset: f64 = 0.0;
    for (k, &p) in raw.iter().enumerate() {
        if k > 0 {
            let d: f64 = p + offset - out[k - 1];
            if d > PI {
                offset -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
            } else if d < -PI {
                offset += 2.0 * PI * ((-d + PI) / (2.0 * PI)).floor();
            }
        }
        out.push(p + offset);
    }
    out
}

/// Fig. 2: |f(t)| for each configured bath.
fn run_fig2(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let times = cfg.times(&sys)?;
    let baths: Vec<BathConfig> = std::iter::once(cfg.bath).chain(cfg.extra_baths.iter().copied()).collect();
    let mut cols = Vec::new();
    let mut header = vec!["t".to_string()];
    for (k, bc) in baths.iter().enumerate() {
        let b = bc.spec()?;
        let f = oracle_series(&b, sys.delta(), &times)?;
        cols.push(f.into_iter().map(|v| v.0.norm()).collect::<Vec<_>>());
        header.push(format!("abs_f_{}", k + 1));
        let label = format!("bath {}: s={}, lambda_sq={}", k + 1, bc.s, bc.lambda_sq);
        out.derived.push(derived_for(&label, Model::Rwa, &sys.with_bath(b), cfg.tolerances.kernel));
    }
    let mut t = Table::new(Artifact::Amplitude, "fig2_amplitude", &[]);
    t.header = header;
    t.rows = times.iter().enumerate().map(|(i, &x)| std::iter::once(x).chain(cols.iter().map(|c| c[i])).collect()).collect();
    out.tables.push(t);
    Ok(())
}

/// Interaction-picture phase arg(f e^{iΔ̃t}), unwrapped along the grid.
fn interaction_phase(f: &[Complex64], times: &[f64], delta_tilde: f64) -> Vec<f64> {
    let raw: Vec<f64> = f.iter().zip(times).map(|(v, &t)| (v * Complex64::from_polar(1.0, delta_tilde * t)).arg()).collect();
    unwrap_phase(&raw)
}

/// f on `times`, by phase recurrence when the grid is uniform.
fn oracle_on(oracle: &SpectralOracle, times: &[f64]) -> Vec<Complex64> {
    if times.len() > 2 {
        let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if times.iter().enumerate().all(|(k, &t)| (t - times[0] - k as f64 * h).abs() <= 1e-9 * h) {
            return oracle.sample_uniform(times[0], h, times.len()).into_iter().map(|v| v.0).collect();
        }
    }
    times.par_iter().map(|&t| oracle.f(t)).collect()
}

struct Fig3Summary {
    t_min: f64,
    f_min: f64,
    phase_swing: f64,
    model_error: Option<f64>,
}

/// Deepest minimum of |f| inside the grid, the phase swing across it, and the
/// two-component relative error on [0.8, 1.2]·t_P.
fn fig3_summary(b: &BathSpec, delta: f64, t_p: f64, oracle: &SpectralOracle, window: (f64, f64)) -> Result<Fig3Summary> {
    let (t_min, f_min) = oracle.deepest_minimum(window.0, window.1, 0.05);
    let model = rwa::TwoComponent::new(b, delta, bath::KERNEL_TOL)?;
    let dt_phase = bath::gamma_asymptotic(b, Complex64::new(delta, 0.0), bath::KERNEL_TOL)?.im / 4.0 + delta;
    let w = 0.05 * t_p;
    let n = 4001;
    let h = 2.0 * w / (n - 1) as f64;
    let ts: Vec<f64> = (0..n).map(|k| t_min - w + k as f64 * h).collect();
    let fs: Vec<Complex64> = oracle.sample_uniform(t_min - w, h, n).into_iter().map(|v| v.0).collect();
    let ph = interaction_phase(&fs, &ts, dt_phase);
    let phase_swing = (ph[n - 1] - ph[0]).abs();
    let lo = 0.8 * t_p;
    let hi = 1.2 * t_p;
    let model_error = if hi <= oracle.t_max {
        let m = 2001;
        let h = (hi - lo) / (m - 1) as f64;
        let exact = oracle.sample_uniform(lo, h, m);
        let errs: Result<Vec<f64>> = exact
            .par_iter()
            .enumerate()
            .map(|(k, v)| {
                let ex = v.0.norm();
                Ok((model.eval(lo + k as f64 * h)?.norm() - ex).abs() / ex)
            })
            .collect();
        Some(errs?.into_iter().fold(0.0, f64::max))
    } else {
        None
    };
    Ok(Fig3Summary {
        t_min,
        f_min,
        phase_swing,
        model_error,
    })
}

fn run_fig3(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let b = sys.baths[0];
    let delta = sys.delta();
    let times = cfg.times(&sys)?;
    let oracle = SpectralOracle::new(&b, delta, *times.last().unwrap())?;
    let model = rwa::TwoComponent::new(&b, delta, bath::KERNEL_TOL)?;
    let fs = oracle_on(&oracle, &times);
    let d = derived_for("rwa", Model::Rwa, &sys, cfg.tolerances.kernel);
    let dtl = d.delta_tilde.unwrap_or(delta);
    let phase = interaction_phase(&fs, &times, dtl);
    let mut t = Table::new(Artifact::Amplitude, "fig3_amplitude", &["t", "re_f", "im_f", "abs_f", "phase", "re_model", "im_model", "abs_model"]);
    for (k, &x) in times.iter().enumerate() {
        let m = model.eval(x)?;
        t.rows.push(vec![x, fs[k].re, fs[k].im, fs[k].norm(), phase[k], m.re, m.im, m.norm()]);
    }
    out.tables.push(t);
    if let Some(tp) = d.t_p_balance {
        let s = fig3_summary(&b, delta, tp, &oracle, (times[0], *times.last().unwrap()))?;
        out.extra.insert("deepest_minimum".into(), json!({"t": s.t_min, "abs_f": s.f_min}));
        out.extra.insert("phase_swing".into(), json!(s.phase_swing));
        out.extra.insert("two_component_max_rel_error".into(), json!(s.model_error));
    }
    out.derived.push(d);
    Ok(())
}

fn run_fig4(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let b = sys.baths[0];
    let delta = sys.delta();
    let times = cfg.times(&sys)?;
    let tol = cfg.tolerances.kernel;
    let oracle = SpectralOracle::new(&b, delta, *times.last().unwrap())?;
    let traj = reconstruction::solve_reconstruction(&sys, GeneratorSource::Tcl, &times, cfg.recon_opts())?;
    if traj.times.len() < times.len() {
        out.warnings.push(format!("reconstruction halted at t = {} ({:?})", traj.times.last().unwrap(), traj.halt));
    }
    let rows: Result<Vec<Vec<f64>>> = traj
        .times
        .par_iter()
        .map(|&t| {
            let (f, fd) = oracle.eval(t);
            let exact = rwa::rwa_exact_generator(f, fd).map(|l| l.get(0, 0, 0, 0).re).unwrap_or(f64::NAN);
            let tcl = generators::tcl_generator(&sys, t, tol)?.get(0, 0, 0, 0).re;
            let rec = reconstruction::reconstructed_generator(&traj, t).map(|g| g.generator.get(0, 0, 0, 0).re).unwrap_or(f64::NAN);
            Ok(vec![t, exact, tcl, rec, f.norm()])
        })
        .collect();
    let mut t = Table::new(Artifact::Generators, "fig4_generators", &["t", "exact_l11_11", "tcl_l11_11", "reconstructed_l11_11", "abs_f"]);
    t.rows = rows?;
    out.tables.push(t);
    out.derived.push(derived_for("rwa", Model::Rwa, &sys, tol));
    Ok(())
}

fn run_fig5(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let b = sys.baths[0];
    let times = cfg.times(&sys)?;
    let p = SbmMapParams::new(&b, sys.delta(), bath::KERNEL_TOL)?;
    let traj = reconstruction::solve_reconstruction(&sys, GeneratorSource::Tcl, &times, cfg.recon_opts())?;
    let mut t = Table::new(
        Artifact::Maps,
        "fig5_maps",
        &["t", "re_phi_21_12", "im_phi_21_12", "re_closed_21_12", "im_closed_21_12", "re_bloch_redfield", "im_bloch_redfield", "bloch_redfield_quadrature"],
    );
    for (k, &x) in traj.times.iter().enumerate() {
        let r = traj.maps[k].get(1, 0, 0, 1);
        let c = p.phi_21_12(&b, x)?;
        let br = p.bloch_redfield_offdiagonal(x);
        let q = (Complex64::from_polar(1.0, -p.theta) * br).re;
        t.rows.push(vec![x, r.re, r.im, c.re, c.im, br.re, br.im, q]);
    }
    out.tables.push(t);
    out.derived.push(derived_for("sbm", Model::Sbm, &sys, cfg.tolerances.kernel));
    Ok(())
}

fn sigma_table(name: &str, times: &[f64], maps: &[Superoperator]) -> Table {
    let mut t = Table::new(Artifact::Sigma, name, &["t", "sigma_plus", "sigma_minus", "choi_min"]);
    t.rows = times
        .par_iter()
        .zip(maps)
        .map(|(&x, m)| {
            let c = analysis::coherence_singular_values(m);
            vec![x, c.sigma_plus, c.sigma_minus, analysis::cp_check(m)]
        })
        .collect();
    t
}

fn run_fig6(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let b = sys.baths[0];
    let times = cfg.times(&sys)?;
    let p = SbmMapParams::new(&b, sys.delta(), bath::KERNEL_TOL)?;
    let maps: Result<Vec<Superoperator>> = times.par_iter().map(|&t| sbm::closed_form_map(&p, &b, t, TailForm::Elements)).collect();
    let maps = maps?;
    out.tables.push(sigma_table("fig6_sigma", &times, &maps));
    let rep = analysis::find_tp(|t| sbm::closed_form_map(&p, &b, t, TailForm::Elements), &times, cfg.tolerances.root)?;
    let mut d = derived_for("sbm", Model::Sbm, &sys, cfg.tolerances.kernel);
    d.t_p = rep.t_p;
    out.derived.push(d);
    push_report(out, &rep);
    Ok(())
}

fn push_report(out: &mut RunOutput, rep: &analysis::InvertibilityReport) {
    out.extra.insert(
        "invertibility".into(),
        json!({
            "t_p": rep.t_p,
            "crossing_bracket": rep.crossing_bracket,
            "later_crossings": rep.later_crossings.len(),
            "unresolved_oscillation": rep.unresolved_oscillation,
            "nonstructural": rep.nonstructural,
            "halted": rep.halted,
        }),
    );
    if rep.unresolved_oscillation {
        out.warnings.push("sigma_minus oscillation not resolved by the scan grid".into());
    }
}

fn run_nesting(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let b = sys.baths[0];
    let delta = sys.delta();
    let times = cfg.times(&sys)?;
    let depths = cfg.depths.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
    if depths.contains(&0) {
        return Err(Error::Config("nesting depths must be >= 1".into()));
    }
    let tol = cfg.tolerances.kernel;
    let mut header = vec!["t".to_string()];
    for d in &depths {
        header.push(format!("re_u_{d}"));
        header.push(format!("im_u_{d}"));
    }
    let max_depth = *depths.iter().max().unwrap_or(&1);
    let rows: Result<Vec<Vec<f64>>> = times
        .par_iter()
        .map(|&t| {
            let n = rwa::nested_frequency(&b, delta, t, max_depth, tol)?;
            let mut r = vec![t];
            for &d in &depths {
                let u = n.history.get(d as usize).copied().unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                r.push(u.re);
                r.push(u.im);
            }
            Ok(r)
        })
        .collect();
    let rows = rows?;
    let escaped = rows.iter().filter(|r| r.iter().any(|x| x.is_nan())).count();
    if escaped > 0 {
        out.warnings.push(format!(
            "nested iteration left the weak-coupling regime (|u - delta| > delta) at {escaped} of {} times; those depths are NaN",
            rows.len()
        ));
    }
    let mut t = Table::new(Artifact::Frequencies, "nesting_frequencies", &[]);
    t.header = header;
    t.rows = rows;
    out.tables.push(t);
    out.derived.push(derived_for("rwa", Model::Rwa, &sys, tol));
    Ok(())
}

fn check(out: &mut RunOutput, name: &str, value: Option<f64>, bound: &str, pass: bool) {
    out.checks.push(Check {
        name: name.into(),
        value,
        bound: bound.into(),
        pass,
    });
}

fn run_acceptance_rwa(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let b = sys.baths[0];
    let delta = sys.delta();
    let g = cfg.grid.unwrap();
    let h = rwa::volterra_step(&b, delta);
    let n = (g.t_max / h).ceil() as usize;
    let vol = rwa::f_volterra(&b, delta, h, n, 1e-6)?;
    let oracle = SpectralOracle::new(&b, delta, vol.times[n])?;
    // every Volterra step is needlessly dense for the comparison; ~125 samples per Bohr period suffice
    let stride = ((0.05 / h).floor() as usize).max(1);
    let spec = oracle.sample_uniform(0.0, stride as f64 * h, n / stride + 1);
    let diff = vol.values.iter().step_by(stride).zip(&spec).map(|(v, s)| (v - s.0).norm()).fold(0.0, f64::max);
    check(out, "spectral vs volterra max |df|", Some(diff), "<= 1e-6", diff <= 1e-6);
    let times = cfg.times(&sys)?;
    let mut t = Table::new(Artifact::Amplitude, "acceptance_rwa_amplitude", &["t", "re_f", "im_f", "abs_f"]);
    for (&x, f) in times.iter().zip(oracle_on(&oracle, &times)) {
        t.rows.push(vec![x, f.re, f.im, f.norm()]);
    }
    out.tables.push(t);
    let d = derived_for("rwa", Model::Rwa, &sys, cfg.tolerances.kernel);
    if let Some(tp) = d.t_p_balance {
        let long = SpectralOracle::new(&b, delta, 5.0 * tp)?;
        let m = (5.0 * tp / 0.1).ceil() as usize;
        let min_f = long.sample_uniform(0.0, 5.0 * tp / m as f64, m + 1).iter().map(|v| v.0.norm()).fold(f64::INFINITY, f64::min);
        check(out, "min sigma_minus = |f| on [0, 5 t_P]", Some(min_f), "> 0", min_f > 0.0);
        let s = fig3_summary(&b, delta, tp, &long, (0.5 * tp, 2.0 * tp))?;
        check(out, "two-component max rel error on [0.8, 1.2] t_P", s.model_error, "<= 0.2", s.model_error.is_some_and(|e| e <= 0.2));
        check(out, "phase swing across deepest minimum", Some(s.phase_swing), ">= pi/2", s.phase_swing >= PI / 2.0);
    }
    out.derived.push(d);
    Ok(())
}

fn run_acceptance_sbm(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let b = sys.baths[0];
    let delta = sys.delta();
    let p = SbmMapParams::new(&b, delta, bath::KERNEL_TOL)?;
    check(out, "theta", Some(p.theta), "-0.625 +- 0.005", (p.theta + 0.625).abs() <= 0.005);
    let hstep = 1e-4;
    let fd = (bath::lamb_shift_pv(&b, -delta + hstep, 1e-12)? - bath::lamb_shift_pv(&b, -delta - hstep, 1e-12)?) / (2.0 * hstep);
    let rel = (p.b_inf + 0.25 * fd).abs() / p.b_inf;
    check(out, "B_inf vs finite difference (relative)", Some(rel), "<= 1e-4", rel <= 1e-4);
    let t10 = 10.0 * p.t2();
    let bt = sbm::population_b(&p, &b, t10, bath::KERNEL_TOL)?;
    let rb = (bt - p.b_inf).abs() / p.b_inf;
    check(out, "|B(10 T2) - B_inf| / B_inf", Some(rb), "<= 1e-3", rb <= 1e-3);
    let times = cfg.times(&sys)?;
    let maps: Result<Vec<Superoperator>> = times.par_iter().map(|&t| sbm::closed_form_map(&p, &b, t, TailForm::Elements)).collect();
    let maps = maps?;
    let cols = maps.iter().map(|m| m.trace_defect(1.0)).fold(0.0, f64::max);
    check(out, "population column sums", Some(cols), "<= 1e-12", cols <= 1e-12);
    out.tables.push(sigma_table("acceptance_sbm_sigma", &times, &maps));
    let rep = analysis::find_tp(|t| sbm::closed_form_map(&p, &b, t, TailForm::Elements), &times, cfg.tolerances.root)?;
    let est = rwa::tp_estimate(&b, delta)?.closed_form;
    match rep.t_p {
        Some(tp) => {
            let m = sbm::closed_form_map(&p, &b, tp, TailForm::Elements)?;
            let sm = analysis::coherence_singular_values(&m).sigma_minus;
            check(out, "sigma_minus(t_P)", Some(sm), "<= 1e-8", sm <= 1e-8);
            let ratio = tp / est;
            check(out, "t_P / (s+1)T2 ln(wc T2)", Some(ratio), "in [0.3, 3]", (0.3..=3.0).contains(&ratio));
            let before = rep.choi_min_eigenvalue_trace.iter().filter(|c| c.0 <= tp).map(|c| c.1).fold(f64::INFINITY, f64::min);
            let bound = -10.0 * b.lambda_sq;
            check(out, "min Choi eigenvalue for t <= t_P", Some(before), ">= -10 lambda^2", before >= bound);
            let after = analysis::cp_check(&sbm::closed_form_map(&p, &b, tp + 1e-3, TailForm::Elements)?);
            check(out, "Choi minimum just past t_P", Some(after), "< 0", after < 0.0);
        }
        None => check(out, "t_P found", None, "present", false),
    }
    let mut d = derived_for("sbm", Model::Sbm, &sys, cfg.tolerances.kernel);
    d.t_p = rep.t_p;
    out.derived.push(d);
    push_report(out, &rep);
    Ok(())
}

fn run_sweep(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sw = cfg.sweep.as_ref().unwrap();
    let delta = cfg.system.delta.ok_or_else(|| Error::Config("system.delta is required".into()))?;
    let mut tuples: Vec<(f64, f64)> = sw.s.iter().flat_map(|&s| sw.lambda_sq.iter().map(move |&l| (s, l))).collect();
    tuples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let root = cfg.tolerances.root;
    let rows: Vec<Result<Vec<f64>>> = tuples
        .par_iter()
        .map(|&(s, l)| {
            let b = BathSpec::zero_temperature(l, s, cfg.bath.omega_c)?;
            let p = SbmMapParams::new(&b, delta, bath::KERNEL_TOL)?;
            let est = rwa::tp_estimate(&b, delta).ok();
            let hi = 3.0 * est.map(|e| e.closed_form).unwrap_or(20.0 * p.t2());
            let n = (hi / 0.1).ceil() as usize;
            let grid: Vec<f64> = (0..=n).map(|k| hi * k as f64 / n as f64).collect();
            let rep = analysis::find_tp(|t| sbm::closed_form_map(&p, &b, t, TailForm::Elements), &grid, root)?;
            let nan = f64::NAN;
            Ok(vec![
                s,
                l,
                p.j_delta,
                p.t2(),
                est.map_or(nan, |e| e.bisection),
                est.map_or(nan, |e| e.closed_form),
                rep.t_p.unwrap_or(nan),
            ])
        })
        .collect();
    let mut t = Table::new(Artifact::Report, "sweep_report", &["s", "lambda_sq", "j_delta", "t2", "tp_balance", "tp_closed_form", "tp_map"]);
    for r in rows {
        t.rows.push(r?);
    }
    out.tables.push(t);
    Ok(())
}

/// Generic trajectory for the configured model.
fn run_trajectory(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let sys = cfg.system()?;
    let times = cfg.times(&sys)?;
    let want = |a: Artifact| cfg.outputs.artifacts.contains(&a);
    let tol = cfg.tolerances.kernel;
    let (times, maps) = model_maps(cfg, &sys, &times, out)?;
    if cfg.model == Model::Rwa {
        if want(Artifact::Amplitude) {
            let mut t = Table::new(Artifact::Amplitude, "amplitude", &["t", "re_f", "im_f", "abs_f"]);
            for (x, m) in times.iter().zip(&maps) {
                let f = m.get(0, 1, 0, 1);
                t.rows.push(vec![*x, f.re, f.im, f.norm()]);
            }
            out.tables.push(t);
        }
        if want(Artifact::AmplitudeVolterra) {
            let b = sys.baths[0];
            let h = rwa::volterra_step(&b, sys.delta());
            let n = (times.last().unwrap() / h).ceil() as usize;
            let v = rwa::f_volterra(&b, sys.delta(), h, n, 1e-6)?;
            let mut t = Table::new(Artifact::AmplitudeVolterra, "amplitude_volterra", &["t", "re_f", "im_f", "abs_f"]);
            for &x in &times {
                let f = cubic_at(&v.times, &v.values, x)?;
                t.rows.push(vec![x, f.re, f.im, f.norm()]);
            }
            out.tables.push(t);
        }
    }
    if want(Artifact::Maps) {
        let mut t = Table::new(Artifact::Maps, "maps", &[]);
        t.header = element_header(sys.dim(), "phi");
        t.rows = times.iter().zip(&maps).map(|(&x, m)| element_row(x, m)).collect();
        out.tables.push(t);
    }
    if want(Artifact::Generators) {
        let rows: Result<Vec<Vec<f64>>> = times.par_iter().map(|&x| Ok(element_row(x, &generators::tcl_generator(&sys, x, tol)?))).collect();
        let mut t = Table::new(Artifact::Generators, "generators", &[]);
        t.header = element_header(sys.dim(), "l");
        t.rows = rows?;
        out.tables.push(t);
    }
    let mut d = derived_for(&format!("{:?}", cfg.model).to_lowercase(), cfg.model, &sys, tol);
    if sys.is_qubit() {
        if want(Artifact::Sigma) {
            out.tables.push(sigma_table("sigma", &times, &maps));
        }
        if want(Artifact::Report) {
            let rep = analysis::find_tp(|t| interp_map(&times, &maps, t), &times, cfg.tolerances.root)?;
            d.t_p = rep.t_p;
            push_report(out, &rep);
        }
    }
    out.derived.push(d);
    Ok(())
}

/// Maps on the grid: exact Φ_f for the RWA model, TCL reconstruction otherwise.
fn model_maps(cfg: &ScenarioConfig, sys: &SystemSpec, times: &[f64], out: &mut RunOutput) -> Result<(Vec<f64>, Vec<Superoperator>)> {
    if cfg.model == Model::Rwa {
        if !sys.baths[0].is_zero_temperature() {
            return Err(Error::Config("the exact RWA amplitude is implemented at T = 0".into()));
        }
        let f = oracle_series(&sys.baths[0], sys.delta(), times)?;
        return Ok((times.to_vec(), f.into_iter().map(|v| rwa::rwa_exact_map(v.0)).collect()));
    }
    let traj = reconstruction::solve_reconstruction(sys, GeneratorSource::Tcl, times, cfg.recon_opts())?;
    if traj.times.len() < times.len() {
        out.warnings.push(format!("reconstruction halted at t = {} ({:?})", traj.times.last().unwrap(), traj.halt));
    }
    Ok((traj.times, traj.maps))
}

fn interp_map(times: &[f64], maps: &[Superoperator], t: f64) -> Result<Superoperator> {
    let dim = maps[0].dim;
    let n = dim * dim;
    let mut m = Superoperator::zeros(dim);
    for r in 0..n {
        for c in 0..n {
            let vals: Vec<Complex64> = maps.iter().map(|x| x.matrix[(r, c)]).collect();
            m.matrix[(r, c)] = cubic_at(times, &vals, t)?;
        }
    }
    Ok(m)
}

/// Four-point Lagrange interpolation on a nonuniform grid.
pub fn cubic_at(ts: &[f64], vs: &[Complex64], t: f64) -> Result<Complex64> {
    let n = ts.len();
    if n == 0 || t < ts[0] || t > ts[n - 1] {
        return Err(Error::Domain(format!("t = {t} outside the sampled range")));
    }
    let k = ts.partition_point(|&x| x < t);
    if k < n && ts[k] == t {
        return Ok(vs[k]);
    }
    if n < 4 {
        let (a, b) = (k - 1, k);
        let w = (t - ts[a]) / (ts[b] - ts[a]);
        return Ok(vs[a] * (1.0 - w) + vs[b] * w);
    }
    let start = k.saturating_sub(2).min(n - 4);
    let idx = start..start + 4;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in idx.clone() {
        let mut w = 1.0;
        for j in idx.clone() {
            if i != j {
                w *= (t - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += vs[i] * w;
    }
    Ok(acc)
}

pub fn execute(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    match cfg.experiment {
        Experiment::Trajectory => run_trajectory(cfg, &mut out)?,
        Experiment::Fig2 => run_fig2(cfg, &mut out)?,
        Experiment::Fig3 => run_fig3(cfg, &mut out)?,
        Experiment::Fig4 => run_fig4(cfg, &mut out)?,
        Experiment::Fig5 => run_fig5(cfg, &mut out)?,
        Experiment::Fig6 => run_fig6(cfg, &mut out)?,
        Experiment::Nesting => run_nesting(cfg, &mut out)?,
        Experiment::AcceptanceRwa => run_acceptance_rwa(cfg, &mut out)?,
        Experiment::AcceptanceSbm => run_acceptance_sbm(cfg, &mut out)?,
        Experiment::Sweep => run_sweep(cfg, &mut out)?,
    }
    Ok(out)
}

/// Executes and writes `<table>.csv` for every requested artifact plus `summary.json`.
pub fn run_config(cfg: &ScenarioConfig) -> Result<Value> {
    let start = Instant::now();
    let out = execute(cfg)?;
    let dir = &cfg.outputs.directory;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &out.tables {
        if cfg.outputs.artifacts.contains(&t.artifact) {
            let name = format!("{}.csv", t.name);
            t.write(&dir.join(&name))?;
            files.push(name);
        }
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let summary = json!({
        "experiment": cfg.experiment,
        "parameters": cfg,
        "derived": out.derived,
        "checks": out.checks,
        "extra": out.extra,
        "warnings": out.warnings,
        "files": files,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join("summary.json"), text + "\n")?;
    Ok(summary)
}

// ---------------------------------------------------------------------------------------
// compare

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub quantity: String,
    pub n_compared: usize,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    /// Longest contiguous run of reference times with deviation ≤ tolerance.
    pub agreement_window: Option<(f64, f64)>,
    pub tolerance: f64,
    pub warnings: Vec<String>,
}

/// Reads (t, re, im) from the first three columns; a two-column file is real-valued.
pub fn read_reference(path: &Path) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Comparison(e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Comparison(format!("missing column {k}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Comparison(e.to_string()))
        };
        let t = num(0)?;
        let re = num(1)?;
        let im = if rec.len() > 2 { num(2)? } else { 0.0 };
        ts.push(t);
        vs.push(Complex64::new(re, im));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Comparison("reference times must be strictly increasing".into()));
    }
    Ok((ts, vs))
}

fn parse_element(name: &str) -> Option<(usize, usize, usize, usize)> {
    let rest = name.strip_prefix("phi_")?;
    let rest = rest.strip_suffix("_closed").unwrap_or(rest);
    let (l, r) = rest.split_once('_')?;
    let d = |s: &str| -> Option<(usize, usize)> {
        let c: Vec<usize> = s.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<_>>()?;
        (c.len() == 2 && c[0] >= 1 && c[1] >= 1).then(|| (c[0] - 1, c[1] - 1))
    };
    let ((a, b), (i, j)) = (d(l)?, d(r)?);
    Some((a, b, i, j))
}

/// Internal series for a named quantity on the config grid:
/// `f`, `f_volterra`, `sigma_minus`, `phi_ab_ij`, `phi_ab_ij_closed`.
pub fn quantity_series(cfg: &ScenarioConfig, name: &str) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let sys = cfg.system()?;
    let times = cfg.times(&sys)?;
    let mut scratch = RunOutput::default();
    match name {
        "f" | "f_volterra" => {
            if cfg.model != Model::Rwa {
                return Err(Error::Config(format!("quantity {name} needs model = \"rwa\"")));
            }
            let b = sys.baths[0];
            if name == "f" {
                let f = oracle_series(&b, sys.delta(), &times)?;
                return Ok((times, f.into_iter().map(|v| v.0).collect()));
            }
            let h = rwa::volterra_step(&b, sys.delta());
            let n = (times.last().unwrap() / h).ceil() as usize;
            let v = rwa::f_volterra(&b, sys.delta(), h, n, 1e-6)?;
            let vals: Result<Vec<Complex64>> = times.iter().map(|&t| cubic_at(&v.times, &v.values, t)).collect();
            Ok((times, vals?))
        }
        "sigma_minus" => {
            let (ts, maps) = model_maps(cfg, &sys, &times, &mut scratch)?;
            let v = maps.iter().map(|m| Complex64::new(analysis::coherence_singular_values(m).sigma_minus, 0.0)).collect();
            Ok((ts, v))
        }
        _ => {
            let (a, b, i, j) = parse_element(name).ok_or_else(|| Error::Config(format!("unknown quantity {name}")))?;
            let dim = sys.dim();
            if [a, b, i, j].iter().any(|&x| x >= dim) {
                return Err(Error::Config(format!("quantity {name} out of range for dimension {dim}")));
            }
            if name.ends_with("_closed") {
                if cfg.model != Model::Sbm {
                    return Err(Error::Config("closed-form elements need model = \"sbm\"".into()));
                }
                let bs = sys.baths[0];
                let p = SbmMapParams::new(&bs, sys.delta(), bath::KERNEL_TOL)?;
                let v: Result<Vec<Complex64>> = times.iter().map(|&t| Ok(sbm::closed_form_map(&p, &bs, t, TailForm::Elements)?.get(a, b, i, j))).collect();
                return Ok((times, v?));
            }
            let (ts, maps) = model_maps(cfg, &sys, &times, &mut scratch)?;
            Ok((ts, maps.iter().map(|m| m.get(a, b, i, j)).collect()))
        }
    }
}

pub fn compare_series(quantity: &str, internal: (&[f64], &[Complex64]), reference: (&[f64], &[Complex64]), tol: f64) -> Result<ComparisonReport> {
    let (it, iv) = internal;
    let (rt, rv) = reference;
    if it.is_empty() || rt.is_empty() {
        return Err(Error::Comparison("empty trajectory".into()));
    }
    let (lo, hi) = (it[0], *it.last().unwrap());
    let mut warnings = Vec::new();
    let mut devs = Vec::new();
    let mut skipped = 0;
    for (&t, &v) in rt.iter().zip(rv) {
        if t < lo || t > hi {
            skipped += 1;
            continue;
        }
        devs.push((t, (cubic_at(it, iv, t)? - v).norm()));
    }
    if devs.is_empty() {
        return Err(Error::Comparison(format!("reference range [{}, {}] does not overlap [{lo}, {hi}]", rt[0], rt[rt.len() - 1])));
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} reference samples outside the internal range were skipped"));
    }
    if rt.len() <= 10 {
        warnings.push(format!("coarse reference grid ({} points): interpolation confidence is low", rt.len()));
    }
    let max = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    let mean = devs.iter().map(|d| d.1).sum::<f64>() / devs.len() as f64;
    let mut best: Option<(f64, f64)> = None;
    let mut run: Option<(f64, f64)> = None;
    for &(t, d) in &devs {
        if d <= tol {
            run = Some(run.map_or((t, t), |r| (r.0, t)));
            if let Some(r) = run {
                if best.is_none_or(|b| r.1 - r.0 > b.1 - b.0) {
                    best = Some(r);
                }
            }
        } else {
            run = None;
        }
    }
    Ok(ComparisonReport {
        quantity: quantity.into(),
        n_compared: devs.len(),
        max_abs_deviation: max,
        mean_abs_deviation: mean,
        agreement_window: best,
        tolerance: tol,
        warnings,
    })
}

pub fn compare(cfg: &ScenarioConfig, reference: &Path, quantity: &str, tol: f64) -> Result<ComparisonReport> {
    let (rt, rv) = read_reference(reference)?;
    let (it, iv) = quantity_series(cfg, quantity)?;
    compare_series(quantity, (&it, &iv), (&rt, &rv), tol)
}

// ---------------------------------------------------------------------------------------
// entry point

#[derive(Debug, Parser)]
#[command(name = "tclmap", version, about = "Dynamical maps of the spin-boson model from resummed TCL generators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a config file or a built-in scenario.
    Run {
        #[arg(required_unless_present = "scenario", conflicts_with = "scenario")]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a config's trajectory with a reference CSV of (t, re, im).
    Compare {
        config: PathBuf,
        reference: PathBuf,
        #[arg(long)]
        quantity: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// List built-in scenarios.
    List,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 3,
        Error::Accuracy { .. } => 2,
        _ => 1,
    }
}

fn init_workers() {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn list_scenarios() -> String {
    SCENARIOS.iter().map(|(n, d, _)| format!("{n:<16}{d}\n")).collect()
}

fn load_run_config(config: Option<PathBuf>, scenario: Option<String>, out: Option<PathBuf>) -> Result<ScenarioConfig> {
    let mut cfg = match (config, scenario) {
        (Some(p), _) => ScenarioConfig::load(&p)?,
        (None, Some(name)) => {
            let text = default_config(&name).ok_or_else(|| {
                let hint = suggest(&name).map(|s| format!("; did you mean '{s}'?")).unwrap_or_default();
                Error::Config(format!("unknown scenario '{name}'{hint}"))
            })?;
            ScenarioConfig::parse(text, Path::new("."))?
        }
        (None, None) => return Err(Error::Config("run needs a config path or --scenario".into())),
    };
    if let Some(o) = out {
        cfg.outputs.directory = o;
    }
    Ok(cfg)
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_workers();
    let result = match cli.command {
        Command::List => {
            print!("{}", list_scenarios());
            Ok(())
        }
        Command::Run { config, scenario, out } => load_run_config(config, scenario, out).and_then(|cfg| {
            let s = run_config(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&s).unwrap_or_default());
            Ok(())
        }),
        Command::Compare { config, reference, quantity, tol } => ScenarioConfig::load(&config).and_then(|cfg| {
            let r = compare(&cfg, &reference, &quantity, tol)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", serde_json::to_string_pretty(&r).unwrap_or_default());
            Ok(())
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_config_parses() {
        for (name, _, text) in SCENARIOS {
            let c = ScenarioConfig::parse(text, Path::new(".")).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(serde_json::to_value(c.experiment).unwrap(), json!(name));
        }
    }

    #[test]
    fn unknown_key_is_a_config_error() {
        let text = default_config("fig6").unwrap().replace("omega_c = 4.0", "omega_c = 4.0\nomegac = 4.0");
        let e = ScenarioConfig::parse(&text, Path::new(".")).unwrap_err();
        assert_eq!(exit_code(&e), 3);
    }

    #[test]
    fn formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn element_names() {
        assert_eq!(parse_element("phi_21_12"), Some((1, 0, 0, 1)));
        assert_eq!(parse_element("phi_12_12_closed"), Some((0, 1, 0, 1)));
        assert_eq!(parse_element("phi_1_12"), None);
    }

    #[test]
    fn cubic_is_exact_for_cubics() {
        let ts: Vec<f64> = (0..12).map(|k| (k as f64).powf(1.3)).collect();
        let p = |t: f64| Complex64::new(t * t * t - 2.0 * t, 0.5 * t * t);
        let vs: Vec<Complex64> = ts.iter().map(|&t| p(t)).collect();
        for t in [0.3, 2.2, 10.0, 22.0] {
            assert!((cubic_at(&ts, &vs, t).unwrap() - p(t)).norm() < 1e-9 * p(t).norm().max(1.0));
        }
    }

    #[test]
    fn suggestion_for_typos() {
        assert_eq!(suggest("fig 5"), Some("fig5"));
        assert_eq!(suggest("acceptance_rwa"), Some("acceptance-rwa"));
    }
}
