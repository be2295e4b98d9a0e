//! Map reconstruction: Φ(t) = e^{L₀t} + C(t) with Ċ = L₀C + [L(t) − L₀]e^{L₀t}, C(0) = 0,
//! and the reconstructed generator Φ̇Φ⁻¹.

use num_complex::Complex64;

use crate::analysis;
use crate::bath;
use crate::error::{Error, Result};
use crate::generators::{self, SystemSpec};
use crate::linalg::{CMat, Superoperator};
use crate::ode::{self, Control, OdeOpts, Stop};
use crate::quad::gauss_legendre;
use crate::rwa::{self, SpectralOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorSource {
    Tcl,
    BlochRedfield,
    ExactRwa,
    Davies,
}

impl GeneratorSource {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Tcl => "tcl",
            Self::BlochRedfield => "bloch-redfield",
            Self::ExactRwa => "exact-rwa",
            Self::Davies => "davies",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HaltReason {
    Completed,
    /// Smallest singular value of Φ fell below the floor at this grid time.
    Singular { t: f64 },
    StepUnderflow { t: f64, h: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct ReconstructionOpts {
    pub rtol: f64,
    pub atol: f64,
    pub kernel_tol: f64,
    pub sv_floor: f64,
    /// Keep integrating past the singular time (diagnostics only).
    pub continue_past_singular: bool,
    /// Record the minimum Choi eigenvalue at every grid time.
    pub record_choi: bool,
}

impl Default for ReconstructionOpts {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-11,
            kernel_tol: bath::RHS_TOL,
            sv_floor: 1e-8,
            continue_past_singular: false,
            record_choi: false,
        }
    }
}

impl ReconstructionOpts {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-2,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapTrajectory {
    pub times: Vec<f64>,
    pub maps: Vec<Superoperator>,
    pub corrections: Vec<Superoperator>,
    /// Φ̇ at the grid times, from the ODE right-hand side.
    pub derivatives: Vec<Superoperator>,
    pub source: GeneratorSource,
    pub reference: Superoperator,
    pub min_singular: Vec<f64>,
    pub invertible: Vec<bool>,
    pub choi_min: Vec<f64>,
    pub halt: HaltReason,
    pub sv_floor: f64,
}

/// e^{L₀t}; closed form for the qubit population block when L₀ is block diagonal.
pub fn reference_propagator(l0: &Superoperator, t: f64) -> Superoperator {
    if l0.dim == 2 && l0.population_coherence_coupling() == 0.0 && l0.get(0, 0, 1, 1) == Complex64::new(0.0, 0.0) {
        let r = l0.get(0, 0, 0, 0);
        let c21 = l0.get(1, 0, 1, 0);
        let c12 = l0.get(0, 1, 0, 1);
        if l0.get(1, 0, 0, 1) == Complex64::new(0.0, 0.0) && l0.get(0, 1, 1, 0) == Complex64::new(0.0, 0.0) {
            let mut m = Superoperator::zeros(2);
            let e = (r * t).exp();
            m.set(0, 0, 0, 0, e);
            m.set(1, 1, 0, 0, 1.0 - e);
            m.set(1, 1, 1, 1, Complex64::new(1.0, 0.0));
            m.set(1, 0, 1, 0, (c21 * t).exp());
            m.set(0, 1, 0, 1, (c12 * t).exp());
            return m;
        }
    }
    l0.exp_scaled(t)
}

fn unflatten(dim: usize, v: &[Complex64]) -> Superoperator {
    let n = dim * dim;
    Superoperator::from_matrix(dim, CMat::from_column_slice(n, n, v))
}

/// Integrates the reconstruction ODE for an arbitrary generator callable.
pub fn solve_with<G>(l0: &Superoperator, mut generator: G, grid: &[f64], source: GeneratorSource, opts: ReconstructionOpts) -> Result<MapTrajectory>
where
    G: FnMut(f64) -> Result<Superoperator>,
{
    if grid.is_empty() || grid[0] != 0.0 {
        return Err(Error::Parameter("reconstruction grid must start at t = 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("reconstruction grid must be strictly increasing".into()));
    }
    let dim = l0.dim;
    let n = dim * dim;
    let y0 = vec![Complex64::new(0.0, 0.0); n * n];
    let mut traj = MapTrajectory {
        times: Vec::new(),
        maps: Vec::new(),
        corrections: Vec::new(),
        derivatives: Vec::new(),
        source,
        reference: l0.clone(),
        min_singular: Vec::new(),
        invertible: Vec::new(),
        choi_min: Vec::new(),
        halt: HaltReason::Completed,
        sv_floor: opts.sv_floor,
    };
    let l0m = l0.matrix.clone();
    let mut observe_err: Option<Error> = None;
    let gen_cell = std::cell::RefCell::new(&mut generator);
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| -> Result<()> {
        let l = (gen_cell.borrow_mut())(t)?;
        let e = reference_propagator(l0, t).matrix;
        let c = CMat::from_column_slice(n, n, y);
        let d = &l0m * &c + (&l.matrix - &l0m) * &e;
        dy.copy_from_slice(d.as_slice());
        Ok(())
    };
    let ode_opts = OdeOpts {
        rtol: opts.rtol,
        atol: opts.atol,
        ..OdeOpts::default()
    };
    let stats = ode::integrate(rhs, &y0, grid, ode_opts, |t, y| {
        let c = unflatten(dim, y);
        let e = reference_propagator(l0, t);
        let phi = Superoperator::from_matrix(dim, &e.matrix + &c.matrix);
        let l = match (gen_cell.borrow_mut())(t) {
            Ok(l) => l.matrix,
            Err(err) => {
                observe_err = Some(err);
                return Control::Halt;
            }
        };
        let dphi = Superoperator::from_matrix(dim, &l0m * &phi.matrix + (&l - &l0m) * &e.matrix);
        let sv = phi.singular_values();
        let smin = *sv.last().unwrap();
        let ok = smin >= opts.sv_floor;
        if opts.record_choi {
            traj.choi_min.push(analysis::cp_check(&phi));
        }
        traj.times.push(t);
        traj.maps.push(phi);
        traj.corrections.push(c);
        traj.derivatives.push(dphi);
        traj.min_singular.push(smin);
        traj.invertible.push(ok);
        if !ok && !opts.continue_past_singular {
            return Control::Halt;
        }
        Control::Continue
    })?;
    if let Some(e) = observe_err {
        return Err(e);
    }
    traj.halt = match stats.stop {
        Stop::Completed => HaltReason::Completed,
        Stop::Halted { t } => HaltReason::Singular { t },
        Stop::StepUnderflow { t, h } => HaltReason::StepUnderflow { t, h },
    };
    Ok(traj)
}

/// Reconstruction for a named source. `ExactRwa` requires the rotating-wave preset at T = 0.
pub fn solve_reconstruction(sys: &SystemSpec, source: GeneratorSource, grid: &[f64], opts: ReconstructionOpts) -> Result<MapTrajectory> {
    let l0 = generators::davies_generator(sys, bath::KERNEL_TOL)?;
    let tol = opts.kernel_tol;
    match source {
        GeneratorSource::Tcl => solve_with(&l0, |t| generators::tcl_generator(sys, t, tol), grid, source, opts),
        GeneratorSource::BlochRedfield => solve_with(&l0, |t| generators::bloch_redfield_generator(sys, t, tol), grid, source, opts),
        GeneratorSource::Davies => {
            let l = l0.clone();
            solve_with(&l0, move |_| Ok(l.clone()), grid, source, opts)
        }
        GeneratorSource::ExactRwa => {
            if !sys.rotating_wave {
                return Err(Error::Parameter("exact RWA source needs the rotating-wave preset".into()));
            }
            let t_max = *grid.last().unwrap();
            let oracle = SpectralOracle::new(&sys.baths[0], sys.delta(), t_max)?;
            solve_with(
                &l0,
                |t| {
                    let (f, fd) = oracle.eval(t);
                    rwa::rwa_exact_generator(f, fd)
                },
                grid,
                source,
                opts,
            )
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructedGenerator {
    pub t: f64,
    pub generator: Superoperator,
    pub min_singular: f64,
    /// Set when σ_min is within 10³ of the floor.
    pub ill_conditioned: bool,
}

/// Φ(t) and Φ̇(t) from the trajectory: stored values at grid times, cubic Hermite
/// interpolation in between.
pub fn interpolate(traj: &MapTrajectory, t: f64) -> Result<(Superoperator, Superoperator)> {
    let ts = &traj.times;
    if ts.is_empty() || t < ts[0] || t > *ts.last().unwrap() {
        return Err(Error::Domain(format!("t = {t} outside the trajectory")));
    }
    let k = ts.partition_point(|&x| x < t);
    if ts.get(k) == Some(&t) {
        return Ok((traj.maps[k].clone(), traj.derivatives[k].clone()));
    }
    let (a, b) = (k - 1, k);
    let h = ts[b] - ts[a];
    let s = (t - ts[a]) / h;
    let (p0, p1) = (&traj.maps[a].matrix, &traj.maps[b].matrix);
    let (m0, m1) = (&traj.derivatives[a].matrix * Complex64::new(h, 0.0), &traj.derivatives[b].matrix * Complex64::new(h, 0.0));
    let c = |x: f64| Complex64::new(x, 0.0);
    let (s2, s3) = (s * s, s * s * s);
    let p = p0 * c(2.0 * s3 - 3.0 * s2 + 1.0) + &m0 * c(s3 - 2.0 * s2 + s) + p1 * c(-2.0 * s3 + 3.0 * s2) + &m1 * c(s3 - s2);
    let dp = (p0 * c(6.0 * s2 - 6.0 * s) + &m0 * c(3.0 * s2 - 4.0 * s + 1.0) + p1 * c(-6.0 * s2 + 6.0 * s) + &m1 * c(3.0 * s2 - 2.0 * s)) / c(h);
    let dim = traj.reference.dim;
    Ok((Superoperator::from_matrix(dim, p), Superoperator::from_matrix(dim, dp)))
}

/// Φ̇Φ⁻¹ at t.
pub fn reconstructed_generator(traj: &MapTrajectory, t: f64) -> Result<ReconstructedGenerator> {
    let (phi, dphi) = interpolate(traj, t)?;
    let smin = *phi.singular_values().last().unwrap();
    if smin < traj.sv_floor {
        return Err(Error::Singular(format!("sigma_min = {smin:.3e} below floor at t = {t}")));
    }
    let inv = phi.try_inverse().ok_or_else(|| Error::Singular(format!("map not invertible at t = {t}")))?;
    Ok(ReconstructedGenerator {
        t,
        generator: dphi.compose(&inv),
        min_singular: smin,
        ill_conditioned: smin < 1e3 * traj.sv_floor,
    })
}

/// ∫₀ᵗ e^{−L₀τ} L(τ) e^{L₀τ} dτ by composite 16-point Gauss panels, finer on the
/// bath correlation time.
pub fn bracket_integral<G>(l0: &Superoperator, mut generator: G, t: f64, panel: f64) -> Result<Superoperator>
where
    G: FnMut(f64) -> Result<Superoperator>,
{
    let (gx, gw) = gauss_legendre(16);
    let n = ((t / panel).ceil() as usize).max(1);
    let h = t / n as f64;
    let mut acc = Superoperator::zeros(l0.dim);
    for p in 0..n {
        let c = (p as f64 + 0.5) * h;
        for k in 0..16 {
            let tau = c + 0.5 * h * gx[k];
            let m = reference_propagator(l0, -tau).matrix * generator(tau)?.matrix * reference_propagator(l0, tau).matrix;
            acc.matrix += m * Complex64::new(0.5 * h * gw[k], 0.0);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// (t, ‖Φ_ODE(t) − e^{L₀t}[I − tL₀ + ∫e^{−L₀τ}Le^{L₀τ}]‖_F)
    pub deviations: Vec<(f64, f64)>,
    pub max_deviation: f64,
}

/// Compares the ODE reconstruction with the first-order disentanglement identity
/// Φ(t) = e^{L₀t}[I − tL₀ + ∫₀ᵗ e^{−L₀τ}L(τ)e^{L₀τ}dτ] on the grid.
pub fn linear_term_identity_check(sys: &SystemSpec, grid: &[f64], opts: ReconstructionOpts) -> Result<IdentityReport> {
    let l0 = generators::davies_generator(sys, bath::KERNEL_TOL)?;
    let tol = opts.kernel_tol;
    let traj = solve_reconstruction(
        sys,
        GeneratorSource::Tcl,
        grid,
        ReconstructionOpts {
            continue_past_singular: true,
            ..opts
        },
    )?;
    let mut deviations = Vec::with_capacity(traj.times.len());
    for (k, &t) in traj.times.iter().enumerate() {
        let b = bracket_integral(&l0, |tau| generators::tcl_generator(sys, tau, tol), t, 0.1)?;
        let mut inner = Superoperator::identity(l0.dim).matrix - &l0.matrix * Complex64::new(t, 0.0);
        inner += &b.matrix;
        let rhs = reference_propagator(&l0, t).matrix * inner;
        deviations.push((t, (&traj.maps[k].matrix - rhs).norm()));
    }
    let max_deviation = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(IdentityReport { deviations, max_deviation })
}
