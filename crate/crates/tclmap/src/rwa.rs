//! Rotating-wave benchmark. The whole reduced dynamics follows from the survival amplitude
//! f(t) = ρ₁₂(t)/ρ₁₂(0); two independent oracles compute it (spectral integral and Volterra).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::bath::{self, BathSpec};
use crate::error::{Error, Result};
use crate::generators::{rwa_generator_at, RenormalizedFrequency};
use crate::linalg::Superoperator;
use crate::quad::{self, gauss_legendre};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeMethod {
    Spectral,
    Volterra,
    TwoComponent,
    Reconstructed,
}

#[derive(Debug, Clone)]
pub struct SurvivalAmplitude {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub method: AmplitudeMethod,
    /// Estimated max absolute error over the samples, where the method provides one.
    pub error: Option<f64>,
}

/// Complex Bohr frequencies: z = Δ − (i/4)Γ_Δ (RWA pole) and a = Δ̃ − (i/4)J_Δ with the
/// spin–boson Lamb shift Δ̃ = Δ + (S_Δ − S_{−Δ})/4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPole {
    pub z: Complex64,
    pub a: Complex64,
}

impl ComplexPole {
    pub fn new(spec: &BathSpec, delta: f64, tol: f64) -> Result<Self> {
        let gp = bath::gamma_asymptotic(spec, Complex64::new(delta, 0.0), tol)?;
        let gm = bath::gamma_asymptotic(spec, Complex64::new(-delta, 0.0), tol)?;
        Ok(Self {
            z: delta - 0.25 * I * gp,
            a: Complex64::new(delta + 0.25 * (gp.im - gm.im), -0.25 * gp.re),
        })
    }
}

/// Quadrature weights for f(t) = (1/4π)∫₀^∞ e^{−iωt} J_ω / [(Δ − ω + S_ω/4)² + (J_ω/4)²] dω,
/// valid for 0 ≤ t ≤ t_max. S_ω is evaluated once per node.
#[derive(Debug, Clone)]
pub struct SpectralOracle {
    pub t_max: f64,
    omega: Vec<f64>,
    weight: Vec<Complex64>,
}

impl SpectralOracle {
    pub fn new(spec: &BathSpec, delta: f64, t_max: f64) -> Result<Self> {
        if !spec.is_zero_temperature() {
            return Err(Error::Parameter("spectral survival amplitude requires beta = inf".into()));
        }
        let j = bath::spectral_density(spec, delta);
        let wc = spec.omega_c;
        let width = 0.05f64.min(10.0 / t_max.max(1.0));
        let res_width = width.min(j / 8.0);
        let (lo_res, hi_res) = (delta - 5.0 * j, delta + 5.0 * j);
        let w_max = 25.0 * wc;
        let mut breaks = vec![delta / 2.0, lo_res, hi_res, 2.0 * delta, wc, 10.0 * wc, w_max];
        breaks.retain(|&b| b > width && b <= w_max);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        // geometric grading towards ω = 0 where J ~ ω^s
        let mut edges = vec![0.0];
        let mut x = 1e-12;
        while x < width {
            edges.push(x);
            x *= 1.6;
        }
        let mut a = width;
        for &b in &breaks {
            let h = if a >= lo_res && b <= hi_res { res_width } else { width };
            let n = ((b - a) / h).ceil().max(1.0) as usize;
            for k in 0..n {
                edges.push(a + (b - a) * k as f64 / n as f64);
            }
            a = b;
        }
        edges.push(w_max);
        let (gx, gw) = gauss_legendre(16);
        let mut nodes = Vec::with_capacity(edges.len() * 16);
        for e in edges.windows(2) {
            let (c, r) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
            for k in 0..16 {
                nodes.push((c + r * gx[k], r * gw[k]));
            }
        }
        let weight: Vec<Complex64> = nodes
            .par_iter()
            .map(|&(w, qw)| {
                let jw = bath::spectral_density(spec, w);
                let sw = bath::gamma_asymptotic(spec, Complex64::new(w, 0.0), 1e-12)?.im;
                let d = (delta - w + sw / 4.0).powi(2) + (jw / 4.0).powi(2);
                Ok(Complex64::new(qw * jw / (4.0 * PI * d), 0.0))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            t_max,
            omega: nodes.iter().map(|n| n.0).collect(),
            weight,
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// (f(t), ḟ(t)).
    pub fn eval(&self, t: f64) -> (Complex64, Complex64) {
        let mut f = ZERO;
        let mut fd = ZERO;
        for (w, q) in self.omega.iter().zip(&self.weight) {
            let v = q * Complex64::from_polar(1.0, -w * t);
            f += v;
            fd += -I * w * v;
        }
        (f, fd)
    }

    pub fn f(&self, t: f64) -> Complex64 {
        self.eval(t).0
    }

    /// Samples on t₀ + k·dt, k < n, by phase recurrence re-anchored every 64 steps.
    pub fn sample_uniform(&self, t0: f64, dt: f64, n: usize) -> Vec<(Complex64, Complex64)> {
        const BLOCK: usize = 64;
        let blocks: Vec<usize> = (0..n.div_ceil(BLOCK)).collect();
        let chunks: Vec<Vec<(Complex64, Complex64)>> = blocks
            .par_iter()
            .map(|&b| {
                let k0 = b * BLOCK;
                let m = BLOCK.min(n - k0);
                let mut out = vec![(ZERO, ZERO); m];
                for (w, q) in self.omega.iter().zip(&self.weight) {
                    let step = Complex64::from_polar(1.0, -w * dt);
                    let mut ph = q * Complex64::from_polar(1.0, -w * (t0 + k0 as f64 * dt));
                    let iw = -I * w;
                    for o in out.iter_mut() {
                        o.0 += ph;
                        o.1 += iw * ph;
                        ph *= step;
                    }
                }
                out
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }
}

/// f(t) from the spectral integral (builds an oracle resolved up to t).
pub fn f_spectral(spec: &BathSpec, delta: f64, t: f64) -> Result<Complex64> {
    if t < 0.0 {
        return Err(Error::Domain(format!("t = {t} < 0")));
    }
    Ok(SpectralOracle::new(spec, delta, t)?.f(t))
}

/// Default Volterra step min(τ_C, T₂)/50.
pub fn volterra_step(spec: &BathSpec, delta: f64) -> f64 {
    let t2 = 4.0 / bath::spectral_density(spec, delta);
    (1.0 / spec.omega_c).min(t2) / 50.0
}

/// Γ_Δ(nh) for n = 0..=n_steps by cumulative 10-point Gauss panels.
fn kernel_table(spec: &BathSpec, delta: f64, h: f64, n_steps: usize) -> Vec<Complex64> {
    let (gx, gw) = gauss_legendre(10);
    let mut k = Vec::with_capacity(n_steps + 1);
    k.push(ZERO);
    let mut acc = ZERO;
    for n in 0..n_steps {
        let c = (n as f64 + 0.5) * h;
        let mut s = ZERO;
        for j in 0..10 {
            let tau = c + 0.5 * h * gx[j];
            s += gw[j] * bath::correlation_complex(spec, Complex64::new(tau, 0.0)) * Complex64::from_polar(1.0, delta * tau);
        }
        acc += 0.5 * h * s;
        k.push(acc);
    }
    k
}

struct Cdq {
    k: Vec<Complex64>,
    g: Vec<Complex64>,
    s: Vec<Complex64>,
    h: f64,
    planner: FftPlanner<f64>,
}

impl Cdq {
    const LEAF: usize = 64;

    fn fft(&mut self, n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        (self.planner.plan_fft_forward(n), self.planner.plan_fft_inverse(n))
    }

    fn solve(&mut self, lo: usize, hi: usize) {
        if hi - lo <= Self::LEAF {
            for n in lo..hi {
                if n == 0 {
                    self.g[0] = Complex64::new(0.5, 0.0);
                    continue;
                }
                let mut acc = self.s[n];
                for k in lo..n {
                    acc += self.k[n - k] * self.g[k];
                }
                self.s[n] = acc;
                self.g[n] = ONE - 0.25 * self.h * acc;
            }
            return;
        }
        let mid = (lo + hi) / 2;
        self.solve(lo, mid);
        // S[n] += Σ_{k∈[lo,mid)} K[n−k] g[k] for n ∈ [mid, hi)
        let m = mid - lo;
        let l = hi - lo;
        let size = (m + l).next_power_of_two();
        let (fwd, inv) = self.fft(size);
        let mut a = vec![ZERO; size];
        a[..m].copy_from_slice(&self.g[lo..mid]);
        let mut b = vec![ZERO; size];
        b[..l].copy_from_slice(&self.k[..l]);
        fwd.process(&mut a);
        fwd.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        inv.process(&mut a);
        let norm = 1.0 / size as f64;
        for n in mid..hi {
            self.s[n] += a[n - lo] * norm;
        }
        self.solve(mid, hi);
    }
}

/// Trapezoidal product integration of f_I(t) = 1 − (1/4)∫₀ᵗ Γ_Δ(t−τ) f_I(τ)dτ,
/// with the discrete convolution done by divide-and-conquer FFT.
fn volterra_interaction(spec: &BathSpec, delta: f64, h: f64, n_steps: usize) -> Vec<Complex64> {
    let k = kernel_table(spec, delta, h, n_steps);
    let mut cdq = Cdq {
        k,
        g: vec![ZERO; n_steps + 1],
        s: vec![ZERO; n_steps + 1],
        h,
        planner: FftPlanner::new(),
    };
    cdq.solve(0, n_steps + 1);
    let mut f = cdq.g;
    f[0] = ONE;
    f
}

/// Survival amplitude on t_k = k·h, k = 0..=n_steps, in the Schrödinger picture.
/// Runs h and h/2, returns the Richardson combination, and fails if the two
/// resolutions disagree by more than `tol`.
pub fn f_volterra(spec: &BathSpec, delta: f64, h: f64, n_steps: usize, tol: f64) -> Result<SurvivalAmplitude> {
    if h <= 0.0 || n_steps == 0 {
        return Err(Error::Parameter("Volterra grid needs h > 0 and at least one step".into()));
    }
    let coarse = volterra_interaction(spec, delta, h, n_steps);
    let fine = volterra_interaction(spec, delta, 0.5 * h, 2 * n_steps);
    let mut err: f64 = 0.0;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    for (k, c) in coarse.iter().enumerate() {
        let f2 = fine[2 * k];
        err = err.max((f2 - c).norm() / 3.0);
        let t = k as f64 * h;
        times.push(t);
        values.push((4.0 * f2 - c) / 3.0 * Complex64::from_polar(1.0, -delta * t));
    }
    if err.is_nan() || err > tol {
        return Err(Error::Accuracy {
            context: "f_volterra: h vs h/2".into(),
            achieved: err,
            requested: tol,
        });
    }
    Ok(SurvivalAmplitude {
        times,
        values,
        method: AmplitudeMethod::Volterra,
        error: Some(err),
    })
}

/// Φ_f in the ordering (ρ₁₁, ρ₂₂, ρ₂₁, ρ₁₂).
pub fn rwa_exact_map(f: Complex64) -> Superoperator {
    let mut m = Superoperator::zeros(2);
    let p = f.norm_sqr();
    m.set(0, 0, 0, 0, Complex64::new(p, 0.0));
    m.set(1, 1, 0, 0, Complex64::new(1.0 - p, 0.0));
    m.set(1, 1, 1, 1, ONE);
    m.set(1, 0, 1, 0, f.conj());
    m.set(0, 1, 0, 1, f);
    m
}

/// L_f = Φ̇_fΦ_f⁻¹.
pub fn rwa_exact_generator(f: Complex64, fdot: Complex64) -> Result<Superoperator> {
    if f == ZERO {
        return Err(Error::Singular("survival amplitude vanishes".into()));
    }
    let r = fdot / f;
    let mut l = Superoperator::zeros(2);
    l.set(0, 0, 0, 0, Complex64::new(2.0 * r.re, 0.0));
    l.set(1, 1, 0, 0, Complex64::new(-2.0 * r.re, 0.0));
    l.set(1, 0, 1, 0, r.conj());
    l.set(0, 1, 0, 1, r);
    Ok(l)
}

/// Pole-plus-tail approximation e^{−(iΔ̃ + J_Δ/4)t} + C(t)/(4[Δ + S₀/4]²), Δ̃ = Δ + S_Δ/4.
#[derive(Debug, Clone, Copy)]
pub struct TwoComponent {
    spec: BathSpec,
    delta_tilde: f64,
    rate: f64,
    tail_scale: f64,
}

impl TwoComponent {
    pub fn new(spec: &BathSpec, delta: f64, tol: f64) -> Result<Self> {
        let g = bath::gamma_asymptotic(spec, Complex64::new(delta, 0.0), tol)?;
        let s0 = bath::gamma_asymptotic(spec, ZERO, tol)?.im;
        Ok(Self {
            spec: *spec,
            delta_tilde: delta + g.im / 4.0,
            rate: g.re / 4.0,
            tail_scale: 1.0 / (4.0 * (delta + s0 / 4.0).powi(2)),
        })
    }

    pub fn markov(&self, t: f64) -> Complex64 {
        Complex64::new(-self.rate * t, -self.delta_tilde * t).exp()
    }

    pub fn tail(&self, t: f64) -> Result<Complex64> {
        Ok(self.tail_scale * bath::bath_correlation(&self.spec, t)?)
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        Ok(self.markov(t) + self.tail(t)?)
    }
}

pub fn two_component_model(spec: &BathSpec, delta: f64, t: f64) -> Result<Complex64> {
    TwoComponent::new(spec, delta, bath::KERNEL_TOL)?.eval(t)
}

/// Balance time from e^{−t/T₂} = (ω_c t)^{−(s+1)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpEstimate {
    /// Root of the balance equation by bisection.
    pub bisection: f64,
    /// (s+1)T₂ ln(ω_c T₂).
    pub closed_form: f64,
    pub t2: f64,
}

pub fn tp_estimate(spec: &BathSpec, delta: f64) -> Result<TpEstimate> {
    let t2 = 4.0 / bath::spectral_density(spec, delta);
    let p = spec.s + 1.0;
    let wc = spec.omega_c;
    // g > 0 while the pole term dominates; its maximum is at t = (s+1)T₂.
    let g = |t: f64| -t / t2 + p * (wc * t).ln();
    let mut lo = p * t2;
    if g(lo) <= 0.0 {
        return Err(Error::NoCrossing(format!(
            "pole never dominates the tail (omega_c T2 = {:.3})",
            wc * t2
        )));
    }
    let mut hi = 2.0 * lo;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(TpEstimate {
        bisection: 0.5 * (lo + hi),
        closed_form: p * t2 * (wc * t2).ln(),
        t2,
    })
}

/// u(t) = Δ − (i/4)Γ_Δ(t).
pub fn renormalized_u(spec: &BathSpec, delta: f64, t: f64, tol: f64) -> Result<RenormalizedFrequency> {
    let u = crate::generators::rwa_frequency(spec, delta, t, tol)?;
    Ok(RenormalizedFrequency {
        value: u,
        time: t,
        branch_order: 1,
    })
}

/// Diagonal resummed RWA generator with Γ_{u(t)}(t).
pub fn resummed_rwa_generator(spec: &BathSpec, delta: f64, t: f64, tol: f64) -> Result<Superoperator> {
    let u = renormalized_u(spec, delta, t, tol)?.value;
    Ok(rwa_generator_at(delta, bath::gamma_finite(spec, u, t, tol)?))
}

/// Reconstructed amplitude (1 + Γ_Δt/4)e^{−izt} − (1/4)e^{−izt}∫₀ᵗ Γ_{u(τ)}(τ)dτ by direct
/// quadrature. Diagnostic counterpart of the ODE reconstruction for the commuting case.
pub fn reconstructed_amplitude(spec: &BathSpec, delta: f64, t: f64, tol: f64) -> Result<Complex64> {
    let g = bath::gamma_asymptotic(spec, Complex64::new(delta, 0.0), tol)?;
    let z = delta - 0.25 * I * g;
    let integrand = |tau: f64| -> Complex64 {
        let u = crate::generators::rwa_frequency(spec, delta, tau, tol).unwrap_or(Complex64::new(f64::NAN, 0.0));
        bath::gamma_finite(spec, u, tau, tol).unwrap_or(Complex64::new(f64::NAN, 0.0))
    };
    let mut pts: Vec<f64> = (0..=(t / 2.0).ceil() as usize).map(|k| (2.0 * k as f64).min(t)).collect();
    pts.dedup();
    let q = quad::adaptive_points(integrand, &pts, quad::QuadOpts::abs(100.0 * tol))?;
    if !q.value.is_finite() {
        return Err(Error::Accuracy {
            context: "reconstructed_amplitude kernel".into(),
            achieved: f64::INFINITY,
            requested: tol,
        });
    }
    let e = (-I * z * t).exp();
    Ok((1.0 + 0.25 * g * t) * e - 0.25 * e * q.value)
}

/// Composite Gauss–Legendre rule on [0, t] with symmetric nodes, so t − x is again a node.
fn symmetric_rule(t: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(16);
    let h = t / panels as f64;
    let mut x = Vec::with_capacity(panels * 16);
    let mut w = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let c = (p as f64 + 0.5) * h;
        for k in 0..16 {
            x.push(c + 0.5 * h * gx[k]);
            w.push(0.5 * h * gw[k]);
        }
    }
    (x, w)
}

/// Fourth-order cumulant in both forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub k2: Complex64,
    /// (1/16)∫₀ᵗ[Γ(t−t₁) − Γ(t)]Γ(t₁)dt₁.
    pub k4: Complex64,
    /// (i/16)Γ ∂_ωΓ + H/16 with H = ∫₀ᵗ D(t,t−t₁)D(t,t₁)dt₁, D(t,x) = Γ(t) − Γ(x).
    pub k4_h_form: Complex64,
    pub h: Complex64,
}

/// K₂ and K₄ at ω = Δ; `panels` 16-point panels on [0, t].
pub fn cumulants_k2_k4(spec: &BathSpec, delta: f64, t: f64, panels: usize, tol: f64) -> Result<Cumulants> {
    let w = Complex64::new(delta, 0.0);
    let gt = bath::gamma_finite(spec, w, t, tol)?;
    if t == 0.0 {
        return Ok(Cumulants {
            k2: ZERO,
            k4: ZERO,
            k4_h_form: ZERO,
            h: ZERO,
        });
    }
    let (x, qw) = symmetric_rule(t, panels.max(1));
    let gx: Vec<Complex64> = x.par_iter().map(|&xi| bath::gamma_finite(spec, w, xi, tol)).collect::<Result<_>>()?;
    let n = x.len();
    let mut k4 = ZERO;
    let mut h = ZERO;
    for i in 0..n {
        let g_rev = gx[n - 1 - i]; // Γ(t − x_i)
        k4 += qw[i] * (g_rev - gt) * gx[i];
        h += qw[i] * (gt - g_rev) * (gt - gx[i]);
    }
    let dg = bath::gamma_finite_derivative(spec, w, t, tol)?;
    Ok(Cumulants {
        k2: -0.25 * gt,
        k4: k4 / 16.0,
        k4_h_form: I / 16.0 * gt * dg + h / 16.0,
        h,
    })
}

/// Nested renormalization u_{k+1} = Δ − (i/4)Γ_{u_k}(t), u₀ = Δ, iterated `depth` times.
#[derive(Debug, Clone)]
pub struct NestedFrequency {
    pub frequency: RenormalizedFrequency,
    /// u₀, u₁, …, u_depth.
    pub history: Vec<Complex64>,
    /// |u − (Δ − (i/4)Γ_u(t))| after the final iterate; NaN when the iteration escaped.
    pub residual: f64,
    /// Depth at which |u − Δ| exceeded Δ; `history` stops there.
    pub escaped_at: Option<u32>,
}

pub fn nested_frequency(spec: &BathSpec, delta: f64, t: f64, depth: u32, tol: f64) -> Result<NestedFrequency> {
    if depth == 0 {
        return Err(Error::Parameter("nesting depth must be >= 1".into()));
    }
    let mut u = Complex64::new(delta, 0.0);
    let mut history = vec![u];
    // Near zeros of f the map u ↦ Δ − (i/4)Γ_u(t) is expanding; once the shift is O(Δ) the
    // iterate has left the weak-coupling regime and further kernels are not meaningful.
    let escaped = |u: Complex64| !u.is_finite() || (u - delta).norm() > delta.abs();
    for k in 1..=depth {
        u = delta - 0.25 * I * bath::gamma_finite(spec, u, t, tol)?;
        if escaped(u) {
            return Ok(NestedFrequency {
                frequency: RenormalizedFrequency {
                    value: u,
                    time: t,
                    branch_order: k,
                },
                history,
                residual: f64::NAN,
                escaped_at: Some(k),
            });
        }
        history.push(u);
    }
    let next = delta - 0.25 * I * bath::gamma_finite(spec, u, t, tol)?;
    Ok(NestedFrequency {
        frequency: RenormalizedFrequency {
            value: u,
            time: t,
            branch_order: depth,
        },
        history,
        residual: (next - u).norm(),
        escaped_at: None,
    })
}

/// Deepest local minimum of |f| on [lo, hi]: scan at step `dt`, then golden-section refine.
pub fn deepest_minimum<F: Fn(f64) -> f64 + Sync>(f_abs: F, lo: f64, hi: f64, dt: f64) -> (f64, f64) {
    let n = ((hi - lo) / dt).ceil() as usize;
    let samples: Vec<(f64, f64)> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let t = (lo + k as f64 * dt).min(hi);
            (t, f_abs(t))
        })
        .collect();
    refine_minimum(f_abs, &samples)
}

/// Golden-section refinement around the smallest of `samples` (t ascending).
fn refine_minimum<F: Fn(f64) -> f64>(f_abs: F, samples: &[(f64, f64)]) -> (f64, f64) {
    let n = samples.len() - 1;
    let (k, _) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    let (mut a, mut b) = (samples[k.saturating_sub(1)].0, samples[(k + 1).min(n)].0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f_abs(c), f_abs(d));
    while b - a > 1e-10 * b.abs().max(1.0) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f_abs(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f_abs(d);
        }
    }
    let t = 0.5 * (a + b);
    let v = f_abs(t);
    if v <= samples[k].1 {
        (t, v)
    } else {
        samples[k]
    }
}

impl SpectralOracle {
    /// [`deepest_minimum`] of |f| with the scan done by phase recurrence.
    pub fn deepest_minimum(&self, lo: f64, hi: f64, dt: f64) -> (f64, f64) {
        let n = ((hi - lo) / dt).ceil() as usize;
        let h = (hi - lo) / n as f64;
        let samples: Vec<(f64, f64)> = self
            .sample_uniform(lo, h, n + 1)
            .iter()
            .enumerate()
            .map(|(k, v)| (lo + k as f64 * h, v.0.norm()))
            .collect();
        refine_minimum(|t| self.f(t).norm(), &samples)
    }
}
