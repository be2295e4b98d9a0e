//! Bosonic bath: spectral density J_ω = 2πλ² ω^s ω_c^{1−s} e^{−ω/ω_c}, correlation
//! function C(t), and the half-sided transforms Γ_ω(t) = ∫₀ᵗ C(τ)e^{iωτ}dτ, Γ_ω = Γ_ω(∞).
//!
//! Units: the qubit splitting Δ sets the frequency scale.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOpts};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default absolute tolerance for kernel evaluations.
pub const KERNEL_TOL: f64 = 1e-10;
/// Relaxed tolerance used inside ODE right-hand sides.
pub const RHS_TOL: f64 = 1e-8;

/// Rays whose exponential decay rate falls below this use direct real-axis quadrature.
const MIN_RAY_DECAY: f64 = 0.05;
/// Euler–Maclaurin switch-over index for the thermal image sum.
const THERMAL_TERMS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub lambda_sq: f64,
    pub s: f64,
    pub omega_c: f64,
    /// Inverse temperature; `f64::INFINITY` is T = 0.
    pub beta: f64,
}

impl BathSpec {
    pub fn new(lambda_sq: f64, s: f64, omega_c: f64, beta: f64) -> Result<Self> {
        let b = Self {
            lambda_sq,
            s,
            omega_c,
            beta,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn zero_temperature(lambda_sq: f64, s: f64, omega_c: f64) -> Result<Self> {
        Self::new(lambda_sq, s, omega_c, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_sq > 0.0 && self.lambda_sq.is_finite()) {
            return Err(Error::Parameter(format!("lambda_sq must be > 0, got {}", self.lambda_sq)));
        }
        if !(self.s > 0.0 && self.s <= 4.0) {
            return Err(Error::Parameter(format!("s must lie in (0, 4], got {}", self.s)));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::Parameter(format!("omega_c must be > 0, got {}", self.omega_c)));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(Error::Parameter(format!("beta must be > 0 or inf, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta.is_infinite()
    }

    pub fn with_lambda_sq(&self, lambda_sq: f64) -> Self {
        Self { lambda_sq, ..*self }
    }

    /// True when J_Δ/4 is not small compared with Δ (ratio above 0.1).
    pub fn weak_coupling_advisory(&self, delta: f64) -> bool {
        spectral_density(self, delta) / 4.0 > 0.1 * delta.abs()
    }

    /// Prefactor 2λ²ω_c^{1−s}Γ(s+1) shared by all closed forms.
    fn amplitude(&self) -> f64 {
        2.0 * self.lambda_sq * self.omega_c.powf(1.0 - self.s) * gamma(self.s + 1.0)
    }
}

/// Zero-temperature density J̃_ω (zero for ω ≤ 0).
pub fn spectral_density_tilde(spec: &BathSpec, omega: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    2.0 * PI * spec.lambda_sq * omega.powf(spec.s) * spec.omega_c.powf(1.0 - spec.s) * (-omega / spec.omega_c).exp()
}

/// J_ω including detailed balance at finite β.
pub fn spectral_density(spec: &BathSpec, omega: f64) -> f64 {
    if spec.is_zero_temperature() {
        return spectral_density_tilde(spec, omega);
    }
    let b = spec.beta;
    if omega == 0.0 {
        // J̃_ω/(1 − e^{−βω}) ~ ω^{s−1}/β
        return if spec.s > 1.0 {
            0.0
        } else if spec.s == 1.0 {
            2.0 * PI * spec.lambda_sq / b
        } else {
            f64::INFINITY
        };
    }
    if omega > 0.0 {
        spectral_density_tilde(spec, omega) / (-(-b * omega).exp_m1())
    } else {
        let w = -omega;
        (-b * w).exp() * spectral_density_tilde(spec, w) / (-(-b * w).exp_m1())
    }
}

/// Analytic continuation of the zero-T density off the positive axis,
/// 2πλ² ω^s ω_c^{1−s} e^{−ω/ω_c} with the principal power.
pub fn spectral_density_continued(spec: &BathSpec, omega: Complex64) -> Complex64 {
    2.0 * PI * spec.lambda_sq * spec.omega_c.powf(1.0 - spec.s) * omega.powf(spec.s) * (-omega / spec.omega_c).exp()
}

/// C(τ) at complex argument in the closed half-strip used by the contour rays.
///
/// Zero T: 2λ²ω_c²Γ(s+1)(1 + iω_cτ)^{−(s+1)}. The principal branch of the power puts the
/// cut of the continuation on iτ ∈ (−∞, −1/ω_c], i.e. the branch point sits at τ = i/ω_c and
/// the cut runs up the positive imaginary τ axis; real τ ≥ 0 is continuous with the real-time
/// closed form.
///
/// Finite β: image sum over Bose occupations, Σ_k (1/ω_c + kβ ± iτ)^{−(s+1)}, with the tail
/// beyond k = 32 summed by Euler–Maclaurin.
pub fn correlation_complex(spec: &BathSpec, tau: Complex64) -> Complex64 {
    let p = spec.s + 1.0;
    if spec.is_zero_temperature() {
        let c0 = 2.0 * spec.lambda_sq * spec.omega_c * spec.omega_c * gamma(p);
        return c0 * (1.0 + I * spec.omega_c * tau).powf(-p);
    }
    let a0 = 1.0 / spec.omega_c;
    let em = thermal_image_sum(a0 + I * tau, spec.beta, p, 0)
        + thermal_image_sum(a0 - I * tau, spec.beta, p, 1);
    spec.amplitude() * em
}

/// Σ_{k ≥ k0} (a + kβ)^{−p}.
fn thermal_image_sum(a: Complex64, beta: f64, p: f64, k0: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in k0..THERMAL_TERMS {
        acc += (a + k as f64 * beta).powf(-p);
    }
    let z = a + THERMAL_TERMS as f64 * beta;
    let g = z.powf(-p);
    let integral = z.powf(1.0 - p) / (beta * (p - 1.0));
    let d1 = -p * beta * z.powf(-p - 1.0);
    let d3 = -p * (p + 1.0) * (p + 2.0) * beta.powi(3) * z.powf(-p - 3.0);
    let d5 = -p * (p + 1.0) * (p + 2.0) * (p + 3.0) * (p + 4.0) * beta.powi(5) * z.powf(-p - 5.0);
    acc + integral + 0.5 * g - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0
}

/// C(t) for real t ≥ 0.
///
/// Zero T uses the closed form; finite β integrates the Fourier representation
/// (1/π)∫J̃_ω[coth(βω/2)cos ωt − i sin ωt]dω.
pub fn bath_correlation(spec: &BathSpec, t: f64) -> Result<Complex64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::Domain(format!("correlation requested at t = {t} < 0")));
    }
    if spec.is_zero_temperature() {
        return Ok(correlation_complex(spec, Complex64::new(t, 0.0)));
    }
    correlation_fourier(spec, t, KERNEL_TOL)
}

fn correlation_fourier(spec: &BathSpec, t: f64, tol: f64) -> Result<Complex64> {
    let wc = spec.omega_c;
    let b = spec.beta;
    let f = |w: f64| {
        if w <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let j = spectral_density_tilde(spec, w);
        let coth = 1.0 / (0.5 * b * w).tanh();
        Complex64::new(j * coth * (w * t).cos(), -j * (w * t).sin()) / PI
    };
    // Geometric breakpoints resolve the integrable ω^{s−1} endpoint behaviour.
    let mut pts = vec![0.0];
    let mut x = 1e-10 * wc;
    while x < wc {
        pts.push(x);
        x *= 10.0;
    }
    let period = if t > 0.0 { 2.0 * PI / t } else { wc };
    let mut w = wc;
    let top = 60.0 * wc;
    let step = period.max(wc / 8.0).min(wc);
    while w < top {
        pts.push(w);
        w += step;
    }
    pts.push(top);
    let opts = QuadOpts {
        abs_tol: tol,
        rel_tol: 0.0,
        max_panels: 20_000,
    };
    Ok(quad::adaptive_points(f, &pts, opts)
        .map_err(|e| e.within("finite-temperature correlation"))?
        .value)
}

/// Orientation of a contour ray τ = t₀ + r e^{iφ}.
fn ray_angle(omega: Complex64) -> f64 {
    if omega.re >= 0.0 {
        FRAC_PI_4
    } else {
        -FRAC_PI_4
    }
}

fn decay_rate(omega: Complex64, phi: f64) -> f64 {
    (omega * Complex64::from_polar(1.0, phi)).im
}

/// ∫_{ray} C(τ)e^{iωτ}(iτ)^m dτ along τ = t₀ + r e^{iφ}, r ∈ [0, ∞).
fn ray_integral(spec: &BathSpec, omega: Complex64, t0: f64, phi: f64, m: i32, tol: f64) -> Result<Complex64> {
    let kappa = decay_rate(omega, phi);
    if kappa <= 0.0 {
        return Err(Error::Domain(format!("ray at angle {phi} does not decay for omega = {omega}")));
    }
    let e = Complex64::from_polar(1.0, phi);
    let phase0 = (I * omega * t0).exp();
    let f = |r: f64| {
        let tau = t0 + r * e;
        let mut v = correlation_complex(spec, tau) * (I * omega * r * e).exp() * e;
        if m > 0 {
            v *= (I * tau).powi(m);
        }
        v
    };
    let scale = (1.0 / kappa).min(50.0 / spec.omega_c.min(1.0)).max(1.0 / spec.omega_c);
    // Roundoff floor: a large e^{iωt₀} can ask for more than double precision of the ray.
    let floor = 1e-14 * correlation_complex(spec, Complex64::new(t0, 0.0)).norm() * (1.0 + t0).powi(m) / kappa;
    let opts = QuadOpts {
        abs_tol: (tol / phase0.norm().max(1e-300)).max(floor),
        rel_tol: 1e-13,
        max_panels: 4000,
    };
    let q = quad::semi_infinite(f, 0.0, scale, opts)?;
    Ok(q.value * phase0)
}

/// Direct real-axis quadrature of ∫₀ᵗ C(τ)e^{iωτ}(iτ)^m dτ.
fn direct_integral(spec: &BathSpec, omega: Complex64, t: f64, m: i32, tol: f64) -> Result<Complex64> {
    let f = |tau: f64| {
        let mut v = correlation_complex(spec, Complex64::new(tau, 0.0)) * (I * omega * tau).exp();
        if m > 0 {
            v *= (I * tau).powi(m);
        }
        v
    };
    let tc = 1.0 / spec.omega_c;
    let mut pts = vec![0.0];
    for k in [0.25, 1.0, 4.0] {
        if k * tc < t {
            pts.push(k * tc);
        }
    }
    let step = (2.0 * PI / omega.norm().max(1e-3)).min(4.0).max(tc);
    let mut x = *pts.last().unwrap() + step;
    while x < t {
        pts.push(x);
        x += step;
    }
    pts.push(t);
    let opts = QuadOpts {
        abs_tol: tol,
        rel_tol: 1e-13,
        max_panels: 20_000,
    };
    Ok(quad::adaptive_points(f, &pts, opts)?.value)
}

/// ∫₀ᵗ C(τ)e^{iωτ}(iτ)^m dτ for any complex ω (the integral is entire in ω).
fn finite_moment(spec: &BathSpec, omega: Complex64, t: f64, m: i32, tol: f64) -> Result<Complex64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::Domain(format!("kernel requested at t = {t} < 0")));
    }
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if !omega.re.is_finite() || !omega.im.is_finite() {
        return Err(Error::Domain(format!("non-finite frequency {omega}")));
    }
    if m == 0 && omega == Complex64::new(0.0, 0.0) && spec.is_zero_temperature() {
        return Ok(j0_closed(spec, t));
    }
    // Short windows are cheaper and exact on the real axis.
    let short = t * spec.omega_c.max(omega.norm()) <= 8.0;
    let (phi, kappa) = [FRAC_PI_4, -FRAC_PI_4]
        .into_iter()
        .map(|p| (p, decay_rate(omega, p)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if short || kappa < MIN_RAY_DECAY {
        return direct_integral(spec, omega, t, m, tol);
    }
    // Both rays lie in the sector where C is analytic; their difference is the segment [0, t].
    let from0 = ray_integral(spec, omega, 0.0, phi, m, 0.5 * tol)?;
    let from_t = ray_integral(spec, omega, t, phi, m, 0.5 * tol)?;
    Ok(from0 - from_t)
}

/// Γ_ω(t) = ∫₀ᵗ C(τ)e^{iωτ}dτ.
pub fn gamma_finite(spec: &BathSpec, omega: Complex64, t: f64, tol: f64) -> Result<Complex64> {
    finite_moment(spec, omega, t, 0, tol).map_err(|e| e.within("gamma_finite"))
}

/// ∂_ωΓ_ω(t) = ∫₀ᵗ iτ C(τ)e^{iωτ}dτ.
pub fn gamma_finite_derivative(spec: &BathSpec, omega: Complex64, t: f64, tol: f64) -> Result<Complex64> {
    finite_moment(spec, omega, t, 1, tol).map_err(|e| e.within("gamma_finite_derivative"))
}

/// J₀(t) = ∫₀ᵗ C at zero T: (2λ²ω_cΓ(s+1)/(is))[1 − (1+iω_ct)^{−s}].
fn j0_closed(spec: &BathSpec, t: f64) -> Complex64 {
    let c = 2.0 * spec.lambda_sq * spec.omega_c * gamma(spec.s + 1.0) / (I * spec.s);
    c * (1.0 - (1.0 + I * spec.omega_c * t).powf(-spec.s))
}

/// Zero-frequency component J₀(t) ≡ Γ₀(t).
pub fn j0_finite(spec: &BathSpec, t: f64, tol: f64) -> Result<Complex64> {
    gamma_finite(spec, Complex64::new(0.0, 0.0), t, tol)
}

/// S₀(t) ≡ Im J₀(t); the zero-frequency Lamb-shift kernel entering the biased-qubit generator.
pub fn s0_finite(spec: &BathSpec, t: f64, tol: f64) -> Result<f64> {
    Ok(j0_finite(spec, t, tol)?.im)
}

/// Half-sided transform continued from the upper half-plane along rotated rays:
/// for Re ω ≥ 0 the ray runs at +π/4, otherwise at −π/4. For Im ω ≥ 0 this is Γ_ω itself;
/// for Re ω > 0, Im ω < 0 it is the continuation through the positive real axis
/// (the second sheet of the Cauchy form).
pub fn gamma_continued(spec: &BathSpec, omega: Complex64, tol: f64) -> Result<Complex64> {
    if omega == Complex64::new(0.0, 0.0) && spec.is_zero_temperature() {
        // Γ₀ = lim J₀(t) = −i·2λ²ω_cΓ(s): J₀ = 0, S₀ = −2λ²ω_cΓ(s).
        return Ok(Complex64::new(0.0, -2.0 * spec.lambda_sq * spec.omega_c * gamma(spec.s)));
    }
    ray_integral(spec, omega, 0.0, ray_angle(omega), 0, tol).map_err(|e| e.within("gamma"))
}

/// Γ_ω = J_ω + iS_ω for Im ω ≥ 0; on the real axis the boundary value from above.
pub fn gamma_asymptotic(spec: &BathSpec, omega: Complex64, tol: f64) -> Result<Complex64> {
    if omega.im < 0.0 {
        return Err(Error::Domain(format!(
            "asymptotic kernel requires Im omega >= 0, got {omega}; use gamma_continued"
        )));
    }
    gamma_continued(spec, omega, tol)
}

/// Boundary value of the Cauchy form on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

/// Γ^±_ω. `Above` uses the rotated ray; `Below` is assembled independently from the
/// principal-value Stieltjes integral S_ω = (1/π) PV∫ J_ν/(ω−ν)dν as −J_ω + iS_ω.
pub fn gamma_boundary(spec: &BathSpec, omega: f64, side: Side, tol: f64) -> Result<Complex64> {
    match side {
        Side::Above => gamma_asymptotic(spec, Complex64::new(omega, 0.0), tol),
        Side::Below => {
            let s = lamb_shift_pv(spec, omega, tol)?;
            Ok(Complex64::new(-spectral_density(spec, omega), s))
        }
    }
}

/// S_ω from the principal-value integral of J (independent of the ray construction).
pub fn lamb_shift_pv(spec: &BathSpec, omega: f64, tol: f64) -> Result<f64> {
    let wc = spec.omega_c;
    let lo = if spec.is_zero_temperature() { 0.0 } else { -60.0 * wc };
    let hi = 60.0 * wc + 2.0 * omega.abs();
    let opts = QuadOpts {
        abs_tol: tol,
        rel_tol: 1e-12,
        max_panels: 20_000,
    };
    let g = |nu: f64| spectral_density(spec, nu);
    let f = |nu: f64| Complex64::new(g(nu) / (omega - nu), 0.0);
    let graded = |a: f64, b: f64| {
        // breakpoints geometric around ν = 0, where J behaves like |ν|^{s} or |ν|^{s−1}
        let mut pts = vec![a];
        let mut x = 1e-10 * wc;
        while x < 100.0 * wc {
            for y in [-x, x] {
                if y > a && y < b {
                    pts.push(y);
                }
            }
            x *= 4.0;
        }
        if a < 0.0 && b > 0.0 {
            pts.push(0.0);
        }
        pts.push(b);
        pts.sort_by(f64::total_cmp);
        pts
    };
    if omega <= lo {
        return Ok(quad::adaptive_points(f, &graded(lo, hi), opts)?.value.re / PI);
    }
    let a = (omega - lo).min(hi - omega).min(0.5 * wc);
    // Pair ν = ω ± x to cancel the pole.
    let core = quad::adaptive_points(
        |x| {
            if x == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new((g(omega - x) - g(omega + x)) / x, 0.0)
        },
        &graded(0.0, a),
        opts,
    )?;
    let left = quad::adaptive_points(f, &graded(lo, omega - a), opts)?;
    let right = quad::adaptive_points(f, &graded(omega + a, hi), opts)?;
    Ok((core.value.re + left.value.re + right.value.re) / PI)
}

/// ∂_ωΓ_ω along the same rays: ∫₀^∞ iτ C(τ)e^{iωτ}dτ (continued as in [`gamma_continued`]).
pub fn gamma_derivative_continued(spec: &BathSpec, omega: Complex64, tol: f64) -> Result<Complex64> {
    ray_integral(spec, omega, 0.0, ray_angle(omega), 1, tol).map_err(|e| e.within("gamma derivative"))
}

/// ∂_ωS_ω for real ω, Im ∫₀^∞ iτC(τ)e^{iωτ}dτ.
pub fn lamb_shift_derivative(spec: &BathSpec, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Domain("Lamb-shift derivative is singular at omega = 0 for s <= 1".into()));
    }
    Ok(gamma_derivative_continued(spec, Complex64::new(omega, 0.0), KERNEL_TOL * 1e-2)?.im)
}

/// Which kernel a cache entry holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    GammaFinite,
    GammaFiniteDerivative,
    GammaAsymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    kind: KernelKind,
    re: u64,
    im: u64,
    t: u64,
}

/// Memoized kernel values keyed on the exact bit patterns of (ω, t), so a hit never
/// returns a value computed for a different input. Interior mutability behind a mutex
/// keeps it shareable between worker threads.
#[derive(Debug)]
pub struct KernelCache {
    pub spec: BathSpec,
    pub tolerance: f64,
    entries: Mutex<HashMap<Key, (Complex64, f64)>>,
}

impl KernelCache {
    pub fn new(spec: BathSpec, tolerance: f64) -> Self {
        Self {
            spec,
            tolerance,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, kind: KernelKind, omega: Complex64, t: f64) -> Result<Complex64> {
        let key = Key {
            kind,
            re: omega.re.to_bits(),
            im: omega.im.to_bits(),
            t: t.to_bits(),
        };
        if let Some(&(v, _)) = self.entries.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let v = match kind {
            KernelKind::GammaFinite => gamma_finite(&self.spec, omega, t, self.tolerance)?,
            KernelKind::GammaFiniteDerivative => gamma_finite_derivative(&self.spec, omega, t, self.tolerance)?,
            KernelKind::GammaAsymptotic => gamma_asymptotic(&self.spec, omega, self.tolerance)?,
        };
        self.entries.lock().unwrap().insert(key, (v, self.tolerance));
        Ok(v)
    }

    /// Stored (value, error bound) for an exact key, if present.
    pub fn lookup(&self, kind: KernelKind, omega: Complex64, t: f64) -> Option<(Complex64, f64)> {
        let key = Key {
            kind,
            re: omega.re.to_bits(),
            im: omega.im.to_bits(),
            t: t.to_bits(),
        };
        self.entries.lock().unwrap().get(&key).copied()
    }
}
