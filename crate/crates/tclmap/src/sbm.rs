//! Weak-coupling spin–boson map at T = 0 (unbiased coupling A = σ_x/2): Davies relaxation,
//! the nonsecular pole+shell term e^{−J_Δt/4}X(t), and the common Khalfin tail C(t)/4Δ².

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::bath::{self, BathSpec};
use crate::error::{Error, Result};
use crate::linalg::Superoperator;
use crate::quad::{self, QuadOpts};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SbmMapParams {
    pub delta: f64,
    /// Δ̃ = Δ + (S_Δ − S_{−Δ})/4.
    pub delta_tilde: f64,
    pub j_delta: f64,
    /// atan[(S_Δ − S_{−Δ})/J_Δ].
    pub theta: f64,
    /// |Γ_Δ + Γ*_{−Δ}|/(4Δ).
    pub x0: f64,
    /// −π(s+1)/2.
    pub phi_c: f64,
    /// −(1/4)∂_ωS_ω at −Δ.
    pub b_inf: f64,
}

impl SbmMapParams {
    pub fn new(spec: &BathSpec, delta: f64, tol: f64) -> Result<Self> {
        if !spec.is_zero_temperature() {
            return Err(Error::Parameter("closed-form spin-boson map is derived at T = 0".into()));
        }
        let gp = bath::gamma_asymptotic(spec, Complex64::new(delta, 0.0), tol)?;
        let gm = bath::gamma_asymptotic(spec, Complex64::new(-delta, 0.0), tol)?;
        let ds = gp.im - gm.im;
        Ok(Self {
            delta,
            delta_tilde: delta + ds / 4.0,
            j_delta: gp.re,
            theta: (ds / gp.re).atan(),
            x0: (gp + gm.conj()).norm() / (4.0 * delta),
            phi_c: -PI * (spec.s + 1.0) / 2.0,
            b_inf: -0.25 * bath::lamb_shift_derivative(spec, -delta)?,
        })
    }

    /// a = Δ̃ − iJ_Δ/4.
    pub fn a(&self) -> Complex64 {
        Complex64::new(self.delta_tilde, -0.25 * self.j_delta)
    }

    pub fn t2(&self) -> f64 {
        4.0 / self.j_delta
    }

    /// X(t) = X₀ sin(Δ̃t − θ).
    pub fn x(&self, t: f64) -> f64 {
        self.x0 * (self.delta_tilde * t - self.theta).sin()
    }

    fn tail(&self, spec: &BathSpec, t: f64) -> Result<Complex64> {
        Ok(bath::bath_correlation(spec, t)? / (4.0 * self.delta * self.delta))
    }

    /// e^{−iat} + C(t)/4Δ².
    pub fn phi_12_12(&self, spec: &BathSpec, t: f64) -> Result<Complex64> {
        Ok((-I * self.a() * t).exp() + self.tail(spec, t)?)
    }

    /// e^{−J_Δt/4}X(t) + C(t)/4Δ².
    pub fn phi_21_12(&self, spec: &BathSpec, t: f64) -> Result<Complex64> {
        Ok((-0.25 * self.j_delta * t).exp() * self.x(t) + self.tail(spec, t)?)
    }

    /// Markovian-coefficient Bloch–Redfield prediction e^{−J_Δt/4}X₀e^{iθ}sin(Δ̃t).
    pub fn bloch_redfield_offdiagonal(&self, t: f64) -> Complex64 {
        (-0.25 * self.j_delta * t).exp() * self.x0 * Complex64::from_polar(1.0, self.theta) * (self.delta_tilde * t).sin()
    }
}

pub fn phi_12_12(spec: &BathSpec, delta: f64, t: f64) -> Result<Complex64> {
    SbmMapParams::new(spec, delta, bath::KERNEL_TOL)?.phi_12_12(spec, t)
}

pub fn phi_21_12(spec: &BathSpec, delta: f64, t: f64) -> Result<Complex64> {
    SbmMapParams::new(spec, delta, bath::KERNEL_TOL)?.phi_21_12(spec, t)
}

/// Bloch–Redfield nonsecular element and its projection e^{−iθ}Φ^BR onto the maximal quadrature.
pub fn bloch_redfield_offdiagonal(spec: &BathSpec, delta: f64, t: f64) -> Result<(Complex64, f64)> {
    let p = SbmMapParams::new(spec, delta, bath::KERNEL_TOL)?;
    let v = p.bloch_redfield_offdiagonal(t);
    Ok((v, (Complex64::from_polar(1.0, -p.theta) * v).re))
}

/// How the Khalfin tail enters the coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailForm {
    /// Element-level C(t)/4Δ² per entry, conjugated where the entry is.
    Elements,
    /// (|C(t)|/2Δ²)·𝒫_coh with the asymptotic phase φ_c.
    Boxed,
}

/// Generalized amplitude damping with γ = 1 − e^{−J_Δt/2}, p = B∞, Davies coherence phase,
/// plus the nonsecular swap and the Khalfin tail.
pub fn closed_form_map(params: &SbmMapParams, spec: &BathSpec, t: f64, form: TailForm) -> Result<Superoperator> {
    let mut m = Superoperator::zeros(2);
    let gamma = 1.0 - (-0.5 * params.j_delta * t).exp();
    let p = params.b_inf;
    let c = |x: f64| Complex64::new(x, 0.0);
    m.set(0, 0, 0, 0, c(1.0 - gamma + gamma * p));
    m.set(0, 0, 1, 1, c(gamma * p));
    m.set(1, 1, 0, 0, c(gamma * (1.0 - p)));
    m.set(1, 1, 1, 1, c(1.0 - gamma * p));
    let diag = (-I * params.a() * t).exp();
    let swap = c((-0.25 * params.j_delta * t).exp() * params.x(t));
    let (t12_12, t21_12) = match form {
        TailForm::Elements => {
            let tl = params.tail(spec, t)?;
            (tl, tl)
        }
        TailForm::Boxed => {
            let mag = bath::bath_correlation(spec, t)?.norm() / (2.0 * params.delta * params.delta);
            // 𝒫_coh: ρ₁₂, ρ₂₁ → (e^{iφ_c}ρ₁₂ + e^{−iφ_c}ρ₂₁)/2 in both coherences
            let v = 0.5 * mag * Complex64::from_polar(1.0, params.phi_c);
            (v, v)
        }
    };
    m.set(0, 1, 0, 1, diag + t12_12);
    m.set(1, 0, 1, 0, (diag + t12_12).conj());
    m.set(1, 0, 0, 1, swap + t21_12);
    m.set(0, 1, 1, 0, (swap + t21_12).conj());
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationMode {
    /// Davies block + B∞(1, 1; −1, −1).
    Asymptotic,
    /// Disentangled block with A(t), B(t) from the finite-time kernels.
    Full,
}

/// Population block [[Φ₁₁,₁₁, Φ₁₁,₂₂], [Φ₂₂,₁₁, Φ₂₂,₂₂]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationBlock {
    pub m: [[f64; 2]; 2],
    pub a: f64,
    pub b: f64,
}

/// Population-sector pole a = Δ − iJ_Δ/4 (bare splitting; see [`population_b`]).
fn population_pole(params: &SbmMapParams) -> Complex64 {
    Complex64::new(params.delta, -0.25 * params.j_delta)
}

/// B(t) = (1/J_Δ) Re[Γ_{−a}(t) − e^{−J_Δt/2}Γ_{−(a+iJ_Δ/2)}(t)].
///
/// The pole uses the bare Δ: B(t) is a nonoscillatory O(λ²) amplitude, and with Δ̃ the
/// limit (1/J)Re Γ_{−a} picks up an extra O(λ²) relative shift away from B∞.
pub fn population_b(params: &SbmMapParams, spec: &BathSpec, t: f64, tol: f64) -> Result<f64> {
    let a = population_pole(params);
    let j = params.j_delta;
    let g1 = bath::gamma_finite(spec, -a, t, tol)?;
    let g2 = bath::gamma_finite(spec, -(a + 0.5 * I * j), t, tol)?;
    Ok((g1 - (-0.5 * j * t).exp() * g2).re / j)
}

/// A(t) = (J t/2)e^{−J t/2} + B(t) − (e^{−J t/2}/2) Re[e^{iat}Σ_a(t) + e^{−iat}Σ_{−a}(t)].
pub fn population_a(params: &SbmMapParams, spec: &BathSpec, t: f64, tol: f64) -> Result<f64> {
    let a = population_pole(params);
    let j = params.j_delta;
    let b = population_b(params, spec, t, tol)?;
    let e = (-0.5 * j * t).exp();
    let s = (I * a * t).exp() * diagonal_kernel_sigma(spec, a, t, tol)? + (-I * a * t).exp() * diagonal_kernel_sigma(spec, -a, t, tol)?;
    Ok(0.5 * j * t * e + b - 0.5 * e * s.re)
}

pub fn population_map(params: &SbmMapParams, spec: &BathSpec, t: f64, mode: PopulationMode, tol: f64) -> Result<PopulationBlock> {
    let e = (-0.5 * params.j_delta * t).exp();
    let (a, b) = match mode {
        PopulationMode::Asymptotic => (params.b_inf, params.b_inf),
        PopulationMode::Full => (population_a(params, spec, t, tol)?, population_b(params, spec, t, tol)?),
    };
    Ok(PopulationBlock {
        m: [[e + a, b], [1.0 - e - a, 1.0 - b]],
        a,
        b,
    })
}

/// Σ_z(t) = ∫₀ᵗ τ C(t−τ)e^{−izτ}dτ = e^{−izt}[tΓ_z(t) + i∂_zΓ_z(t)].
pub fn diagonal_kernel_sigma(spec: &BathSpec, z: Complex64, t: f64, tol: f64) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let g = bath::gamma_finite(spec, z, t, tol)?;
    let dg = bath::gamma_finite_derivative(spec, z, t, tol)?;
    Ok((-I * z * t).exp() * (t * g + I * dg))
}

/// Second-order pole part e^{−izt}[tΓ_z + i∂_ωΓ|_z] with the asymptotic kernel continued to z.
pub fn diagonal_kernel_sigma_pole(spec: &BathSpec, z: Complex64, t: f64, tol: f64) -> Result<Complex64> {
    let g = bath::gamma_continued(spec, z, tol)?;
    let dg = bath::gamma_derivative_continued(spec, z, tol)?;
    Ok((-I * z * t).exp() * (t * g + I * dg))
}

/// Branch-cut part −(1/π)∫₀^∞ e^{−iωt} J_ω/(z − ω)² dω (jump Γ⁺ − Γ⁻ = 2J_ω at T = 0).
pub fn diagonal_kernel_sigma_cut(spec: &BathSpec, z: Complex64, t: f64, tol: f64) -> Result<Complex64> {
    let wc = spec.omega_c;
    let w_max = 60.0 * wc;
    let mut pts = vec![0.0];
    let mut x = 1e-12;
    while x < 0.5 {
        pts.push(x);
        x *= 4.0;
    }
    let step = (2.0 / t.max(1.0)).min(0.25);
    let mut w = 0.5;
    while w < w_max {
        pts.push(w);
        w += step;
    }
    pts.push(w_max);
    let zr = z.re;
    let halo = 10.0 * z.im.abs().max(1e-3);
    pts.extend([zr - halo, zr, zr + halo].into_iter().filter(|&p| p > 0.0 && p < w_max));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let opts = QuadOpts {
        abs_tol: tol,
        rel_tol: 0.0,
        max_panels: 200_000,
    };
    let q = quad::adaptive_points(
        |w| Complex64::from_polar(bath::spectral_density(spec, w), -w * t) / (z - w).powi(2),
        &pts,
        opts,
    )?;
    Ok(-q.value / PI)
}

/// Σ^sbm_a(t) = Σ_a(t) + e^{−J_Δt/2}[Σ_{−a}(t)]*.
pub fn diagonal_kernel_sigma_sbm(params: &SbmMapParams, spec: &BathSpec, t: f64, tol: f64) -> Result<Complex64> {
    let a = params.a();
    Ok(diagonal_kernel_sigma(spec, a, t, tol)? + (-0.5 * params.j_delta * t).exp() * diagonal_kernel_sigma(spec, -a, t, tol)?.conj())
}

/// Z_{x+iy}(t) = ∫₀ᵗ C(t−τ) (sin xτ / x) e^{yτ} dτ through finite-time transforms.
pub fn offdiagonal_kernel_z(spec: &BathSpec, x: f64, y: f64, t: f64, tol: f64) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if x.abs() < 1e-8 {
        // sin(xτ)/x → τ
        let w = Complex64::new(0.0, y);
        let g = bath::gamma_finite(spec, w, t, tol)?;
        let dg = bath::gamma_finite_derivative(spec, w, t, tol)?;
        return Ok((y * t).exp() * (t * g + I * dg));
    }
    let g1 = bath::gamma_finite(spec, Complex64::new(-x, y), t, tol)?;
    let g2 = bath::gamma_finite(spec, Complex64::new(x, y), t, tol)?;
    let e1 = Complex64::new(y * t, x * t).exp();
    let e2 = Complex64::new(y * t, -x * t).exp();
    Ok((e1 * g1 - e2 * g2) / (2.0 * I * x))
}

/// (1/4)[Z_a(t) + e^{−J_Δt/2}Z_{−a}(t)*], the memory form of Φ₂₁,₁₂.
pub fn phi_21_12_from_z(params: &SbmMapParams, spec: &BathSpec, t: f64, tol: f64) -> Result<Complex64> {
    let a = params.a();
    let za = offdiagonal_kernel_z(spec, a.re, a.im, t, tol)?;
    let zm = offdiagonal_kernel_z(spec, -a.re, -a.im, t, tol)?;
    Ok(0.25 * (za + (-0.5 * params.j_delta * t).exp() * zm.conj()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ohmic() -> BathSpec {
        BathSpec::zero_temperature(0.025, 1.0, 4.0).unwrap()
    }

    #[test]
    fn map_columns_and_origin() {
        let b = ohmic();
        let p = SbmMapParams::new(&b, 1.0, 1e-11).unwrap();
        for form in [TailForm::Elements, TailForm::Boxed] {
            for t in [0.0, 1.0, 50.0, 400.0] {
                let m = closed_form_map(&p, &b, t, form).unwrap();
                assert!(m.trace_defect(1.0) < 1e-14);
                assert!(m.hermiticity_defect() < 1e-15);
            }
        }
        let m0 = closed_form_map(&p, &b, 0.0, TailForm::Elements).unwrap();
        let bound = 3.0 * 0.025 * 16.0;
        assert!(m0.sub(&Superoperator::identity(2)).frobenius() <= bound);
    }

    #[test]
    fn x_is_consistent_with_its_components() {
        let b = ohmic();
        let p = SbmMapParams::new(&b, 1.0, 1e-11).unwrap();
        let gp = bath::gamma_asymptotic(&b, Complex64::new(1.0, 0.0), 1e-11).unwrap();
        let gm = bath::gamma_asymptotic(&b, Complex64::new(-1.0, 0.0), 1e-11).unwrap();
        for t in [0.3, 7.0, 40.0] {
            let wt = p.delta_tilde * t;
            let direct = (gp.re * wt.sin() - (gp.im - gm.im) * wt.cos()) / 4.0;
            assert!((direct - p.x(t)).abs() < 1e-14);
        }
        // BR projected quadrature vanishes at Δ̃t = kπ
        let t = PI / p.delta_tilde;
        let (_, q) = bloch_redfield_offdiagonal(&b, 1.0, t).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn sigma_identity_against_direct_quadrature() {
        let b = BathSpec::zero_temperature(0.01, 1.0 / 3.0, 4.0).unwrap();
        let z = Complex64::new(0.98, -0.03);
        let t = 6.0;
        let direct = quad::adaptive(
            |tau| tau * bath::correlation_complex(&b, Complex64::new(t - tau, 0.0)) * (-I * z * tau).exp(),
            0.0,
            t,
            QuadOpts::abs(1e-13),
        )
        .unwrap()
        .value;
        let s = diagonal_kernel_sigma(&b, z, t, 1e-13).unwrap();
        assert!((s - direct).norm() < 1e-11, "{s} {direct}");
    }

    #[test]
    fn z_kernel_against_direct_quadrature() {
        let b = ohmic();
        let t = 5.0;
        for (x, y) in [(0.97, -0.03), (-0.97, 0.03), (0.0, 0.02)] {
            let direct = quad::adaptive(
                |tau| {
                    let s = if x == 0.0 { tau } else { (x * tau).sin() / x };
                    bath::correlation_complex(&b, Complex64::new(t - tau, 0.0)) * s * (y * tau).exp()
                },
                0.0,
                t,
                QuadOpts::abs(1e-13),
            )
            .unwrap()
            .value;
            let z = offdiagonal_kernel_z(&b, x, y, t, 1e-13).unwrap();
            assert!((z - direct).norm() < 1e-11, "{x} {y}: {z} {direct}");
        }
    }

    #[test]
    fn memory_form_tracks_closed_form() {
        // closed-form pole+cut evaluation against the exact finite-time memory integral; they
        // differ at O(λ⁴), i.e. O(λ²) relative to the nonsecular envelope
        let b = ohmic();
        let p = SbmMapParams::new(&b, 1.0, 1e-11).unwrap();
        for t in [5.0, 10.0, 20.0, 40.0, 80.0, 150.0, 300.0] {
            let z = phi_21_12_from_z(&p, &b, t, 1e-11).unwrap();
            let c = p.phi_21_12(&b, t).unwrap();
            let scale = p.x0 * (-0.25 * p.j_delta * t).exp() + bath::bath_correlation(&b, t).unwrap().norm() / 4.0;
            assert!((z - c).norm() <= 4.0 * b.lambda_sq * scale, "t = {t}: {z} vs {c}");
        }
    }

    #[test]
    fn population_kernels_start_at_zero() {
        let b = ohmic();
        let p = SbmMapParams::new(&b, 1.0, 1e-11).unwrap();
        let m = population_map(&p, &b, 0.0, PopulationMode::Full, 1e-11).unwrap();
        assert!(m.a.abs() < 1e-15 && m.b.abs() < 1e-15);
        assert!((m.m[0][0] - 1.0).abs() < 1e-15 && (m.m[1][1] - 1.0).abs() < 1e-15);
    }
}
