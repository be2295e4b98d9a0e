//! Davies reference generator L₀, the partially resummed TCL generator L(t), and the
//! Bloch–Redfield variant with bare frequencies inside the memory kernels.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::{self, BathSpec};
use crate::error::{Error, Result};
use crate::linalg::{diag, CMat, Superoperator};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Bohr frequencies closer than this (in units of Δ) count as degenerate in the secular selection.
pub const SECULAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    /// Level energies in descending order, so index 0 is the upper qubit level (state 1).
    pub energies: Vec<f64>,
    /// One Hermitian coupling operator A^α per bath.
    pub couplings: Vec<CMat>,
    pub baths: Vec<BathSpec>,
    /// Rotating-wave qubit: only the excitation-conserving exchange σ₊B + σ₋B† is kept.
    pub rotating_wave: bool,
}

impl SystemSpec {
    pub fn new(energies: Vec<f64>, couplings: Vec<CMat>, baths: Vec<BathSpec>) -> Result<Self> {
        let n = energies.len();
        if n < 2 {
            return Err(Error::Parameter("system dimension must be at least 2".into()));
        }
        if energies.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Parameter("energies must be sorted in descending order".into()));
        }
        if couplings.len() != baths.len() || baths.is_empty() {
            return Err(Error::Parameter("need exactly one bath per coupling operator".into()));
        }
        for (k, a) in couplings.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Parameter(format!("coupling {k} has wrong shape")));
            }
            if (a - a.adjoint()).norm() > 1e-12 {
                return Err(Error::Parameter(format!("coupling {k} is not Hermitian")));
            }
        }
        for b in &baths {
            b.validate()?;
        }
        Ok(Self {
            energies,
            couplings,
            baths,
            rotating_wave: false,
        })
    }

    /// Unbiased spin–boson qubit: H_S = (Δ/2)σ_z, A = σ_x/2.
    pub fn sbm(delta: f64, bath: BathSpec) -> Result<Self> {
        Self::qubit(delta, 0.0, Complex64::new(0.5, 0.0), bath)
    }

    /// Qubit with A = [[a11, a12], [a12*, −a11]].
    pub fn qubit(delta: f64, a11: f64, a12: Complex64, bath: BathSpec) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
        }
        let a = CMat::from_row_slice(2, 2, &[Complex64::new(a11, 0.0), a12, a12.conj(), Complex64::new(-a11, 0.0)]);
        Self::new(vec![0.5 * delta, -0.5 * delta], vec![a], vec![bath])
    }

    /// Rotating-wave qubit with the same H_S and bath.
    pub fn rwa(delta: f64, bath: BathSpec) -> Result<Self> {
        let mut s = Self::sbm(delta, bath)?;
        s.rotating_wave = true;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Qubit splitting E₁ − E₂.
    pub fn delta(&self) -> f64 {
        self.energies[0] - self.energies[1]
    }

    pub fn hamiltonian(&self) -> CMat {
        diag(&self.energies)
    }

    /// Bohr frequency ω_{in} = E_i − E_n.
    pub fn omega(&self, i: usize, n: usize) -> f64 {
        self.energies[i] - self.energies[n]
    }

    pub fn is_qubit(&self) -> bool {
        self.dim() == 2
    }

    pub fn with_bath(&self, bath: BathSpec) -> Self {
        let mut s = self.clone();
        for b in s.baths.iter_mut() {
            *b = bath;
        }
        s
    }

    /// T₂ = 4/J_Δ for qubit presets.
    pub fn t2(&self) -> f64 {
        4.0 / bath::spectral_density(&self.baths[0], self.delta())
    }
}

/// A complex transition frequency together with its nesting depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormalizedFrequency {
    pub value: Complex64,
    pub time: f64,
    /// 0 = bare, 1 = single renormalization, k = k-fold nesting.
    pub branch_order: u32,
}

/// Γ^α at real or complex frequency, memoized by exact bits within one generator assembly.
struct KernelTable<'a> {
    sys: &'a SystemSpec,
    t: f64,
    tol: f64,
    memo: HashMap<(usize, u64, u64), Complex64>,
}

impl<'a> KernelTable<'a> {
    fn new(sys: &'a SystemSpec, t: f64, tol: f64) -> Self {
        Self {
            sys,
            t,
            tol,
            memo: HashMap::new(),
        }
    }

    fn gamma(&mut self, alpha: usize, w: Complex64) -> Result<Complex64> {
        let key = (alpha, w.re.to_bits(), w.im.to_bits());
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let v = bath::gamma_finite(&self.sys.baths[alpha], w, self.t, self.tol)?;
        self.memo.insert(key, v);
        Ok(v)
    }
}

fn renormalized(tab: &mut KernelTable, i: usize, n: usize, j: usize, order: u32) -> Result<Complex64> {
    let sys = tab.sys;
    let bare = Complex64::new(sys.omega(i, n), 0.0);
    if order == 0 {
        return Ok(bare);
    }
    let d = sys.dim();
    let mut shift = ZERO;
    for (alpha, a) in sys.couplings.iter().enumerate() {
        for c in 0..d {
            let wic = Complex64::new(sys.omega(i, c), 0.0);
            let wnc = Complex64::new(sys.omega(n, c), 0.0);
            shift += a[(i, c)].norm_sqr() * tab.gamma(alpha, wic)? - a[(n, c)].norm_sqr() * tab.gamma(alpha, wnc)?;
        }
        let ajj = a[(j, j)];
        let overlap = a[(n, n)] - a[(i, i)];
        if ajj != ZERO && overlap != ZERO {
            let j0 = tab.gamma(alpha, ZERO)?;
            shift += 2.0 * j0 * ajj * overlap;
        }
    }
    Ok(bare - I * shift)
}

/// ω_{in}^{(j)}(t) for the given nesting order (0 or 1).
pub fn renormalized_frequency(
    sys: &SystemSpec,
    i: usize,
    n: usize,
    j: usize,
    t: f64,
    order: u32,
    tol: f64,
) -> Result<RenormalizedFrequency> {
    let mut tab = KernelTable::new(sys, t, tol);
    Ok(RenormalizedFrequency {
        value: renormalized(&mut tab, i, n, j, order.min(1))?,
        time: t,
        branch_order: order.min(1),
    })
}

/// Resummed generator for general Hermitian couplings; `order` 1 is the TCL branch,
/// 0 the Bloch–Redfield variant.
fn resummed_general(sys: &SystemSpec, t: f64, order: u32, tol: f64) -> Result<Superoperator> {
    let d = sys.dim();
    let mut tab = KernelTable::new(sys, t, tol);
    // G[α][i][n][j] = Γ^α at ω_{in}^{(j)}(t)
    let mut freq = vec![ZERO; d * d * d];
    for i in 0..d {
        for n in 0..d {
            for j in 0..d {
                freq[(i * d + n) * d + j] = renormalized(&mut tab, i, n, j, order)?;
            }
        }
    }
    let nb = sys.couplings.len();
    let mut g = vec![ZERO; nb * d * d * d];
    for alpha in 0..nb {
        for k in 0..d * d * d {
            g[alpha * d * d * d + k] = tab.gamma(alpha, freq[k])?;
        }
    }
    let gi = |alpha: usize, i: usize, n: usize, j: usize| g[alpha * d * d * d + (i * d + n) * d + j];
    let mut l = Superoperator::commutator(&sys.hamiltonian());
    for n in 0..d {
        for m in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut k_el = ZERO;
                    for (alpha, a) in sys.couplings.iter().enumerate() {
                        k_el += a[(n, i)] * a[(j, m)] * (gi(alpha, i, n, j) + gi(alpha, j, m, i).conj());
                        for k in 0..d {
                            if j == m {
                                k_el -= a[(n, k)] * a[(k, i)] * gi(alpha, i, k, j);
                            }
                            if n == i {
                                k_el -= a[(j, k)] * a[(k, m)] * gi(alpha, j, k, i).conj();
                            }
                        }
                    }
                    if k_el != ZERO {
                        l.add(n, m, i, j, k_el);
                    }
                }
            }
        }
    }
    Ok(l)
}

/// u(t) = Δ − (i/4)Γ_Δ(t) for the RWA preset.
pub fn rwa_frequency(bath: &BathSpec, delta: f64, t: f64, tol: f64) -> Result<Complex64> {
    Ok(delta - 0.25 * I * bath::gamma_finite(bath, Complex64::new(delta, 0.0), t, tol)?)
}

/// RWA generator with the decay kernel Γ evaluated at frequency `u`.
pub fn rwa_generator_at(delta: f64, gamma_u: Complex64) -> Superoperator {
    let mut l = Superoperator::zeros(2);
    let r = gamma_u.re;
    l.set(0, 0, 0, 0, Complex64::new(-0.5 * r, 0.0));
    l.set(1, 1, 0, 0, Complex64::new(0.5 * r, 0.0));
    l.set(1, 0, 1, 0, I * delta - 0.25 * gamma_u.conj());
    l.set(0, 1, 0, 1, -I * delta - 0.25 * gamma_u);
    l
}

fn resummed(sys: &SystemSpec, t: f64, order: u32, tol: f64) -> Result<Superoperator> {
    if t < 0.0 {
        return Err(Error::Domain(format!("generator requested at t = {t} < 0")));
    }
    if sys.rotating_wave {
        let b = &sys.baths[0];
        let delta = sys.delta();
        let u = if order == 0 {
            Complex64::new(delta, 0.0)
        } else {
            rwa_frequency(b, delta, t, tol)?
        };
        let gu = bath::gamma_finite(b, u, t, tol)?;
        return Ok(rwa_generator_at(delta, gu));
    }
    resummed_general(sys, t, order, tol)
}

/// Partially resummed TCL generator L(t) (single nesting).
pub fn tcl_generator(sys: &SystemSpec, t: f64, tol: f64) -> Result<Superoperator> {
    resummed(sys, t, 1, tol).map_err(|e| e.within("tcl_generator"))
}

/// Bloch–Redfield generator with time-dependent coefficients and bare frequencies.
pub fn bloch_redfield_generator(sys: &SystemSpec, t: f64, tol: f64) -> Result<Superoperator> {
    resummed(sys, t, 0, tol).map_err(|e| e.within("bloch_redfield_generator"))
}

fn lamb_shift(b: &BathSpec, w: f64, tol: f64) -> Result<f64> {
    if w == 0.0 && !b.is_zero_temperature() {
        return bath::lamb_shift_pv(b, 0.0, tol);
    }
    Ok(bath::gamma_continued(b, Complex64::new(w, 0.0), tol)?.im)
}

/// Davies generator L₀ = −i[H_S + H_LS, ·] + K₀ with secular selection.
pub fn davies_generator(sys: &SystemSpec, tol: f64) -> Result<Superoperator> {
    let b0 = &sys.baths[0];
    if sys.rotating_wave {
        let delta = sys.delta();
        let g = bath::gamma_asymptotic(b0, Complex64::new(delta, 0.0), tol)?;
        let dt = delta + 0.25 * g.im;
        let mut l = Superoperator::zeros(2);
        l.set(0, 0, 0, 0, Complex64::new(-0.5 * g.re, 0.0));
        l.set(1, 1, 0, 0, Complex64::new(0.5 * g.re, 0.0));
        l.set(1, 0, 1, 0, Complex64::new(-0.25 * g.re, dt));
        l.set(0, 1, 0, 1, Complex64::new(-0.25 * g.re, -dt));
        return Ok(l);
    }
    let d = sys.dim();
    let mut h = sys.hamiltonian();
    let mut k0 = Superoperator::zeros(d);
    for (alpha, a) in sys.couplings.iter().enumerate() {
        let b = &sys.baths[alpha];
        let jw = |w: f64| bath::spectral_density(b, w);
        for n in 0..d {
            for k in 0..d {
                let w = sys.omega(n, k);
                let a2 = a[(n, k)].norm_sqr();
                if a2 != 0.0 {
                    h[(n, n)] += a2 * lamb_shift(b, w, tol)?;
                }
            }
        }
        for n in 0..d {
            for m in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        let win = sys.omega(i, n);
                        let wjm = sys.omega(j, m);
                        let mut v = ZERO;
                        let amp = a[(n, i)] * a[(j, m)];
                        if amp != ZERO && (win - wjm).abs() <= SECULAR_TOL {
                            v += 2.0 * amp * jw(win);
                        }
                        if n == i && j == m {
                            for k in 0..d {
                                v -= a[(n, k)].norm_sqr() * jw(sys.omega(n, k)) + a[(j, k)].norm_sqr() * jw(sys.omega(j, k));
                            }
                        }
                        if v != ZERO {
                            k0.add(n, m, i, j, v);
                        }
                    }
                }
            }
        }
    }
    let mut l = Superoperator::commutator(&h);
    l.matrix += &k0.matrix;
    Ok(l)
}

/// Explicit qubit elements for A = [[A₁₁, A₁₂], [A₂₁, −A₁₁]], written out term by term
/// with Δ′(t), the overlap shift Ω(t) = 4A₁₁²J₀(t) and S₀(t) = Im J₀(t).
pub fn qubit_explicit_generator(delta: f64, a: &CMat, b: &BathSpec, t: f64, tol: f64) -> Result<Superoperator> {
    let a11 = a[(0, 0)].re;
    let a12 = a[(0, 1)];
    let a21 = a[(1, 0)];
    let p = a12.norm_sqr();
    let g = |w: Complex64| bath::gamma_finite(b, w, t, tol);
    let dw = Complex64::new(delta, 0.0);
    let dp = delta - I * p * (g(dw)? - g(-dw)?);
    let j0 = bath::j0_finite(b, t, tol)?;
    let s0 = j0.im;
    let om = 4.0 * a11 * a11 * j0;
    let g_pp = g(dp + I * om)?;
    let g_mp = g(-dp + I * om)?;
    let g_pm = g(dp - I * om)?;
    let g_mm = g(-dp - I * om)?;

    let mut l = Superoperator::zeros(2);
    let l11_11 = Complex64::new(-2.0 * p * g_pp.re, 0.0);
    let l11_22 = Complex64::new(2.0 * p * g_mp.re, 0.0);
    l.set(0, 0, 0, 0, l11_11);
    l.set(0, 0, 1, 1, l11_22);
    l.set(1, 1, 0, 0, -l11_11);
    l.set(1, 1, 1, 1, -l11_22);

    let l21_11 = 2.0 * a21 * a11 * (g_pp - I * s0);
    let l21_22 = 2.0 * a21 * a11 * (-g_mp.conj() - I * s0);
    l.set(1, 0, 0, 0, l21_11);
    l.set(1, 0, 1, 1, l21_22);
    l.set(0, 1, 0, 0, l21_11.conj());
    l.set(0, 1, 1, 1, l21_22.conj());

    let nonsec = p * (g_pm.conj() + g_mm);
    let l21_21 = I * delta - om - nonsec;
    l.set(1, 0, 1, 0, l21_21);
    l.set(0, 1, 0, 1, l21_21.conj());
    l.set(0, 1, 1, 0, nonsec);
    l.set(1, 0, 0, 1, nonsec.conj());

    let l11_21 = 2.0 * a12 * a11 * j0;
    l.set(0, 0, 1, 0, l11_21);
    l.set(1, 1, 1, 0, -l11_21);
    l.set(0, 0, 0, 1, l11_21.conj());
    l.set(1, 1, 0, 1, -l11_21.conj());
    Ok(l)
}

/// Frobenius deviation ‖L(t) − L₀‖ on a grid (TCL branch).
pub fn deviation_scan(sys: &SystemSpec, grid: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
    let l0 = davies_generator(sys, tol)?;
    grid.par_iter()
        .map(|&t| Ok((t, tcl_generator(sys, t, tol)?.sub(&l0).frobenius())))
        .collect()
}

/// Interior minimizer of ‖L(t) − L₀‖ over the scan grid.
///
/// The deviation carries a beat at the Bohr frequencies on top of its slow decay/growth, so
/// the minimized quantity is the running maximum over one period 2π/ω_min (the upper
/// envelope); only points whose full window lies inside the scan are eligible.
pub fn validity_time(sys: &SystemSpec, scan: &[f64], tol: f64) -> Result<f64> {
    if sys.is_qubit() {
        let b = &sys.baths[0];
        let need = 3.0 * (b.s + 1.0) * sys.t2();
        if scan.last().copied().unwrap_or(0.0) < need {
            return Err(Error::Parameter(format!("scan must reach at least {need:.3} (3(s+1)T2)")));
        }
    }
    if scan.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("scan grid must be strictly increasing".into()));
    }
    let n = sys.dim();
    let w_min = (0..n)
        .flat_map(|i| (0..n).map(move |k| (i, k)))
        .map(|(i, k)| sys.omega(i, k).abs())
        .filter(|&w| w > 1e-12)
        .fold(f64::INFINITY, f64::min);
    let period = if w_min.is_finite() { 2.0 * PI / w_min } else { 0.0 };
    let max_gap = scan.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if period > 0.0 && max_gap > period / 4.0 {
        return Err(Error::Parameter(format!("scan spacing {max_gap:.3} does not resolve the Bohr period {period:.3}")));
    }
    let dev = deviation_scan(sys, scan, tol)?;
    let half = 0.5 * period;
    let (t0, t1) = (scan[0] + half, scan[scan.len() - 1] - half);
    let mut best: Option<(usize, f64)> = None;
    let mut lo = 0;
    let mut hi = 0;
    let mut eligible = Vec::new();
    for (k, &(t, _)) in dev.iter().enumerate() {
        if t < t0 || t > t1 {
            continue;
        }
        while dev[lo].0 < t - half {
            lo += 1;
        }
        while hi + 1 < dev.len() && dev[hi + 1].0 <= t + half {
            hi += 1;
        }
        let env = dev[lo..=hi].iter().map(|d| d.1).fold(0.0, f64::max);
        eligible.push(k);
        if best.is_none_or(|b| env < b.1) {
            best = Some((k, env));
        }
    }
    let (k, _) = best.ok_or_else(|| Error::Diagnostic("scan shorter than one Bohr period".into()))?;
    if k == eligible[0] || k == *eligible.last().unwrap() {
        return Err(Error::Diagnostic("generator deviation has no interior minimum on the scan".into()));
    }
    Ok(dev[k].0)
}
