//! Invertibility and positivity diagnostics for qubit maps: coherence-block singular values,
//! the first invertibility-loss time t_P, Choi spectra, and generator deviation scans.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{self, SystemSpec};
use crate::linalg::{hermitian_eigenvalues, CMat, Superoperator};

/// Structural and SVD values disagreeing by more than this flags a map whose coherence
/// block is not of the conjugate-symmetric form.
pub const STRUCTURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceSvd {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    /// |Φ₁₂,₁₂| − |Φ₁₂,₂₁|; sign carries the ordering of the two moduli.
    pub signed_gap: f64,
    /// SVD and |Φ₁₂,₁₂| ± |Φ₁₂,₂₁| disagree beyond [`STRUCTURE_TOL`].
    pub nonstructural: bool,
}

/// Singular values of the coherence block [[Φ₂₁,₂₁, Φ₂₁,₁₂], [Φ₁₂,₂₁, Φ₁₂,₁₂]].
pub fn coherence_singular_values(map: &Superoperator) -> CoherenceSvd {
    let b = CMat::from_row_slice(2, 2, &[map.get(1, 0, 1, 0), map.get(1, 0, 0, 1), map.get(0, 1, 1, 0), map.get(0, 1, 0, 1)]);
    let sv = b.singular_values();
    let (hi, lo) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
    let d = map.get(0, 1, 0, 1).norm();
    let o = map.get(0, 1, 1, 0).norm();
    let nonstructural = (hi - (d + o)).abs() > STRUCTURE_TOL || (lo - (d - o).abs()).abs() > STRUCTURE_TOL;
    CoherenceSvd {
        sigma_plus: hi,
        sigma_minus: lo,
        signed_gap: d - o,
        nonstructural,
    }
}

/// Unnormalized Choi matrix Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|) (trace N for a trace-preserving map).
pub fn choi_matrix(map: &Superoperator) -> CMat {
    let n = map.dim;
    let mut c = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    c[(i * n + a, j * n + b)] = map.get(a, b, i, j);
                }
            }
        }
    }
    c
}

/// Smallest eigenvalue of the Hermitian part of the Choi matrix.
pub fn cp_check(map: &Superoperator) -> f64 {
    let c = choi_matrix(map);
    let h = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
    hermitian_eigenvalues(&h).into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvertibilityReport {
    /// First sign change of |Φ₁₂,₁₂| − |Φ₁₂,₂₁|, refined by bisection.
    pub t_p: Option<f64>,
    pub crossing_bracket: Option<(f64, f64)>,
    /// Brackets of any further sign changes on the scan grid.
    pub later_crossings: Vec<(f64, f64)>,
    /// (t, σ₋) on the scan grid.
    pub sigma_minus_trace: Vec<(f64, f64)>,
    /// (t, min Choi eigenvalue) on the scan grid.
    pub choi_min_eigenvalue_trace: Vec<(f64, f64)>,
    /// σ₋ jumps by more than half its range between neighbouring samples.
    pub unresolved_oscillation: bool,
    /// Any scanned map was not of the structural form.
    pub nonstructural: bool,
    /// The source failed before the end of the grid (e.g. a halted trajectory).
    pub halted: bool,
}

/// Scans a map source over `grid` and locates t_P to time tolerance `t_tol`.
pub fn find_tp<F>(mut source: F, grid: &[f64], t_tol: f64) -> Result<InvertibilityReport>
where
    F: FnMut(f64) -> Result<Superoperator>,
{
    if grid.len() < 2 {
        return Err(Error::Parameter("t_P scan needs at least two grid points".into()));
    }
    let mut gaps = Vec::with_capacity(grid.len());
    let mut sigma = Vec::with_capacity(grid.len());
    let mut choi = Vec::with_capacity(grid.len());
    let mut nonstructural = false;
    let mut halted = false;
    for &t in grid {
        let m = match source(t) {
            Ok(m) => m,
            Err(Error::Domain(_)) | Err(Error::Singular(_)) => {
                halted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let c = coherence_singular_values(&m);
        nonstructural |= c.nonstructural;
        gaps.push((t, c.signed_gap));
        sigma.push((t, c.sigma_minus));
        choi.push((t, cp_check(&m)));
    }
    let mut brackets = gaps
        .windows(2)
        .filter(|w| w[0].1 > 0.0 && w[1].1 <= 0.0 || w[0].1 < 0.0 && w[1].1 >= 0.0)
        .map(|w| (w[0].0, w[1].0));
    let first = brackets.next();
    let later_crossings: Vec<_> = brackets.collect();
    let t_p = match first {
        Some((mut lo, mut hi)) => {
            let mut g = |t: f64| source(t).map(|m| coherence_singular_values(&m).signed_gap);
            let glo = g(lo)?;
            while hi - lo > t_tol {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid)?;
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
        None => None,
    };
    let range = sigma.iter().map(|s| s.1).fold(0.0, f64::max);
    let unresolved_oscillation = sigma.windows(2).any(|w| (w[1].1 - w[0].1).abs() > 0.5 * range) && range > 0.0;
    Ok(InvertibilityReport {
        t_p,
        crossing_bracket: first,
        later_crossings,
        sigma_minus_trace: sigma,
        choi_min_eigenvalue_trace: choi,
        unresolved_oscillation,
        nonstructural,
        halted,
    })
}

/// (t, ‖L(t) − L₀‖_F) for the resummed TCL generator.
pub fn generator_deviation_scan(sys: &SystemSpec, grid: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
    generators::deviation_scan(sys, grid, tol)
}
