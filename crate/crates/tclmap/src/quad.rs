//! Quadrature primitives: adaptive Gauss–Kronrod for complex integrands on
//! finite and semi-infinite intervals, plus fixed Gauss–Legendre panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 constants, kept verbatim).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of a quadrature with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: Complex64,
    pub error: f64,
}

/// One Kronrod panel on [a, b]; error is |K15 − G7|.
pub fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Quad {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    Quad {
        value: k * h,
        error: ((k - g) * h).norm(),
    }
}

struct Panel {
    a: f64,
    b: f64,
    q: Quad,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.q.error == o.q.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.q.error.total_cmp(&o.q.error)
    }
}

/// Tolerances and budget for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl QuadOpts {
    pub fn abs(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: 0.0,
            max_panels: 4000,
        }
    }
}

/// Globally adaptive bisection over the listed breakpoints.
pub fn adaptive_points<F: FnMut(f64) -> Complex64>(
    mut f: F,
    points: &[f64],
    opts: QuadOpts,
) -> Result<Quad> {
    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let q = gk15(&mut f, w[0], w[1]);
        total += q.value;
        err += q.error;
        heap.push(Panel { a: w[0], b: w[1], q });
    }
    let target = |v: Complex64| opts.abs_tol.max(opts.rel_tol * v.norm());
    while err > target(total) {
        if heap.len() >= opts.max_panels {
            return Err(Error::Accuracy {
                context: "adaptive quadrature".into(),
                achieved: err,
                requested: target(total),
            });
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Interval exhausted at machine resolution; accept what we have.
            heap.push(p);
            break;
        }
        let l = gk15(&mut f, p.a, m);
        let r = gk15(&mut f, m, p.b);
        total += l.value + r.value - p.q.value;
        err += l.error + r.error - p.q.error;
        heap.push(Panel { a: p.a, b: m, q: l });
        heap.push(Panel { a: m, b: p.b, q: r });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let mut value = Complex64::new(0.0, 0.0);
    let mut e = 0.0;
    for p in heap.iter() {
        value += p.q.value;
        e += p.q.error;
    }
    if e > target(value) {
        return Err(Error::Accuracy {
            context: "adaptive quadrature".into(),
            achieved: e,
            requested: target(value),
        });
    }
    Ok(Quad { value, error: e })
}

pub fn adaptive<F: FnMut(f64) -> Complex64>(f: F, a: f64, b: f64, opts: QuadOpts) -> Result<Quad> {
    adaptive_points(f, &[a, b], opts)
}

/// ∫_a^∞ f via r = a + L[(1−x)^{−4} − 1], which turns both exponential and
/// algebraic (|f| ~ r^{−p}, p ≥ 5/4) tails into bounded integrands on [0, 1).
/// `scale` L should be the decay length of f.
pub fn semi_infinite<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    scale: f64,
    opts: QuadOpts,
) -> Result<Quad> {
    let g = |x: f64| {
        let d = 1.0 - x;
        let d2 = d * d;
        let inv4 = 1.0 / (d2 * d2);
        let r = a + scale * (inv4 - 1.0);
        if !r.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        let v = f(r);
        if v.re == 0.0 && v.im == 0.0 {
            return v;
        }
        v * (4.0 * scale * inv4 / d)
    };
    adaptive_points(g, &[0.0, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0], opts)
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_oscillatory() {
        let q = adaptive(
            |x| Complex64::new(0.0, 50.0 * x).exp(),
            0.0,
            3.0,
            QuadOpts::abs(1e-12),
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 150.0).exp() - 1.0) / Complex64::new(0.0, 50.0);
        assert!((q.value - exact).norm() < 1e-12);
    }

    #[test]
    fn semi_infinite_algebraic_tail() {
        // ∫_0^∞ (1+r)^{-4/3} dr = 3
        let q = semi_infinite(
            |r| Complex64::new((1.0 + r).powf(-4.0 / 3.0), 0.0),
            0.0,
            1.0,
            QuadOpts::abs(1e-9),
        )
        .unwrap();
        assert!((q.value.re - 3.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let opts = QuadOpts {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_panels: 3,
        };
        let e = adaptive(|x| Complex64::new((200.0 * x).sin(), 0.0), 0.0, 10.0, opts).unwrap_err();
        assert!(matches!(e, Error::Accuracy { .. }));
    }
}
