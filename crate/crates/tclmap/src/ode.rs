//! Dormand–Prince 5(4) with step-size control for complex-valued systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOpts {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOpts {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-11,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

/// What the observer wants after seeing an output sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Halt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    Completed,
    Halted { t: f64 },
    StepUnderflow { t: f64, h: f64 },
}

#[derive(Debug, Clone)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub stop: Stop,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients b − b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, v) in terms {
            acc += *c * v[k];
        }
        *o = y[k] + h * acc;
    }
}

/// Integrate y' = f(t, y) from `t_out[0]`, reporting the state at every output time.
/// The step never crosses an output time, so samples are exact solver states.
pub fn integrate<F, O>(mut f: F, y0: &[Complex64], t_out: &[f64], opts: OdeOpts, mut observe: O) -> Result<OdeStats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
    O: FnMut(f64, &[Complex64]) -> Control,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t_out[0];
    let mut stats = OdeStats {
        accepted: 0,
        rejected: 0,
        evaluations: 0,
        stop: Stop::Completed,
    };
    if observe(t, &y) == Control::Halt {
        stats.stop = Stop::Halted { t };
        return Ok(stats);
    }
    let z = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n]);
    let mut tmp = vec![z; n];
    let mut ynew = vec![z; n];
    f(t, &y, &mut k1)?;
    stats.evaluations += 1;
    let mut h = opts.h_init.min(opts.h_max);
    for &target in &t_out[1..] {
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Diagnostic(format!("step budget exhausted at t = {t}")));
            }
            let last = target - t <= h * (1.0 + 1e-12);
            let hs = if last { target - t } else { h };
            axpy(&mut tmp, &y, hs, &[(A21, &k1)]);
            f(t + C2 * hs, &tmp, &mut k2)?;
            axpy(&mut tmp, &y, hs, &[(A31, &k1), (A32, &k2)]);
            f(t + C3 * hs, &tmp, &mut k3)?;
            axpy(&mut tmp, &y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            f(t + C4 * hs, &tmp, &mut k4)?;
            axpy(&mut tmp, &y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            f(t + C5 * hs, &tmp, &mut k5)?;
            axpy(&mut tmp, &y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            f(t + hs, &tmp, &mut k6)?;
            axpy(&mut ynew, &y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let tn = if last { target } else { t + hs };
            f(tn, &ynew, &mut k7)?;
            stats.evaluations += 6;
            let mut err = 0.0;
            for i in 0..n {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                h = hs * 0.2;
                stats.rejected += 1;
            } else if err <= 1.0 {
                t = tn;
                std::mem::swap(&mut y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                stats.accepted += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // Keep the pre-truncation step when the last step was shortened to land on target.
                h = (if last { h.max(hs) } else { hs } * fac).min(opts.h_max);
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                stats.rejected += 1;
            }
            if h < opts.h_min {
                stats.stop = Stop::StepUnderflow { t, h };
                return Ok(stats);
            }
        }
        if observe(t, &y) == Control::Halt {
            stats.stop = Stop::Halted { t };
            return Ok(stats);
        }
    }
    Ok(stats)
}
