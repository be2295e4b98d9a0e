use num_complex::Complex64;
use proptest::prelude::*;

use tclmap::analysis;
use tclmap::bath::{self, BathSpec};
use tclmap::cli;
use tclmap::generators::{self, SystemSpec};
use tclmap::linalg::Superoperator;
use tclmap::quad::{self, QuadOpts};
use tclmap::reconstruction;
use tclmap::rwa;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn detailed_balance_any_temperature(beta in 0.2f64..20.0, s in 0.2f64..2.0, w in 0.01f64..8.0) {
        let b = BathSpec::new(0.01, s, 4.0, beta).unwrap();
        let (jp, jm) = (bath::spectral_density(&b, w), bath::spectral_density(&b, -w));
        prop_assert!((jm - (-beta * w).exp() * jp).abs() <= 1e-12 * jp.max(1e-300));
    }

    #[test]
    fn kernels_are_linear_in_coupling(w in -3.0f64..3.0, t in 0.0f64..40.0) {
        let b = BathSpec::zero_temperature(0.02, 0.5, 4.0).unwrap();
        let full = bath::gamma_finite(&b, Complex64::new(w, 0.0), t, 1e-12).unwrap();
        let half = bath::gamma_finite(&b.with_lambda_sq(0.01), Complex64::new(w, 0.0), t, 1e-12).unwrap();
        prop_assert!((full - 2.0 * half).norm() <= 1e-10);
    }

    #[test]
    fn finite_kernel_is_additive(w in 0.2f64..3.0, t1 in 0.0f64..20.0, dt in 0.0f64..20.0) {
        let b = BathSpec::zero_temperature(0.01, 1.0 / 3.0, 4.0).unwrap();
        let t2 = t1 + dt;
        let z = Complex64::new(w, 0.0);
        let g1 = bath::gamma_finite(&b, z, t1, 1e-12).unwrap();
        let g2 = bath::gamma_finite(&b, z, t2, 1e-12).unwrap();
        let piece = quad::adaptive(
            |tau| bath::correlation_complex(&b, Complex64::new(tau, 0.0)) * Complex64::from_polar(1.0, w * tau),
            t1,
            t2,
            QuadOpts::abs(1e-13),
        )
        .unwrap();
        prop_assert!((g2 - g1 - piece.value).norm() <= 1e-9);
    }

    #[test]
    fn qubit_generators_are_structural(a11 in -0.5f64..0.5, re in -0.5f64..0.5, im in -0.5f64..0.5, t in 0.0f64..80.0) {
        let b = BathSpec::zero_temperature(0.02, 1.0, 4.0).unwrap();
        let sys = SystemSpec::qubit(1.0, a11, Complex64::new(re, im), b).unwrap();
        for l in [
            generators::tcl_generator(&sys, t, 1e-8).unwrap(),
            generators::bloch_redfield_generator(&sys, t, 1e-8).unwrap(),
            generators::davies_generator(&sys, 1e-8).unwrap(),
            generators::qubit_explicit_generator(1.0, &sys.couplings[0], &b, t, 1e-8).unwrap(),
        ] {
            prop_assert!(l.trace_defect(0.0) <= 1e-10);
            prop_assert!(l.hermiticity_defect() <= 1e-10);
        }
    }

    #[test]
    fn davies_semigroup(t1 in 0.0f64..60.0, t2 in 0.0f64..60.0) {
        let b = BathSpec::zero_temperature(0.025, 1.0, 4.0).unwrap();
        let l0 = generators::davies_generator(&SystemSpec::sbm(1.0, b).unwrap(), 1e-10).unwrap();
        let lhs = reconstruction::reference_propagator(&l0, t1 + t2);
        let rhs = reconstruction::reference_propagator(&l0, t1).compose(&reconstruction::reference_propagator(&l0, t2));
        prop_assert!(lhs.sub(&rhs).frobenius() <= 1e-10);
        prop_assert!(lhs.trace_defect(1.0) <= 1e-12);
    }

    #[test]
    fn coherence_svd_matches_moduli(d in 0.0f64..1.0, pd in -3.2f64..3.2, o in 0.0f64..1.0, po in -3.2f64..3.2) {
        let mut m = Superoperator::identity(2);
        let (dd, oo) = (Complex64::from_polar(d, pd), Complex64::from_polar(o, po));
        m.set(0, 1, 0, 1, dd);
        m.set(1, 0, 1, 0, dd.conj());
        m.set(0, 1, 1, 0, oo);
        m.set(1, 0, 0, 1, oo.conj());
        let c = analysis::coherence_singular_values(&m);
        prop_assert!((c.sigma_plus - (d + o)).abs() <= 1e-12);
        prop_assert!((c.sigma_minus - (d - o).abs()).abs() <= 1e-12);
        prop_assert!(!c.nonstructural);
    }

    #[test]
    fn exact_rwa_map_is_cp_iff_contractive(r in 0.0f64..1.5, p in -3.2f64..3.2) {
        let m = rwa::rwa_exact_map(Complex64::from_polar(r, p));
        let ev = analysis::cp_check(&m);
        if r <= 1.0 - 1e-9 {
            prop_assert!(ev >= -1e-12);
        } else if r > 1.0 + 1e-9 {
            prop_assert!(ev < 0.0);
        }
    }

    #[test]
    fn csv_number_format_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let s = cli::fmt_f64(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
