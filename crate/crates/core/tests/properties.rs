use num_complex::Complex64;
use oscswap_core::classical::{predicted_energy_increment, predicted_final_state, FockLabel, TransferCoeffs};
use oscswap_core::linalg::{anticommutator, commutator, twisted_commutator, CMat2};
use oscswap_core::protocol::{compute_a, decompose_potential, solve_coupling_j, ProtocolSpec};
use oscswap_core::quantum::hermite::ho_eigenfunction;
use oscswap_core::report::sig15;
use oscswap_core::tuner::{b_of_lambda, TuneTarget};
use oscswap_core::SymMat2;
use proptest::prelude::*;

fn pd_matrix() -> impl Strategy<Value = SymMat2> {
    (0.2f64..3.0, 0.2f64..3.0, -1.0f64..1.0).prop_map(|(l1, l2, angle)| {
        let (s, c) = angle.sin_cos();
        SymMat2::new(c * c * l1 + s * s * l2, c * s * (l1 - l2), s * s * l1 + c * c * l2)
    })
}

fn sym_matrix() -> impl Strategy<Value = SymMat2> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b, c)| SymMat2::new(a, b, c))
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coupling_solves_its_equation(r in pd_matrix(), dr in sym_matrix()) {
        let j = solve_coupling_j(&r, &dr).unwrap();
        let (rc, drc) = (CMat2::from(r), CMat2::from(dr));
        let ri = CMat2::from(r.inverse().unwrap());
        let ri2 = ri * ri;
        let lhs = anticommutator(CMat2::from(j), ri2);
        let rhs = commutator(drc, ri) + twisted_commutator(rc, ri2, drc);
        let scale = rhs.max_abs().max(1.0);
        prop_assert!((lhs - rhs).max_abs() < 1e-12 * scale);
        prop_assert!((j.m[0][0]).abs() < 1e-12 * scale && (j.m[1][1]).abs() < 1e-12 * scale);
        prop_assert!((j.m[0][1] + j.m[1][0]).abs() < 1e-12 * scale);
    }

    #[test]
    fn generator_is_anti_hermitian(r in pd_matrix(), dr in sym_matrix()) {
        let j = solve_coupling_j(&r, &dr).unwrap();
        let a = compute_a(&r, &dr, &j).unwrap();
        prop_assert!((a + a.adjoint()).max_abs() < 1e-12 * a.max_abs().max(1.0));
    }

    #[test]
    fn decomposition_reconstructs(m in sym_matrix(), prev in -3.0f64..3.0) {
        let f = decompose_potential(&m, prev);
        prop_assert!(f.reconstruct().max_abs_diff(&m) < 1e-12);
        prop_assert!((f.theta - prev).abs() <= std::f64::consts::FRAC_PI_4 + 1e-12);
    }

    #[test]
    fn predicted_increment_is_antisymmetric(b in 0.0f64..1.0, n in 0u32..8, k in 0u32..8, w2 in 1.5f64..8.0) {
        let coeffs = TransferCoeffs {
            cx: c(b.sqrt()), cy: c((1.0 - b).sqrt()), cpx: c(-(1.0 - b).sqrt()), cpy: c(b.sqrt()),
            b, phi: None, phi_prime: None, final_value_residuals: [0.0; 4],
        };
        let d = predicted_energy_increment(&coeffs, FockLabel::new(n, k), 1.0, w2);
        let e = predicted_energy_increment(&coeffs, FockLabel::new(k, n), 1.0, w2);
        prop_assert!((d + e).abs() < 1e-12);
    }

    #[test]
    fn prediction_is_normalised_and_confined(
        beta in 0.0f64..1.57, pa in -3.0f64..3.0, pb in -3.0f64..3.0, n in 0u32..6, k in 0u32..6
    ) {
        let a = Complex64::from_polar(beta.cos(), pa);
        let bb = Complex64::from_polar(beta.sin(), pb);
        let coeffs = TransferCoeffs {
            cx: a, cy: bb, cpx: -bb.conj(), cpy: a.conj(),
            b: a.norm_sqr(), phi: None, phi_prime: None, final_value_residuals: [0.0; 4],
        };
        let p = predicted_final_state(&coeffs, FockLabel::new(n, k));
        prop_assert!((p.raw_norm - 1.0).abs() < 1e-10);
        prop_assert!(p.amplitudes.iter().all(|x| x.m + x.l == n + k));
        let total: f64 = p.amplitudes.iter().map(|x| x.amplitude.norm_sqr()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_functions_orthonormal(omega in 0.5f64..4.0) {
        let xs: Vec<f64> = (0..512).map(|i| -12.0 + 24.0 * i as f64 / 512.0).collect();
        let dx = xs[1] - xs[0];
        let f: Vec<Vec<f64>> = (0..=5).map(|n| ho_eigenfunction(n, omega, &xs).unwrap()).collect();
        for m in 0..=5 {
            for n in 0..=5 {
                let ip: f64 = f[m].iter().zip(&f[n]).map(|(a, b)| a * b).sum::<f64>() * dx;
                let expected = if m == n { 1.0 } else { 0.0 };
                prop_assert!((ip - expected).abs() < 1e-8, "<{}|{}> = {}", m, n, ip);
            }
        }
    }

    #[test]
    fn rounding_is_idempotent(x in proptest::num::f64::NORMAL) {
        prop_assert_eq!(sig15(sig15(x)), sig15(x));
        prop_assert!((sig15(x) - x).abs() <= 1e-14 * x.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn transfer_probability_is_a_probability(tf in 1.0f64..6.0, lambda in 0.0f64..40.0) {
        let b = b_of_lambda(&TuneTarget::swap(1.0, 5.0, tf), lambda, 4000).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&b));
    }

    #[test]
    fn boundary_potentials_exact(tf in 0.5f64..6.0, lambda in 0.0f64..40.0, gamma in 0.1f64..3.1) {
        let spec = ProtocolSpec::new(1.0, 5.0, tf, lambda, gamma).unwrap();
        let m0 = spec.design_point(0.0).unwrap().m;
        let mf = spec.design_point(tf).unwrap().m;
        prop_assert!(m0.max_abs_diff(&spec.initial_potential()) < 1e-9);
        prop_assert!(mf.max_abs_diff(&spec.final_potential()) < 1e-9);
    }
}
