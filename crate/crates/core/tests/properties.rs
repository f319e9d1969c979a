//! Randomised invariants of the kernel, pencil, solvers and oracles.

use gpspectra_core::{
    build_mode_system, classify_regime, constant_d, constant_d_quadrature, count_zeros,
    interlacing_violation, ladder_contour, log_log_slope, match_roots, newton_refine,
    pencil::horner, polynomial_roots, predict_power_law, quadrature::QuadratureOptions,
    real_spectrum::f_roots, solve_mode, Complex64, ExponentialKernel, ModePencil, PowerLawFamily,
    Regime, SolverOptions,
};
use proptest::prelude::*;

/// Admissible ladder with `1..=max_terms` modes: rates from positive gaps,
/// coefficients rescaled so that `S` equals the drawn target below 1.
fn kernel(max_terms: usize) -> impl Strategy<Value = ExponentialKernel> {
    (1..=max_terms)
        .prop_flat_map(|n| {
            (
                0.1f64..2.0,
                prop::collection::vec(0.05f64..5.0, n - 1),
                prop::collection::vec(0.1f64..1.0, n),
                0.1f64..0.9,
            )
        })
        .prop_map(|(first, gaps, weights, s)| {
            let mut rates = vec![first];
            for g in gaps {
                rates.push(rates.last().unwrap() + g);
            }
            let raw: f64 = weights.iter().zip(&rates).map(|(c, g)| c / g).sum();
            let coeffs = weights.iter().map(|c| c * s / raw).collect();
            ExponentialKernel::new(coeffs, rates).unwrap()
        })
}

fn pencil(max_terms: usize) -> impl Strategy<Value = ModePencil> {
    (kernel(max_terms), 1.0f64..3.0, 0.1f64..0.9)
        .prop_map(|(k, log_a, xi)| ModePencil::new(10f64.powf(log_a), xi, k).unwrap())
}

/// Point with `|z|` in `[1, 1000]` and `|arg z| < pi - 0.1`.
fn sector_point() -> impl Strategy<Value = Complex64> {
    (
        0.0f64..3.0,
        -(std::f64::consts::PI - 0.1)..(std::f64::consts::PI - 0.1),
    )
        .prop_map(|(log_r, arg)| Complex64::from_polar(10f64.powf(log_r), arg))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplace_is_conjugate_symmetric(k in kernel(12), z in sector_point()) {
        let lhs = k.laplace(z.conj()).unwrap();
        let rhs = k.laplace(z).unwrap().conj();
        prop_assert!(rel(lhs, rhs) < 1e-15);
        let dl = k.laplace_deriv(z.conj()).unwrap();
        prop_assert!(rel(dl, k.laplace_deriv(z).unwrap().conj()) < 1e-15);
    }

    #[test]
    fn laplace_at_origin_is_s(k in kernel(12)) {
        let v = k.laplace(Complex64::new(0.0, 0.0)).unwrap();
        prop_assert_eq!(v.im, 0.0);
        prop_assert!((v.re - k.s()).abs() <= 1e-14 * k.s());
    }

    #[test]
    fn laplace_decreases_on_positive_axis(k in kernel(12)) {
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let x = 10f64.powf(-2.0 + 0.125 * i as f64);
            let v = k.laplace(Complex64::new(x, 0.0)).unwrap();
            prop_assert_eq!(v.im, 0.0);
            prop_assert!(v.re > 0.0 && v.re < prev);
            prev = v.re;
        }
    }

    #[test]
    fn laplace_derivative_matches_differences(k in kernel(12), z in sector_point()) {
        let h = 1e-5 * z.norm();
        let fd = (k.laplace(z + h).unwrap() - k.laplace(z - h).unwrap()) / (2.0 * h);
        prop_assert!(rel(fd, k.laplace_deriv(z).unwrap()) < 1e-6);
    }

    #[test]
    fn symbol_splits_into_f_plus_g(p in pencil(12), z in sector_point()) {
        let a2 = p.a() * p.a();
        let sum = p.eval_f(z).unwrap() + p.eval_g(z);
        prop_assert!(rel(sum, p.eval_symbol(z).unwrap() / a2) < 1e-12);
    }

    #[test]
    fn polynomial_expansion_matches_symbol(p in pencil(12), z in sector_point()) {
        let coeffs = p.to_polynomial().unwrap();
        let poles: Complex64 = p.ladder().rates().iter().map(|g| z + g).product();
        let direct = p.eval_symbol(z).unwrap() * poles;
        prop_assert!(rel(horner(&coeffs, z), direct) < 1e-9);
    }

    #[test]
    fn roots_satisfy_vieta(p in pencil(12)) {
        let spec = solve_mode(&p, &SolverOptions::default()).unwrap();
        let coeffs = p.to_polynomial().unwrap();
        let degree = coeffs.len() - 1;
        let roots = spec.all_roots();
        prop_assert_eq!(roots.len(), degree);
        let scale: f64 = roots.iter().map(|z| z.norm()).sum();
        let sum: Complex64 = roots.iter().sum();
        prop_assert!((sum + coeffs[degree - 1]).norm() <= 1e-12 * scale);
        let product: Complex64 = roots.iter().product();
        let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(rel(product, Complex64::new(sign * coeffs[0], 0.0)) < 1e-10);
    }

    #[test]
    fn real_roots_interlace(p in pencil(12)) {
        let opts = SolverOptions::default();
        let spec = solve_mode(&p, &opts).unwrap();
        let x = f_roots(&p, spec.real.len(), &opts).unwrap();
        prop_assert_eq!(interlacing_violation(&spec.real, &x), None);
        for (k, mu) in spec.real.iter().enumerate() {
            let upper = if k == 0 { 0.0 } else { -p.ladder().rates()[k - 1] };
            prop_assert!(-p.ladder().rates()[k] < mu.value && mu.value < upper);
        }
    }

    #[test]
    fn pair_is_conjugate_and_attracting(p in pencil(12)) {
        let opts = SolverOptions::default();
        let spec = solve_mode(&p, &opts).unwrap();
        prop_assert_eq!(spec.pair.minus(), spec.pair.plus().conj());
        let plus = spec.pair.plus();
        let from_conj = newton_refine(&p, plus.conj(), &opts).unwrap();
        prop_assert!(rel(from_conj, plus.conj()) < 1e-12);
    }

    #[test]
    fn solver_matches_polynomial_oracle(p in pencil(12)) {
        let spec = solve_mode(&p, &SolverOptions::default()).unwrap();
        let oracle = polynomial_roots(&p).unwrap();
        let m = match_roots(&spec.all_roots(), &oracle).unwrap();
        prop_assert!(m.max_deviation < 1e-8, "deviation {}", m.max_deviation);
    }

    #[test]
    fn mode_system_matches_polynomial(p in pencil(8)) {
        let sys = build_mode_system(&p).unwrap();
        let coeffs = p.to_polynomial().unwrap();
        let chi = sys.characteristic_polynomial();
        prop_assert_eq!(chi.len(), coeffs.len());
        for (c, q) in chi.iter().zip(&coeffs) {
            prop_assert!((c - q).abs() <= 1e-12 * q.abs(), "{} vs {}", c, q);
        }
        let rate_sum: f64 = p.ladder().rates().iter().sum();
        prop_assert!((sys.trace() + rate_sum).abs() <= 1e-12 * rate_sum);
        let spec = solve_mode(&p, &SolverOptions::default()).unwrap();
        let root_sum: Complex64 = spec.all_roots().iter().sum();
        prop_assert!((root_sum - sys.trace()).norm() <= 1e-12 * (rate_sum + 2.0 * p.a()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contour_encloses_all_zeros(p in pencil(12)) {
        let n = p.ladder().len();
        let c = ladder_contour(&p, n).unwrap();
        let cert = count_zeros(&p, &c).unwrap();
        prop_assert_eq!(cert.zeros_inferred, n as i64 + 2);
        prop_assert!(cert.max_quadrature_defect < 0.25);
    }
}

proptest! {
    #[test]
    fn constant_d_mirror_symmetry_and_quadrature(r in 0.05f64..0.95) {
        let closed = constant_d(r).unwrap();
        let quad = constant_d_quadrature(r, &QuadratureOptions::default()).unwrap().value();
        prop_assert!((closed - quad).norm() < 1e-8);
        prop_assert!(closed.re > 0.0 && closed.im > 0.0);
        let mirrored = constant_d(1.0 - r).unwrap();
        prop_assert!((closed.re - mirrored.im).abs() < 1e-12 * closed.re);
    }

    #[test]
    fn regime_follows_threshold(xi in 0.01f64..0.99, r in 0.01f64..0.99) {
        let threshold = 0.5 * (r + 1.0);
        prop_assume!((xi - threshold).abs() > 1e-9);
        let expected = if xi < threshold { Regime::TendsToAxis } else { Regime::UnboundedDecay };
        prop_assert_eq!(classify_regime(xi, r), expected);
        prop_assert_eq!(classify_regime(xi, 1.0), Regime::TendsToAxis);
    }

    #[test]
    fn power_law_prediction_trend_matches_regime(
        alpha in 0.2f64..0.8,
        beta in 0.8f64..1.5,
        xi in 0.1f64..0.9,
    ) {
        let family = PowerLawFamily::new(0.5, 1.0, alpha, beta, 10).unwrap();
        let r = family.r();
        prop_assume!(r > 0.05 && r < 0.95);
        let regime = classify_regime(xi, r);
        prop_assume!(regime != Regime::ConstantOffset);
        let re: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&a| predict_power_law(a, xi, &family).unwrap().value.re.abs())
            .collect();
        match regime {
            Regime::TendsToAxis => prop_assert!(re[0] > re[1] && re[1] > re[2]),
            Regime::UnboundedDecay => prop_assert!(re[0] < re[1] && re[1] < re[2]),
            Regime::ConstantOffset => unreachable!(),
        }
    }

    #[test]
    fn slope_fit_is_exact_on_power_laws(slope in -3.0f64..3.0, c in 0.01f64..100.0) {
        let points: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let x = 10f64.powf(0.5 * i as f64);
                (x, c * x.powf(slope))
            })
            .collect();
        let fit = log_log_slope(&points).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-12);
        prop_assert!((fit.prefactor() - c).abs() < 1e-11 * c);
        prop_assert!(fit.half_width < 1e-10);
    }

    #[test]
    fn matching_recovers_permutations(
        roots in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..10),
        shuffle in any::<prop::sample::Index>(),
    ) {
        let a: Vec<Complex64> = roots.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
        let mut b = a.clone();
        let k = shuffle.index(b.len());
        b.rotate_left(k);
        let m = match_roots(&a, &b).unwrap();
        prop_assert_eq!(m.max_deviation, 0.0);
        for (i, &j) in m.pairs.iter().enumerate() {
            prop_assert_eq!(a[i], b[j]);
        }
    }
}
