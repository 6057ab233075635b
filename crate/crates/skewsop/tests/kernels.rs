use skewsop::kernels::{density, density_scan, gcd_residual, hat_pair, kernel, kernel_suite};
use skewsop::operators::build_operators;
use skewsop::{build_family, Beta, Dd, Potential};

fn grid() -> Vec<f64> {
    (0..61).map(|i| -3.0 + 0.1 * i as f64).collect()
}

#[test]
fn empty_sum_is_zero() {
    let f = build_family::<Dd>(&Potential::gaussian(), Beta::Four, 8).unwrap();
    let k = kernel(&f, 0, 0.3, -0.8).unwrap();
    assert_eq!((k.s, k.d, k.i), (0.0, 0.0, 0.0));
    assert_eq!(hat_pair(Beta::One, &[1.0, 2.0], &[3.0, 4.0], 0), 0.0);
}

#[test]
fn density_integrates_to_level_count() {
    for beta in [Beta::One, Beta::Four] {
        let f = build_family::<Dd>(&Potential::gaussian(), beta, 12).unwrap();
        for n in 1..4 {
            let s = density_scan(&f, n, &grid()).unwrap();
            assert!(s.normalization_residual() < 1e-8, "{beta:?} N = {n}: ∫ρ = {}", s.integral);
            assert!(s.min_rho > 0.0);
            assert!(s.parity < 1e-12);
        }
    }
}

#[test]
fn density_is_kernel_diagonal() {
    let f = build_family::<Dd>(&Potential::quartic(), Beta::One, 12).unwrap();
    let xs = [-1.0, 0.0, 0.45];
    let rho = density(&f, 3, &xs).unwrap();
    for (x, r) in xs.iter().zip(&rho) {
        let k = kernel(&f, 3, *x, *x).unwrap();
        assert!((k.s - r).abs() < 1e-12);
        assert!((k.s - k.s_swapped).abs() < 1e-12);
    }
}

#[test]
fn product_form_and_suite() {
    let pts: Vec<(f64, f64)> = (0..12).map(|i| (-2.0 + 0.37 * i as f64, 1.7 - 0.29 * i as f64)).collect();
    for beta in [Beta::One, Beta::Four] {
        let f = build_family::<Dd>(&Potential::quartic(), beta, 24).unwrap();
        let set = build_operators(&f).unwrap();
        assert!(gcd_residual(&set, &f, 3, &pts).unwrap() < 1e-6);
        for r in kernel_suite(&set, &f, 3, &pts, &grid(), 1e-6).unwrap() {
            assert!(r.pass, "{} = {:e} (tol {:e})", r.invariant_id, r.residual, r.tolerance);
        }
    }
}
