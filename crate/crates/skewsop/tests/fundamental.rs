use num_complex::Complex64;
use skewsop::fundamental::{
    fundamental_suite, gram_determinant, moment_function, orthogonality_certificates, AuxKind, FundamentalContext,
    MomentFunction, Transforms,
};
use skewsop::{build_family, Beta, Dd, Error, Potential, Wave};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn moment_functions() {
    let pot = Potential::quartic();
    assert!(MomentFunction::new(&pot, 3).is_err());
    for j in 0..=2 {
        let f = MomentFunction::new(&pot, j).unwrap();
        assert!(f.identity_residual(&[-1.2, -0.4, 0.3, 1.1], 1e-5).unwrap() < 1e-7);
        // the ε-form and the antiderivative form agree on the real line
        for x in [-0.8, 0.6] {
            let a = f.value(x).unwrap();
            let b = f.value_c(c(x, 0.0));
            assert!((a - b.re).abs() < 1e-9 * a.abs().max(1.0) && b.im.abs() < 1e-12);
        }
    }
    assert!(matches!(moment_function(&pot, 0, 50.0), Err(Error::DomainError { .. })));
}

#[test]
fn gaussian_aux_solution_solves_the_ode() {
    let f = build_family::<Dd>(&Potential::gaussian(), Beta::Four, 24).unwrap();
    let ctx = FundamentalContext::new(&f, 2, 1e-5).unwrap();
    for i in 0..10 {
        let x = c(-2.0 + 0.45 * i as f64, 0.5);
        let r = ctx.solution_residuals(AuxKind::Moment(0), Wave::Psi, x).unwrap();
        assert!(r.ode < 1e-6, "x = {x}: {:e}", r.ode);
        assert!(r.recursion < 1e-6);
    }
}

#[test]
fn cauchy_integral_matches_large_z_expansion() {
    let f = build_family::<Dd>(&Potential::quartic(), Beta::One, 16).unwrap();
    let t = Transforms::new(&f).unwrap();
    let z = c(0.0, 50.0);
    let direct = t.cauchy_integral(Wave::Phi, z).unwrap();
    let moments: Vec<Vec<f64>> = (0..6).map(|k| t.wave_moment(Wave::Phi, k)).collect();
    for (n, v) in direct.iter().enumerate() {
        let series: Complex64 = (0..6).map(|k| moments[k][n] / z.powu(k as u32 + 1)).sum();
        assert!((v - series).norm() < 1e-10, "n = {n}");
    }
    assert!(matches!(t.cauchy_integral(Wave::Psi, c(0.3, 0.01)), Err(Error::OnRealAxis { .. })));
}

#[test]
fn gaussian_matrix_has_no_higher_moment_columns() {
    let f = build_family::<Dd>(&Potential::gaussian(), Beta::One, 24).unwrap();
    let ctx = FundamentalContext::new(&f, 2, 1e-5).unwrap();
    let m = ctx.fundamental_matrix(Wave::Psi, 2, c(0.4, 0.6)).unwrap();
    assert_eq!(m.columns.len(), 2 * m.d + 1);
    assert!(!m.labels.iter().any(|l| l == "f1"));
    assert!(m.gram_det > 1e-8);
    assert!((gram_determinant(&m.columns) - m.gram_det).abs() < 1e-12);
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("row,column,re,im"));
}

#[test]
fn suite_passes_for_quartic() {
    let xs = [c(1.0, 0.5), c(-0.6, 0.8), c(0.3, -0.4)];
    for beta in [Beta::One, Beta::Four] {
        let f = build_family::<Dd>(&Potential::quartic(), beta, 24).unwrap();
        let ctx = FundamentalContext::new(&f, 4, 1e-5).unwrap();
        for r in fundamental_suite(&ctx, 4, &xs, &[3, 5]).unwrap() {
            assert!(r.pass, "{} = {:e} (tol {:e})", r.invariant_id, r.residual, r.tolerance);
        }
    }
}

#[test]
fn certificates() {
    let f = build_family::<Dd>(&Potential::quartic(), Beta::One, 16).unwrap();
    let r = orthogonality_certificates(&f, 4).unwrap();
    assert!(r.single < 1e-8 && r.double < 1e-8);
    assert!(r.negative_control > 1e-6);
    assert!(orthogonality_certificates(&f, 8).is_err());
}
