use skewsop::operators::build_operators;
use skewsop::window::{compatibility_suite, folding, inverse_ladder, ladder, window, window_residuals};
use skewsop::{build_family, Beta, Dd, Error, Potential, System, Wave};

#[test]
fn window_has_2d_entries_and_rejects_small_n() {
    let f = build_family::<Dd>(&Potential::quartic(), Beta::Four, 24).unwrap();
    let w = window(&f, 3, 0.4, Wave::Phi).unwrap();
    assert_eq!(w.values.len(), 4 * w.d);
    let full = f.phi_all(0.4);
    assert_eq!(w.values[..], full[2..10]);
    assert!(matches!(window(&f, 1, 0.4, Wave::Phi), Err(Error::IndexError(_))));
    assert!(matches!(window(&f, 12, 0.4, Wave::Phi), Err(Error::IndexError(_))));
}

#[test]
fn ladder_and_inverse_are_inverse() {
    for beta in [Beta::One, Beta::Four] {
        let f = build_family::<Dd>(&Potential::quartic(), beta, 24).unwrap();
        let set = build_operators(&f).unwrap();
        for system in [System::Plain, System::Shifted] {
            for x in [-1.1, 0.25, 1.9] {
                let a = ladder(&set, 3, x, system).unwrap();
                let b = inverse_ladder(&set, 4, x, system).unwrap();
                let p = b.matmul(&a);
                let eye = skewsop::qlinalg::QMatrix::identity(p.nq());
                assert!((&p - &eye).max_abs() < 1e-8, "{beta:?} {system:?} x = {x}");
            }
        }
    }
}

#[test]
fn ladder_steps_the_wave_window() {
    let f = build_family::<Dd>(&Potential::gaussian(), Beta::Four, 20).unwrap();
    let set = build_operators(&f).unwrap();
    for wave in [Wave::Phi, Wave::Psi] {
        let system = f.beta.system_for(wave);
        let w0 = window(&f, 2, 0.7, wave).unwrap().values;
        let w1 = window(&f, 3, 0.7, wave).unwrap().values;
        let up = ladder(&set, 2, 0.7, system).unwrap().matvec(&w0);
        for (a, b) in up.iter().zip(&w1) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn folding_reproduces_its_window() {
    let f = build_family::<Dd>(&Potential::quartic(), Beta::One, 24).unwrap();
    let set = build_operators(&f).unwrap();
    let fold = folding(&set, 3, 0.6, System::Shifted).unwrap();
    assert!(fold.window_identity_residual() < 1e-10);
    assert!(fold.off_window_leak() < 1e-10);
}

#[test]
fn window_residuals_are_small() {
    let f = build_family::<Dd>(&Potential::quartic(), Beta::Four, 24).unwrap();
    let set = build_operators(&f).unwrap();
    let r = window_residuals(&f, &set, Wave::Phi, 3, 0.5, 2, 1e-5).unwrap();
    assert!(r.ladder < 1e-8 && r.inverse_ladder < 1e-8);
    assert!(r.ode < 1e-6 && r.deformation_window < 1e-6);
    assert!(r.compat_x_u < 1e-6);
}

#[test]
fn compatibility_suite_passes_gaussian() {
    for beta in [Beta::One, Beta::Four] {
        let f = build_family::<Dd>(&Potential::gaussian(), beta, 20).unwrap();
        let set = build_operators(&f).unwrap();
        for r in compatibility_suite(&f, &set, 1..4, &[-0.5, 0.8], &[2], 1e-5).unwrap() {
            assert!(r.pass, "{} = {:e} (tol {:e})", r.invariant_id, r.residual, r.tolerance);
        }
    }
}
