use skewsop::sop::{evaluate_wave, orthonormality_residual, partition_function};
use skewsop::{build_family, Beta, Dd, Error, Potential};

const SQRT_PI: f64 = 1.772_453_850_905_516;

fn coeff(f: &skewsop::SopFamily, i: usize, k: usize) -> f64 {
    f.coeffs[i][k].to_f64()
}

#[test]
fn gaussian_beta4_family() {
    let f = build_family::<Dd>(&Potential::gaussian(), Beta::Four, 8).unwrap();
    assert!((f.g[0].to_f64() - SQRT_PI / 2.0).abs() < 1e-14);
    assert!((f.g[1].to_f64() - 3.0 * SQRT_PI / 4.0).abs() < 1e-14);
    assert!((coeff(&f, 2, 0) - 0.5).abs() < 1e-14);
    assert!((coeff(&f, 3, 1) + 1.5).abs() < 1e-14);
    let w = evaluate_wave(&f, 0, 0.0).unwrap();
    assert!((w.phi - 1.0 / (SQRT_PI / 2.0).sqrt()).abs() < 1e-14);
}

#[test]
fn gaussian_beta1_family() {
    let f = build_family::<Dd>(&Potential::gaussian(), Beta::One, 8).unwrap();
    assert!((f.g[0].to_f64() - 2.0 * SQRT_PI).abs() < 1e-14);
    assert!((f.g[1].to_f64() - SQRT_PI).abs() < 1e-14);
    assert!((coeff(&f, 2, 0) + 0.5).abs() < 1e-14);
    assert!((coeff(&f, 3, 1) + 2.5).abs() < 1e-14);
    let w = evaluate_wave(&f, 0, 0.0).unwrap();
    assert!((w.phi - 1.0 / (2.0 * SQRT_PI).sqrt()).abs() < 1e-14);
}

#[test]
fn monic_with_parity() {
    for beta in [Beta::One, Beta::Four] {
        for pot in [Potential::gaussian(), Potential::quartic()] {
            let f = build_family::<Dd>(&pot, beta, 12).unwrap();
            for (i, c) in f.coeffs.iter().enumerate() {
                assert_eq!(c[i].to_f64(), 1.0);
                for k in ((i + 1) % 2..i).step_by(2) {
                    assert!(c[k].to_f64().abs() < 1e-20, "π_{i} has x^{k}");
                }
            }
        }
    }
}

#[test]
fn beta4_partner_is_derivative() {
    let f = build_family::<Dd>(&Potential::quartic(), Beta::Four, 10).unwrap();
    for x in [-1.3, 0.2, 0.9] {
        let psi = f.psi_all(x).unwrap();
        let dphi = f.dphi_all(x);
        for (a, b) in psi.iter().zip(&dphi) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn orthonormality() {
    let g = build_family::<Dd>(&Potential::gaussian(), Beta::Four, 20).unwrap();
    assert!(orthonormality_residual(&g).unwrap() < 1e-10);
    let q = build_family::<Dd>(&Potential::quartic(), Beta::One, 16).unwrap();
    assert!(orthonormality_residual(&q).unwrap() < 1e-8);
}

#[test]
fn f64_and_dd_agree_at_low_order() {
    let a = build_family::<f64>(&Potential::quartic(), Beta::One, 8).unwrap();
    let b = build_family::<Dd>(&Potential::quartic(), Beta::One, 8).unwrap();
    for (x, y) in a.g.iter().zip(&b.g) {
        assert!(((x.to_f64() - y.to_f64()) / y.to_f64()).abs() < 1e-10);
    }
}

#[test]
fn partition_and_errors() {
    let f = build_family::<Dd>(&Potential::gaussian(), Beta::Four, 8).unwrap();
    assert_eq!(partition_function(&f, 0).unwrap(), 1.0);
    let z2 = partition_function(&f, 2).unwrap();
    assert!((z2 - 2.0 * f.g[0].to_f64() * f.g[1].to_f64()).abs() < 1e-12);
    assert!(matches!(partition_function(&f, 9), Err(Error::IndexError(_))));
    assert!(matches!(evaluate_wave(&f, 8, 0.0), Err(Error::IndexError(_))));
    assert!(build_family::<Dd>(&Potential::gaussian(), Beta::Four, 7).is_err());
}
