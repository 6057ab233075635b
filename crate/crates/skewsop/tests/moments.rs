use skewsop::moments::{epsilon_table, lower_moments, seed_moments, weight_moments, GridSpec};
use skewsop::quadrature::GaussLegendre;
use skewsop::{Dd, Error, Potential};
use statrs::function::erf::erf;

const SQRT_PI: f64 = 1.772_453_850_905_516;

#[test]
fn gaussian_moments_match_closed_form() {
    let t = seed_moments::<Dd>(&Potential::gaussian(), 6, 1e-28).unwrap();
    let mu: Vec<f64> = t.mu.iter().map(|m| m.to_f64()).collect();
    assert!((mu[0] - SQRT_PI).abs() < 1e-15);
    assert!(mu[1].abs() < 1e-15);
    assert!((mu[2] - SQRT_PI / 2.0).abs() < 1e-15);
    assert!((mu[4] - 3.0 * SQRT_PI / 4.0).abs() < 1e-15);
}

#[test]
fn odd_moments_vanish_for_symmetric_potentials() {
    for pot in [Potential::gaussian(), Potential::quartic()] {
        let t = seed_moments::<f64>(&pot, 12, 1e-15).unwrap();
        for k in (1..12).step_by(2) {
            assert!(t.mu[k].abs() < 1e-14, "μ_{k} = {}", t.mu[k]);
        }
    }
}

#[test]
fn quartic_mu0_matches_gauss_legendre() {
    let pot = Potential::quartic();
    let t = seed_moments::<f64>(&pot, 4, 1e-15).unwrap();
    let gl = GaussLegendre::new(40);
    let oracle: f64 = (0..24).map(|p| {
        let a = -6.0 + 0.5 * p as f64;
        gl.integrate(a, a + 0.5, |x| (-2.0 * pot.v(x)).exp())
    }).sum();
    assert!((t.mu[0] - oracle).abs() < 1e-10);
}

#[test]
fn recursion_extends_moments() {
    let g = seed_moments::<Dd>(&Potential::gaussian(), 2, 1e-28).unwrap();
    let ext = g.extend_moments(4).unwrap();
    assert!((ext.mu[4].to_f64() - 3.0 * SQRT_PI / 4.0).abs() < 1e-14);
    let same = g.extend_moments(1).unwrap();
    assert_eq!(same.mu.len(), g.mu.len());

    let q = seed_moments::<Dd>(&Potential::quartic(), 4, 1e-28).unwrap();
    let ext = q.extend_checked(8).unwrap();
    let direct = seed_moments::<Dd>(&Potential::quartic(), 9, 1e-28).unwrap();
    assert!(((ext.mu[8] - direct.mu[8]).to_f64() / direct.mu[8].to_f64()).abs() < 1e-8);
    assert!(direct.recursion_residual() < 1e-25);
}

#[test]
fn epsilon_integrals() {
    let pot = Potential::gaussian();
    let t = epsilon_table(&pot, 4, GridSpec { lo: -3.0, hi: 3.0, n: 601 }).unwrap();
    assert!(t.h(0, 0.0).unwrap().to_f64().abs() < 1e-25);
    let closed = (2.0 * std::f64::consts::PI).sqrt() * erf(1.0 / 2f64.sqrt());
    assert!((t.h(0, 1.0).unwrap().to_f64() - closed).abs() < 1e-10);
    for x in [0.3, 1.7, 2.9] {
        let (a, b) = (t.h(0, x).unwrap().to_f64(), t.h(0, -x).unwrap().to_f64());
        assert!((a + b).abs() < 1e-14);
    }
    assert!(t.derivative_residual() < 1e-4);
    assert!(matches!(t.h(0, 3.5), Err(Error::DomainError { .. })));
}

#[test]
fn epsilon_tails_approach_single_moments() {
    let pot = Potential::quartic();
    let m = weight_moments::<f64>(&pot, 1, 6, 1e-15).unwrap();
    let f = lower_moments::<f64>(&pot, 4, 8.0, 1e-15).unwrap();
    for k in 0..5 {
        assert!((f[k] - m.mu[k]).abs() < 1e-12, "k = {k}");
    }
}

#[test]
fn invalid_potentials_are_rejected() {
    assert!(matches!(Potential::new(vec![0.0, 0.0, 1.0]), Err(Error::InvalidPotential(_))));
    assert!(matches!(Potential::new(vec![0.0, -1.0]), Err(Error::InvalidPotential(_))));
    assert!(Potential::new(vec![0.3, -0.5, 0.2, 1.0]).is_ok());
}
