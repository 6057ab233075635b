use proptest::prelude::*;
use skewsop::qlinalg::{QCell, QMatrix, Triangle};

fn random_matrix(nq: usize, seed: &[f64]) -> QMatrix {
    QMatrix::from_fn(nq, |i, j| seed[(i * 7 + j * 3) % seed.len()] + (i as f64 - j as f64) * 0.1)
}

#[test]
fn dual_of_identity_and_lower_cell() {
    assert_eq!(QMatrix::<f64>::identity(3).dual(), QMatrix::identity(3));
    let c = QCell::new(2.0, 0.0, 3.0, 5.0);
    assert_eq!(c.dual(), QCell::new(5.0, 0.0, -3.0, 2.0));
}

#[test]
fn cell_inverse() {
    let c = QCell::new(2.0, 0.0, 3.0, 4.0);
    assert_eq!(c.inverse().unwrap(), QCell::new(0.5, 0.0, -0.375, 0.25));
    assert_eq!(QCell::<f64>::identity().inverse().unwrap(), QCell::identity());
    assert!(QCell::new(1.0, 2.0, 2.0, 4.0).inverse().is_err());
}

#[test]
fn shift_transpose_is_its_dual() {
    for (nq, d) in [(8, 1), (10, 2), (12, 3)] {
        let l = QMatrix::<f64>::shift_power(nq, d);
        assert_eq!(l.transpose(), l.dual());
        // (Λᵗ)^d Λ^d = 1 − Π_d
        let lhs = l.transpose().matmul(&l);
        assert_eq!(lhs, QMatrix::proj_upper(nq, d));
    }
}

#[test]
fn projections_commute_with_shifts() {
    let nq = 12;
    for (n, d) in [(2, 1), (4, 2), (5, 3), (7, 2)] {
        let lt = QMatrix::<f64>::shift_power(nq, d).transpose();
        let lhs = QMatrix::proj_upper(nq, n + d).matmul(&lt);
        let rhs = lt.matmul(&QMatrix::proj_upper(nq, n));
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn triangular_inverse_cases() {
    let z = QMatrix::<f64>::zeros(4);
    assert_eq!(QMatrix::triangular_inverse(&z, Triangle::StrictlyLower).unwrap(), QMatrix::identity(4));
    let t = QMatrix::from_fn(5, |i, j| if i > j { 0.3 * (i + 2 * j) as f64 - 0.7 } else { 0.0 });
    let inv = QMatrix::triangular_inverse(&t, Triangle::StrictlyLower).unwrap();
    let prod = (&QMatrix::identity(5) - &t).matmul(&inv);
    assert!((&prod - &QMatrix::identity(5)).max_abs() < 1e-12);
    assert!(QMatrix::triangular_inverse(&t, Triangle::StrictlyUpper).is_err());
    // single nilpotent band: the Neumann series terminates
    let band = QMatrix::from_fn(4, |i, j| if i == j + 2 { 1.0 } else { 0.0 });
    let inv = QMatrix::triangular_inverse(&band, Triangle::StrictlyLower).unwrap();
    let mut series = QMatrix::identity(4);
    let mut power = band.clone();
    while power.max_abs() > 0.0 {
        series = &series + &power;
        power = power.matmul(&band);
    }
    assert_eq!(inv, series);
}

proptest! {
    #[test]
    fn dual_is_an_anti_automorphism(seed in proptest::collection::vec(-2.0f64..2.0, 16)) {
        let a = random_matrix(3, &seed);
        let b = random_matrix(3, &seed[3..]);
        prop_assert_eq!(a.dual().dual(), a.clone());
        let lhs = a.matmul(&b).dual();
        let rhs = b.dual().matmul(&a.dual());
        prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
    }

    #[test]
    fn cell_inverse_multiplies_back(a in 0.5f64..3.0, b in -2.0f64..2.0, c in -2.0f64..2.0, e in 0.5f64..3.0) {
        let m = QCell::new(a, b * 0.1, c, e);
        let p = m * m.inverse().unwrap();
        prop_assert!((p - QCell::identity()).max_abs() < 1e-12);
    }
}
