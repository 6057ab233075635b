use skewsop::kernels::density;
use skewsop::mc::{
    compare_histogram, direct_partition_integral, marginal_density_quadrature, metropolis_sample,
    partition_from_normalizations, EnsembleSpec, McConfig,
};
use skewsop::{build_family, Beta, Dd, Potential};

fn short(seed: u64) -> McConfig {
    McConfig { samples: 10_000, burn_in: 500, thin: 2, step: None, seed }
}

#[test]
fn ensemble_shape() {
    let g = Potential::gaussian();
    let one = EnsembleSpec::new(Beta::One, 4, &g).unwrap();
    assert_eq!((one.levels(), one.multiplicity(), one.kappa()), (4, 1, 0.5));
    let four = EnsembleSpec::new(Beta::Four, 4, &g).unwrap();
    assert_eq!((four.levels(), four.multiplicity(), four.kappa()), (2, 2, 1.0));
    assert!(EnsembleSpec::new(Beta::One, 3, &g).is_err());
}

#[test]
fn zero_step_chain_stays_put() {
    let spec = EnsembleSpec::new(Beta::Four, 4, &Potential::gaussian()).unwrap();
    let run = metropolis_sample(&spec, &McConfig { step: Some(0.0), ..short(3) }).unwrap();
    assert!(run.samples.iter().all(|s| s == &run.samples[0]));
    assert!(run.warning.is_some());
    assert!(metropolis_sample(&spec, &McConfig { samples: 100, ..short(3) }).is_err());
}

#[test]
fn seeded_runs_are_reproducible() {
    let spec = EnsembleSpec::new(Beta::One, 2, &Potential::quartic()).unwrap();
    let a = metropolis_sample(&spec, &short(11)).unwrap();
    let b = metropolis_sample(&spec, &short(11)).unwrap();
    let c = metropolis_sample(&spec, &short(12)).unwrap();
    assert_eq!(a.samples, b.samples);
    assert_ne!(a.samples, c.samples);
    let mut x = Vec::new();
    let mut y = Vec::new();
    a.write_csv(&mut x).unwrap();
    b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn two_level_oracle_matches_kernel_density() {
    let xs: Vec<f64> = (0..25).map(|i| -2.4 + 0.2 * i as f64).collect();
    for beta in [Beta::One, Beta::Four] {
        let pot = Potential::quartic();
        let f = build_family::<Dd>(&pot, beta, 8).unwrap();
        let spec = EnsembleSpec::new(beta, 2, &pot).unwrap();
        let oracle = marginal_density_quadrature(&spec, &xs).unwrap();
        for (a, b) in oracle.rho.iter().zip(density(&f, 1, &xs).unwrap()) {
            assert!((a - b).abs() < 1e-6);
        }
        let z = direct_partition_integral(&spec);
        assert!((z - partition_from_normalizations(&f, 1).unwrap()).abs() < 1e-6 * z);
    }
}

#[test]
fn histogram_is_consistent_with_density() {
    let pot = Potential::gaussian();
    let f = build_family::<Dd>(&pot, Beta::Four, 8).unwrap();
    let spec = EnsembleSpec::new(Beta::Four, 2, &pot).unwrap();
    let run = metropolis_sample(&spec, &McConfig { samples: 20_000, ..McConfig::default() }).unwrap();
    let h = compare_histogram(&run, &f, 3.0, 20).unwrap();
    assert!(h.p_value > 1e-3, "p = {}", h.p_value);
    let total: f64 = h.expected.iter().sum();
    assert!((total - h.observed.iter().sum::<u64>() as f64).abs() < 1e-6 * total);
}
