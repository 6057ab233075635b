use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use skewsop::fundamental::{fundamental_suite, FundamentalContext};
use skewsop::kernels::{density_scan, kernel_suite};
use skewsop::mc::{compare_histogram, marginal_density_quadrature, metropolis_sample, EnsembleSpec, McConfig};
use skewsop::moments::seed_moments;
use skewsop::operators::{build_operators, operator_suite, OperatorSet};
use skewsop::report::InvariantReport;
use skewsop::sop::{orthonormality_residual, stability_telemetry};
use skewsop::window::{compatibility_suite, folded_deformation, folding, ladder, ode_d};
use skewsop::{build_family, Dd, SopFamily, System, Wave};
use thiserror::Error;

use crate::config::RunConfig;

/// Step for the finite-difference deformation oracles.
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Compute(#[from] skewsop::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, RunError>;

fn family(cfg: &RunConfig) -> Result<SopFamily> {
    Ok(if cfg.digits <= 16 {
        build_family::<f64>(&cfg.potential, cfg.beta, cfg.n_scalar)?
    } else {
        build_family::<Dd>(&cfg.potential, cfg.beta, cfg.n_scalar)?
    })
}

fn tag(cfg: &RunConfig) -> String {
    format!("beta{}", cfg.beta.as_int())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Replaces built-in tolerances by the configured ones.
fn apply_tolerances(cfg: &RunConfig, reports: Vec<InvariantReport>) -> Vec<InvariantReport> {
    for id in cfg.tolerances.keys() {
        if !reports.iter().any(|r| &r.invariant_id == id) {
            eprintln!("warning: tolerance given for unknown invariant `{id}`");
        }
    }
    reports
        .into_iter()
        .map(|r| match cfg.tolerances.get(&r.invariant_id) {
            Some(&t) => r.with_tolerance(t),
            None => r,
        })
        .collect()
}

fn finish(cfg: &RunConfig, name: &str, reports: Vec<InvariantReport>) -> Result<Vec<InvariantReport>> {
    let reports = apply_tolerances(cfg, reports);
    write_json(&cfg.out, name, &reports)?;
    Ok(reports)
}

fn family_reports(cfg: &RunConfig, family: &SopFamily) -> Result<Vec<InvariantReport>> {
    let t = tag(cfg);
    let moments = seed_moments::<Dd>(&cfg.potential, cfg.n_scalar + 2 * cfg.potential.d(), 1e-28)?;
    Ok(vec![
        InvariantReport::new(format!("{t}.moments.recursion"), moments.recursion_residual(), 1e-10),
        InvariantReport::new(format!("{t}.sop.antisymmetry"), family.antisymmetry_residual, 1e-10),
        InvariantReport::new(format!("{t}.sop.construction"), family.construction_residual, 1e-8),
        InvariantReport::new(format!("{t}.sop.orthonormality"), orthonormality_residual(family)?, 1e-8),
    ])
}

fn deformation_indices(cfg: &RunConfig) -> Vec<u32> {
    let mut ks = vec![2.min(2 * cfg.potential.d() as u32), cfg.k];
    ks.dedup();
    ks
}

fn kernel_points() -> Vec<(f64, f64)> {
    (0..24).map(|i| (-2.3 + 0.2 * i as f64, 2.1 - 0.17 * i as f64)).collect()
}

fn complex_points(cfg: &RunConfig) -> Vec<Complex64> {
    cfg.xs.iter().map(|&x| Complex64::new(x, cfg.imag)).collect()
}

#[derive(Serialize)]
struct BuildSummary<'a> {
    convention: &'static str,
    beta: u32,
    potential: &'a [f64],
    n_scalar: usize,
    working_digits: u32,
    construction_residual: f64,
    antisymmetry_residual: f64,
    f64_digits_lost: Option<f64>,
    reports: &'a [InvariantReport],
}

/// Family, moments and band operators.
pub fn build(cfg: &RunConfig) -> Result<Vec<InvariantReport>> {
    let family = family(cfg)?;
    let set = build_operators(&family)?;
    let moments = seed_moments::<Dd>(&cfg.potential, cfg.n_scalar + 2 * cfg.potential.d(), 1e-28)?;
    moments.write_csv(create(&cfg.out, "moments.csv")?)?;
    family.write_csv(create(&cfg.out, "family.csv")?)?;
    family.write_g_csv(create(&cfg.out, "g.csv")?)?;
    set.q.write_csv(create(&cfg.out, "Q.csv")?)?;
    set.p.write_csv(create(&cfg.out, "P.csv")?)?;
    set.r.write_csv(create(&cfg.out, "R.csv")?)?;
    let reports = apply_tolerances(cfg, family_reports(cfg, &family)?);
    // the f64 construction may legitimately fail at large n; the summary then omits it
    let telemetry = stability_telemetry(&cfg.potential, cfg.beta, cfg.n_scalar).ok();
    let summary = BuildSummary {
        convention: cfg.beta.tag(),
        beta: cfg.beta.as_int(),
        potential: cfg.potential.coeffs(),
        n_scalar: cfg.n_scalar,
        working_digits: family.digits,
        construction_residual: family.construction_residual,
        antisymmetry_residual: family.antisymmetry_residual,
        f64_digits_lost: telemetry.map(|t| t.digits_lost),
        reports: &reports,
    };
    write_json(&cfg.out, "build.json", &summary)?;
    Ok(reports)
}

/// Every invariant suite.
pub fn check(cfg: &RunConfig) -> Result<Vec<InvariantReport>> {
    let family = family(cfg)?;
    let set = build_operators(&family)?;
    let d = set.d;
    let mut reports = family_reports(cfg, &family)?;
    reports.extend(operator_suite(&set, &family, &cfg.xs)?);
    let ks = deformation_indices(cfg);
    reports.extend(compatibility_suite(&family, &set, d..cfg.n + 1, &cfg.xs, &ks, FD_STEP)?);
    let gcd_tol = if d == 1 { 1e-8 } else { 1e-6 };
    reports.extend(kernel_suite(&set, &family, cfg.n, &kernel_points(), &cfg.grid, gcd_tol)?);
    // the fundamental system first has independent columns at N = 2d
    let ctx = FundamentalContext::new(&family, cfg.k, FD_STEP)?;
    let certs: Vec<usize> = [d + 1, d + 3].into_iter().filter(|k| 2 * k < cfg.n_scalar).collect();
    reports.extend(fundamental_suite(&ctx, cfg.n.max(2 * d), &complex_points(cfg), &certs)?);
    finish(cfg, "check.json", reports)
}

/// Density on the grid, with the joint-density oracle for 2N ≤ 4.
pub fn density(cfg: &RunConfig) -> Result<Vec<InvariantReport>> {
    let family = family(cfg)?;
    let t = tag(cfg);
    let scan = density_scan(&family, cfg.n, &cfg.grid)?;
    scan.write_csv(create(&cfg.out, "density.csv")?)?;
    let mut reports = vec![
        InvariantReport::new(format!("{t}.density.normalization"), scan.normalization_residual(), 1e-6),
        InvariantReport::new(format!("{t}.density.nonnegative"), (-scan.min_rho).max(0.0), 1e-9),
        InvariantReport::new(format!("{t}.density.parity"), scan.parity, 1e-9),
    ];
    if 2 * cfg.n <= 4 {
        let spec = EnsembleSpec::new(cfg.beta, 2 * cfg.n, &cfg.potential)?;
        let oracle = marginal_density_quadrature(&spec, &cfg.grid)?;
        oracle.write_csv(create(&cfg.out, "density_oracle.csv")?)?;
        let diff = oracle.rho.iter().zip(&scan.rho).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        reports.push(InvariantReport::new(format!("{t}.density.oracle"), diff, 1e-6));
    }
    finish(cfg, "density.json", reports)
}

fn system_name(system: System) -> &'static str {
    match system {
        System::Plain => "plain",
        System::Shifted => "shifted",
    }
}

/// F, A_N, D_N and U_K^N at each x, for both systems.
pub fn fold(cfg: &RunConfig) -> Result<Vec<InvariantReport>> {
    let family = family(cfg)?;
    let set: OperatorSet = build_operators(&family)?;
    for (i, &x) in cfg.xs.iter().enumerate() {
        for system in [System::Plain, System::Shifted] {
            let f = folding(&set, cfg.n, x, system)?;
            let stem = format!("fold/x{i}_{}", system_name(system));
            f.f.write_csv(create(&cfg.out, &format!("{stem}_F.csv"))?)?;
            ladder(&set, cfg.n, x, system)?.write_csv(create(&cfg.out, &format!("{stem}_A.csv"))?)?;
            ode_d(&set, &f).direct.write_csv(create(&cfg.out, &format!("{stem}_D.csv"))?)?;
            folded_deformation(&set, &f, cfg.k).direct.write_csv(create(&cfg.out, &format!("{stem}_U.csv"))?)?;
        }
    }
    let reports = compatibility_suite(&family, &set, cfg.n..cfg.n + 1, &cfg.xs, &[cfg.k], FD_STEP)?;
    finish(cfg, "fold.json", reports)
}

/// The Ψ-system fundamental matrix at x + i·imag with per-column residuals.
pub fn fund(cfg: &RunConfig) -> Result<Vec<InvariantReport>> {
    let family = family(cfg)?;
    let ctx = FundamentalContext::new(&family, cfg.k, FD_STEP)?;
    let t = tag(cfg);
    let mut reports = Vec::new();
    for (i, z) in complex_points(cfg).into_iter().enumerate() {
        let m = ctx.fundamental_matrix(Wave::Psi, cfg.n, z)?;
        m.write_csv(create(&cfg.out, &format!("fund/x{i}.csv"))?)?;
        for c in &m.residuals {
            let id = format!("{t}.fund.x{i}.{}", c.label);
            reports.push(InvariantReport::new(format!("{id}.ode"), c.ode, 1e-6));
            reports.push(InvariantReport::new(format!("{id}.shift"), c.shift, 1e-6));
            reports.push(InvariantReport::new(format!("{id}.deformation"), c.deformation, 1e-6));
        }
        reports.push(InvariantReport::above(format!("{t}.fund.x{i}.gram_det"), m.gram_det, 1e-8));
    }
    finish(cfg, "fund.json", reports)
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    seed: u64,
    samples: usize,
    step: f64,
    acceptance: f64,
    autocorrelation: f64,
    warning: Option<String>,
    chi2: f64,
    dof: usize,
    p_value: f64,
    reports: &'a [InvariantReport],
}

/// Metropolis run on the 2N-level joint density, binned against the kernel density.
pub fn sample(cfg: &RunConfig) -> Result<Vec<InvariantReport>> {
    let family = family(cfg)?;
    let spec = EnsembleSpec::new(cfg.beta, 2 * cfg.n, &cfg.potential)?;
    let run = metropolis_sample(&spec, &McConfig { samples: cfg.samples, seed: cfg.seed, ..McConfig::default() })?;
    if let Some(w) = &run.warning {
        eprintln!("warning: {w}");
    }
    run.write_csv(create(&cfg.out, "samples.csv")?)?;
    let a = cfg.grid.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let hist = compare_histogram(&run, &family, a, 30)?;
    hist.write_csv(create(&cfg.out, "histogram.csv")?)?;
    let reports =
        apply_tolerances(cfg, vec![InvariantReport::above(format!("{}.sample.chi2_p", tag(cfg)), hist.p_value, 0.01)]);
    let summary = SampleSummary {
        seed: run.seed,
        samples: run.samples.len(),
        step: run.step,
        acceptance: run.acceptance,
        autocorrelation: run.autocorrelation,
        warning: run.warning.as_ref().map(|w| w.to_string()),
        chi2: hist.chi2,
        dof: hist.dof,
        p_value: hist.p_value,
        reports: &reports,
    };
    write_json(&cfg.out, "sample.json", &summary)?;
    Ok(reports)
}
