//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skewsop::fundamental::{fundamental_suite, FundamentalContext};
use skewsop::kernels::{density_scan, gcd_matrix, gcd_residual};
use skewsop::mc::{
    compare_histogram, direct_partition_integral, marginal_density_quadrature, metropolis_sample,
    partition_from_normalizations, EnsembleSpec, McConfig,
};
use skewsop::operators::{build_operators, operator_suite, OperatorSet};
use skewsop::report::InvariantReport;
use skewsop::sop::orthonormality_residual;
use skewsop::window::{compatibility_suite, folding_polynomiality, inverse_ladder, ladder, window};
use skewsop::{build_family, Beta, Dd, Potential, SopFamily, System, Wave};

struct Case {
    name: &'static str,
    family: SopFamily,
    set: OperatorSet,
}

impl Case {
    fn d(&self) -> usize {
        self.set.d
    }

    fn label(&self) -> String {
        format!("{} β={}", self.name, self.family.beta.as_int())
    }
}

fn cases() -> Vec<Case> {
    let mut out = Vec::new();
    for (name, pot) in [("gaussian", Potential::gaussian()), ("quartic", Potential::quartic())] {
        for beta in [Beta::Four, Beta::One] {
            let family = build_family::<Dd>(&pot, beta, 24).expect("family");
            let set = build_operators(&family).expect("operators");
            out.push(Case { name, family, set });
        }
    }
    out
}

/// Outcome of one criterion: pass flag plus a one-line summary.
struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    /// The detail names the first failure, else the check with the least margin
    /// (largest residual/tolerance among upper bounds).
    fn from_checks(checks: Vec<(String, f64, f64, bool)>) -> Self {
        let pass = checks.iter().all(|c| c.3);
        let margin = |c: &&(String, f64, f64, bool)| if c.1 < c.2 { c.1 / c.2 } else { c.2 / c.1 };
        let shown = checks
            .iter()
            .find(|c| !c.3)
            .or_else(|| checks.iter().max_by(|a, b| margin(a).total_cmp(&margin(b))));
        let detail = match shown {
            Some((id, v, tol, _)) => format!("{} checks; {id} = {v:.2e} (bound {tol:.0e})", checks.len()),
            None => "no checks".into(),
        };
        Outcome { pass, detail }
    }
}

fn below(id: impl Into<String>, v: f64, tol: f64) -> (String, f64, f64, bool) {
    (id.into(), v, tol, v.is_finite() && v < tol)
}

fn above(id: impl Into<String>, v: f64, tol: f64) -> (String, f64, f64, bool) {
    (id.into(), v, tol, v.is_finite() && v > tol)
}

fn pick(reports: &[InvariantReport], suffix: &str) -> InvariantReport {
    reports
        .iter()
        .find(|r| r.invariant_id.ends_with(suffix))
        .cloned()
        .unwrap_or_else(|| panic!("no report ending in {suffix}"))
}

fn report(r: &InvariantReport, label: &str) -> (String, f64, f64, bool) {
    (format!("{label} {}", r.invariant_id), r.residual, r.tolerance, r.pass)
}

fn skew_orthonormality() -> Outcome {
    let mut checks = Vec::new();
    for (name, pot, n, tol) in [("gaussian", Potential::gaussian(), 24, 1e-10), ("quartic", Potential::quartic(), 20, 1e-8)] {
        for beta in [Beta::Four, Beta::One] {
            let t = Instant::now();
            let fam = build_family::<Dd>(&pot, beta, n).expect("family");
            let r = orthonormality_residual(&fam).expect("residual");
            let secs = t.elapsed().as_secs_f64();
            checks.push(below(format!("{name} β={} orthonormality", beta.as_int()), r, tol));
            checks.push(below(format!("{name} β={} seconds", beta.as_int()), secs, 10.0));
        }
    }
    Outcome::from_checks(checks)
}

fn operator_reports(cases: &[Case]) -> Vec<(String, Vec<InvariantReport>)> {
    let xs = [-1.3, -0.4, 0.25, 0.9, 1.7];
    cases.iter().map(|c| (c.label(), operator_suite(&c.set, &c.family, &xs).expect("operator suite"))).collect()
}

fn string_and_duality(ops: &[(String, Vec<InvariantReport>)]) -> Outcome {
    let mut checks = Vec::new();
    for (label, reps) in ops {
        for s in [".string.QP", ".string.RP", ".duality", ".qqd"] {
            checks.push(report(&pick(reps, s), label));
        }
    }
    Outcome::from_checks(checks)
}

fn lower_triangularity(ops: &[(String, Vec<InvariantReport>)]) -> Outcome {
    Outcome::from_checks(ops.iter().map(|(label, reps)| report(&pick(reps, ".lower.P"), label)).collect())
}

fn gcd(cases: &[Case]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = Vec::new();
    for c in cases {
        let points: Vec<(f64, f64)> =
            (0..100).map(|_| (rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5))).collect();
        let n = c.d() + 1;
        let tol = if c.d() == 1 { 1e-8 } else { 1e-6 };
        checks.push(below(format!("{} product form", c.label()), gcd_residual(&c.set, &c.family, n, &points).expect("gcd"), tol));
        let mut leak: f64 = 0.0;
        let mut corner = f64::INFINITY;
        for &(x, _) in points.iter().take(10) {
            let g = gcd_matrix(&c.set, n, x).expect("commutator");
            leak = leak.max(g.footprint_leak());
            corner = corner.min(g.corner_magnitude());
        }
        checks.push(below(format!("{} footprint leak", c.label()), leak, 1e-12));
        checks.push(above(format!("{} footprint corner", c.label()), corner, 1e-12));
    }
    Outcome::from_checks(checks)
}

fn ladders(cases: &[Case], ops: &[(String, Vec<InvariantReport>)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checks = Vec::new();
    for (c, (label, reps)) in cases.iter().zip(ops) {
        let d = c.d();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let x: f64 = rng.random_range(-2.5..2.5);
            for n in d..d + 4 {
                for wave in [Wave::Phi, Wave::Psi] {
                    let system = c.family.beta.system_for(wave);
                    let w0 = window(&c.family, n, x, wave).expect("window").values;
                    let w1 = window(&c.family, n + 1, x, wave).expect("window").values;
                    let a = ladder(&c.set, n, x, system).expect("ladder");
                    let b = inverse_ladder(&c.set, n + 1, x, system).expect("inverse ladder");
                    let scale = w1.iter().chain(&w0).fold(1.0f64, |m, v| m.max(v.abs()));
                    let up = a.matvec(&w0).iter().zip(&w1).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                    let down = b.matvec(&w1).iter().zip(&w0).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                    worst = worst.max(up.max(down) / scale);
                }
            }
        }
        checks.push(below(format!("{label} ladder/inverse"), worst, 1e-8));
        checks.push(report(&pick(reps, ".alpha_invertible"), label));
    }
    Outcome::from_checks(checks)
}

fn window_reports(cases: &[Case]) -> Vec<(String, Vec<InvariantReport>)> {
    let xs = [-0.7, 0.35, 1.1];
    cases
        .iter()
        .map(|c| {
            let d = c.d();
            let ks = [2u32, 2 * d as u32];
            let ks: Vec<u32> = if d == 1 { vec![2] } else { ks.to_vec() };
            (c.label(), compatibility_suite(&c.family, &c.set, d..d + 4, &xs, &ks, 1e-5).expect("window suite"))
        })
        .collect()
}

fn folding_checks(cases: &[Case], win: &[(String, Vec<InvariantReport>)]) -> Outcome {
    let mut checks = Vec::new();
    for (c, (label, reps)) in cases.iter().zip(win) {
        checks.push(report(&pick(reps, ".fold.adjacent"), label));
        let d = c.d();
        for system in [System::Plain, System::Shifted] {
            let p = folding_polynomiality(&c.set, d + 1, system, &[2 * d + 1, 0], 12).expect("polynomiality");
            checks.push(below(format!("{label} {system:?} polynomiality"), p, 1e-8));
        }
    }
    Outcome::from_checks(checks)
}

fn pick_all(win: &[(String, Vec<InvariantReport>)], suffixes: &[&str]) -> Outcome {
    let mut checks = Vec::new();
    for (label, reps) in win {
        for s in suffixes {
            checks.push(report(&pick(reps, s), label));
        }
    }
    Outcome::from_checks(checks)
}

fn fundamental(cases: &[Case]) -> Outcome {
    let xs = [
        Complex64::new(1.0, 0.5),
        Complex64::new(-0.6, 0.8),
        Complex64::new(0.3, -0.4),
        Complex64::new(1.4, 1.0),
        Complex64::new(-1.1, -0.3),
    ];
    let mut checks = Vec::new();
    for c in cases {
        let d = c.d();
        let ctx = FundamentalContext::new(&c.family, 2 * d as u32, 1e-5).expect("context");
        let reps = fundamental_suite(&ctx, 2 * d, &xs, &[d + 1, d + 3]).expect("fundamental suite");
        checks.extend(reps.iter().map(|r| report(r, &c.label())));
    }
    Outcome::from_checks(checks)
}

fn physics(cases: &[Case]) -> Outcome {
    let xs: Vec<f64> = (0..41).map(|i| -3.0 + 0.15 * i as f64).collect();
    let mut checks = Vec::new();
    for c in cases {
        let spec = EnsembleSpec::new(c.family.beta, 2, &c.family.potential).expect("spec");
        let oracle = marginal_density_quadrature(&spec, &xs).expect("oracle");
        let scan = density_scan(&c.family, 1, &xs).expect("density");
        let diff = oracle.rho.iter().zip(&scan.rho).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        checks.push(below(format!("{} 2N=2 density vs jpdf marginal", c.label()), diff, 1e-6));
        for n in [1, 2] {
            let s = density_scan(&c.family, n, &xs).expect("density");
            checks.push(below(format!("{} ∫ρ = {}", c.label(), 2 * n), s.normalization_residual(), 1e-6));
        }
    }
    let gauss = cases.iter().find(|c| c.name == "gaussian" && c.family.beta == Beta::One).expect("case");
    let spec = EnsembleSpec::new(Beta::One, 4, &gauss.family.potential).expect("spec");
    let run = metropolis_sample(&spec, &McConfig { samples: 100_000, seed: 1, ..McConfig::default() }).expect("chain");
    let h = compare_histogram(&run, &gauss.family, 3.0, 30).expect("histogram");
    checks.push(above("gaussian β=1 2N=4 χ² p-value", h.p_value, 0.01));
    Outcome::from_checks(checks)
}

fn partition(cases: &[Case]) -> Outcome {
    let mut checks = Vec::new();
    for c in cases {
        let spec = EnsembleSpec::new(c.family.beta, 2, &c.family.potential).expect("spec");
        let direct = direct_partition_integral(&spec);
        let from_g = partition_from_normalizations(&c.family, 1).expect("partition");
        checks.push(below(format!("{} N=1 partition", c.label()), (direct - from_g).abs() / direct, 1e-6));
    }
    Outcome::from_checks(checks)
}

fn main() {
    let start = Instant::now();
    let mut failed = 0;
    let mut line = |i: usize, name: &str, o: Outcome, t: Instant| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{status} {i:>2} {name}: {} ({:.1}s)", o.detail, t.elapsed().as_secs_f64());
    };

    let t = Instant::now();
    line(1, "skew-orthonormality", skew_orthonormality(), t);
    let cases = cases();
    let ops = operator_reports(&cases);
    let t = Instant::now();
    line(2, "string equations and duality", string_and_duality(&ops), t);
    line(3, "lower-triangularity of P + V'(Q)", lower_triangularity(&ops), t);
    let t = Instant::now();
    line(4, "Christoffel-Darboux product form and footprint", gcd(&cases), t);
    let t = Instant::now();
    line(5, "ladders and inverse ladders", ladders(&cases, &ops), t);
    let t = Instant::now();
    let win = window_reports(&cases);
    line(6, "folding", folding_checks(&cases, &win), t);
    let t = Instant::now();
    line(7, "deformation", pick_all(&win, &[".window.deformation.window", ".window.deformation.closed_vs_direct", ".window.string2"]), t);
    line(8, "window ODE", pick_all(&win, &[".window.ode", ".window.ode.closed_vs_direct"]), t);
    line(9, "compatibility", pick_all(&win, &[".window.compat.shift_x", ".window.compat.shift_u", ".window.compat.x_u"]), t);
    let t = Instant::now();
    line(10, "fundamental solutions", fundamental(&cases), t);
    let t = Instant::now();
    line(11, "physics oracle", physics(&cases), t);
    let t = Instant::now();
    line(12, "partition function", partition(&cases), t);

    println!("{} criteria failed; {:.1}s total", failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
