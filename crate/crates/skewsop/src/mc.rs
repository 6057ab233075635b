//! Independent oracles at tiny sizes: direct marginalization of the eigenvalue
//! jpdf, the direct partition integral, and a seeded Metropolis sampler.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::conventions::Beta;
use crate::error::{Error, Result};
use crate::kernels::density;
use crate::moments::Potential;
use crate::quadrature::{breakpoints, GaussLegendre};
use crate::sop::SopFamily;

/// Eigenvalue jpdf of 2N levels. β=1: 2N distinct levels with
/// Π|λ_i − λ_j| Π e^{−V(λ_i)}; β=4: N doubly degenerate levels with
/// Π|λ_i − λ_j|⁴ Π e^{−2V(λ_i)}. In the common form Π|Δ|^β Π e^{−2κ V} over the
/// distinct levels, κ(1) = ½ and κ(4) = 1.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSpec {
    pub beta: Beta,
    pub two_n: usize,
    pub potential: Potential,
}

impl EnsembleSpec {
    pub fn new(beta: Beta, two_n: usize, potential: &Potential) -> Result<Self> {
        if two_n == 0 || !two_n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("2N = {two_n} must be a positive even number")));
        }
        Ok(EnsembleSpec { beta, two_n, potential: potential.clone() })
    }

    /// Exponent κ of the per-level weight e^{−2κV}.
    pub fn kappa(&self) -> f64 {
        match self.beta {
            Beta::One => 0.5,
            Beta::Four => 1.0,
        }
    }

    /// Number of distinct levels.
    pub fn levels(&self) -> usize {
        match self.beta {
            Beta::One => self.two_n,
            Beta::Four => self.two_n / 2,
        }
    }

    /// Eigenvalues per distinct level.
    pub fn multiplicity(&self) -> usize {
        self.two_n / self.levels()
    }

    fn exponent(&self) -> f64 {
        self.beta.as_int() as f64
    }

    /// ln of the unnormalized jpdf of the distinct levels.
    pub fn log_weight(&self, lambda: &[f64]) -> f64 {
        let b = self.exponent();
        let w = 2.0 * self.kappa();
        let mut acc = -w * lambda.iter().map(|&l| self.potential.v(l)).sum::<f64>();
        for i in 0..lambda.len() {
            for j in i + 1..lambda.len() {
                acc += b * (lambda[i] - lambda[j]).abs().ln();
            }
        }
        acc
    }

    /// Integration limit beyond which the one-level weight is negligible.
    pub fn domain(&self) -> f64 {
        self.potential.cutoff(2.0 * self.kappa(), self.beta.as_int() as usize * self.levels(), 1e-18)
    }
}

/// Nested Gauss–Legendre integration of the jpdf over the levels after `fixed`,
/// splitting every axis at the already-fixed levels (where |Δ|^β has a kink).
struct Nested<'a> {
    spec: &'a EnsembleSpec,
    gl: GaussLegendre,
    limit: f64,
    width: f64,
}

impl Nested<'_> {
    fn integrate(&self, fixed: &mut Vec<f64>) -> f64 {
        if fixed.len() == self.spec.levels() {
            return self.spec.log_weight(fixed).exp();
        }
        let bp = breakpoints(-self.limit, self.limit, self.width, fixed);
        let mut acc = 0.0;
        for w in bp.windows(2) {
            for (t, wt) in self.gl.mapped(w[0], w[1]) {
                fixed.push(t);
                acc += wt * self.integrate(fixed);
                fixed.pop();
            }
        }
        acc
    }
}

fn nested(spec: &EnsembleSpec) -> Nested<'_> {
    // the cost grows like (nodes per axis)^levels; coarser panels beyond two levels
    let (n, width) = if spec.levels() <= 2 { (20, 0.25) } else { (8, 1.5) };
    Nested { spec, gl: GaussLegendre::new(n), limit: spec.domain(), width }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleDensity {
    pub beta: Beta,
    pub two_n: usize,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
}

impl OracleDensity {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "rho"])?;
        for (x, r) in self.x.iter().zip(&self.rho) {
            wr.write_record([format!("{x:.17e}"), format!("{r:.17e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// ρ(x) by marginalizing the jpdf over the other levels, normalized to ∫ρ = 2N.
pub fn marginal_density_quadrature(spec: &EnsembleSpec, xs: &[f64]) -> Result<OracleDensity> {
    if spec.two_n > 4 {
        return Err(Error::InvalidArgument(format!("direct marginalization supports 2N <= 4, got {}", spec.two_n)));
    }
    let nest = nested(spec);
    let unnormalized = |x: f64| nest.integrate(&mut vec![x]);
    let z = nest.integrate(&mut Vec::new());
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::NonConvergent { what: "jpdf normalization", detail: format!("Z = {z}") });
    }
    let scale = (spec.levels() * spec.multiplicity()) as f64 / z;
    let rho = xs.iter().map(|&x| unnormalized(x) * scale).collect();
    Ok(OracleDensity { beta: spec.beta, two_n: spec.two_n, x: xs.to_vec(), rho })
}

/// ∫ Π|Δ|^β Π e^{−2κV} over the distinct levels (unordered).
pub fn direct_partition_integral(spec: &EnsembleSpec) -> f64 {
    nested(spec).integrate(&mut Vec::new())
}

/// The same integral predicted from the skew normalizations: for β=1 each
/// unordered configuration counts (2N)!/N! ordered ones against N! Π g_j, and
/// for β=4 the integral is 2^N N! Π g_j. Only N = 1 is compared in practice.
pub fn partition_from_normalizations(family: &SopFamily, n: usize) -> Result<f64> {
    let z = crate::sop::partition_function(family, n)?;
    Ok(match family.beta {
        Beta::One => z * (1..=2 * n).map(|k| k as f64).product::<f64>() / (1..=n).map(|k| k as f64).product::<f64>(),
        Beta::Four => z * 2f64.powi(n as i32),
    })
}

#[derive(Clone, Debug)]
pub struct McConfig {
    pub samples: usize,
    pub burn_in: usize,
    /// sweeps (one proposal per level) between recorded samples
    pub thin: usize,
    /// half-width of the uniform single-level proposal; None tunes it during burn-in
    pub step: Option<f64>,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { samples: 100_000, burn_in: 2_000, thin: 10, step: None, seed: 0x5eed }
    }
}

/// Acceptance rate outside [0.2, 0.6].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingWarning {
    pub acceptance: f64,
}

impl fmt::Display for MixingWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "acceptance rate {:.3} outside [0.2, 0.6]", self.acceptance)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McRun {
    pub beta: Beta,
    pub two_n: usize,
    pub seed: u64,
    pub step: f64,
    /// one row of distinct levels per recorded sample
    pub samples: Vec<Vec<f64>>,
    pub acceptance: f64,
    /// lag-1 autocorrelation of Σλ over recorded samples
    pub autocorrelation: f64,
    pub warning: Option<MixingWarning>,
}

/// Single-level random-walk Metropolis chain targeting the jpdf.
pub fn metropolis_sample(spec: &EnsembleSpec, cfg: &McConfig) -> Result<McRun> {
    if cfg.samples < 10_000 {
        return Err(Error::InvalidArgument(format!("at least 10^4 samples are required, got {}", cfg.samples)));
    }
    let m = spec.levels();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // spread start avoids the coincident-level singularity
    let mut lam: Vec<f64> = (0..m).map(|i| i as f64 - (m - 1) as f64 / 2.0).collect();
    let mut logp = spec.log_weight(&lam);
    let mut step = cfg.step.unwrap_or(1.0);
    let sweep = |lam: &mut Vec<f64>, logp: &mut f64, step: f64, rng: &mut ChaCha8Rng| -> usize {
        let mut acc = 0;
        for i in 0..m {
            let old = lam[i];
            lam[i] = old + step * (2.0 * rng.random::<f64>() - 1.0);
            let new = spec.log_weight(lam);
            if rng.random::<f64>().ln() < new - *logp {
                *logp = new;
                acc += 1;
            } else {
                lam[i] = old;
            }
        }
        acc
    };
    for b in 0..cfg.burn_in {
        let a = sweep(&mut lam, &mut logp, step, &mut rng);
        if cfg.step.is_none() && b % 50 == 49 && b < cfg.burn_in / 2 {
            // crude tuning towards ~40% acceptance, frozen for the second half of burn-in
            let rate = a as f64 / m as f64;
            step *= if rate > 0.4 { 1.2 } else { 0.85 };
        }
    }
    let mut accepted = 0usize;
    let mut samples = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thin {
            accepted += sweep(&mut lam, &mut logp, step, &mut rng);
        }
        samples.push(lam.clone());
    }
    let acceptance = accepted as f64 / (cfg.samples * cfg.thin * m) as f64;
    let sums: Vec<f64> = samples.iter().map(|s| s.iter().sum()).collect();
    let mean = sums.iter().sum::<f64>() / sums.len() as f64;
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>();
    let cov = sums.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>();
    let autocorrelation = if var > 0.0 { cov / var } else { 1.0 };
    let warning = (!(0.2..=0.6).contains(&acceptance)).then_some(MixingWarning { acceptance });
    Ok(McRun { beta: spec.beta, two_n: spec.two_n, seed: cfg.seed, step, samples, acceptance, autocorrelation, warning })
}

impl McRun {
    /// All eigenvalues (each degenerate level repeated).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mult = self.two_n / self.samples.first().map_or(1, |s| s.len().max(1));
        self.samples.iter().flat_map(|s| s.iter().flat_map(move |&l| std::iter::repeat_n(l, mult))).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let m = self.samples.first().map_or(0, |s| s.len());
        wr.write_record((0..m).map(|i| format!("lambda{i}")))?;
        for s in &self.samples {
            wr.write_record(s.iter().map(|v| format!("{v:.17e}")))?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramComparison {
    /// inner bin edges; two further bins extend to ±∞
    pub edges: Vec<f64>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl HistogramComparison {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lo", "hi", "observed", "expected"])?;
        let k = self.observed.len();
        for b in 0..k {
            let lo = if b == 0 { f64::NEG_INFINITY } else { self.edges[b - 1] };
            let hi = if b + 1 == k { f64::INFINITY } else { self.edges[b] };
            debug_assert!(k == self.edges.len() + 1);
            wr.write_record([format!("{lo:.17e}"), format!("{hi:.17e}"), self.observed[b].to_string(), format!("{:.17e}", self.expected[b])])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Pearson χ² of the eigenvalue histogram against ρ/(2N) from the kernel.
/// `inner` equal-width bins on [−a, a], plus two tail bins.
pub fn compare_histogram(run: &McRun, family: &SopFamily, a: f64, inner: usize) -> Result<HistogramComparison> {
    let n = run.two_n / 2;
    if family.beta != run.beta {
        return Err(Error::InvalidArgument("the family and the run have different β".into()));
    }
    let edges: Vec<f64> = (0..=inner).map(|i| -a + 2.0 * a * i as f64 / inner as f64).collect();
    // bin probabilities from ρ/(2N) with GL-20 per bin; tails by complement
    let gl = GaussLegendre::new(20);
    let mut probs = Vec::with_capacity(inner + 2);
    let mut mass = 0.0;
    let mut inner_probs = Vec::with_capacity(inner);
    for w in edges.windows(2) {
        let (nodes, weights): (Vec<f64>, Vec<f64>) = gl.mapped(w[0], w[1]).unzip();
        let rho = density(family, n, &nodes)?;
        let p: f64 = rho.iter().zip(&weights).map(|(r, w)| r * w).sum::<f64>() / run.two_n as f64;
        mass += p;
        inner_probs.push(p);
    }
    let lo_tail = {
        let l = family.domain();
        let (nodes, weights): (Vec<f64>, Vec<f64>) = breakpoints(-l, -a, 0.25, &[])
            .windows(2)
            .flat_map(|w| gl.mapped(w[0], w[1]).collect::<Vec<_>>())
            .unzip();
        density(family, n, &nodes)?.iter().zip(&weights).map(|(r, w)| r * w).sum::<f64>() / run.two_n as f64
    };
    probs.push(lo_tail);
    probs.extend(inner_probs);
    probs.push((1.0 - mass - lo_tail).max(0.0));
    // the levels of one sample are dependent but exchangeable: one level per
    // sample (rotating the label) has marginal ρ/(2N) and keeps counts multinomial
    let values: Vec<f64> = run.samples.iter().enumerate().map(|(i, s)| s[i % s.len()]).collect();
    let mut observed = vec![0u64; inner + 2];
    for v in &values {
        let b = if *v < -a {
            0
        } else if *v >= a {
            inner + 1
        } else {
            1 + (((v + a) / (2.0 * a) * inner as f64) as usize).min(inner - 1)
        };
        observed[b] += 1;
    }
    let total = values.len() as f64;
    let expected: Vec<f64> = probs.iter().map(|p| p * total).collect();
    let mut chi2 = 0.0;
    let mut used = 0usize;
    for (o, e) in observed.iter().zip(&expected) {
        if *e >= 5.0 {
            chi2 += (*o as f64 - e).powi(2) / e;
            used += 1;
        }
    }
    let dof = used.saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(HistogramComparison { edges, observed, expected, chi2, dof, p_value: 1.0 - dist.cdf(chi2) })
}
