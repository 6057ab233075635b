//! Skew-moment matrices, the monic skew-orthogonal family and its quasi-polynomials.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::conventions::{Beta, Wave};
use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::moments::{lower_moments, seed_moments, weight_moments, Potential};
use crate::quadrature::{trapezoid_vec, GaussLegendre};
use crate::scalar::Real;

/// Moment quadrature tolerance for a working precision.
fn moment_tol<T: Real>() -> f64 {
    (T::epsilon() * 1e3).max(1e-30)
}

/// Antisymmetric matrix of monomial skew products, row-major `n × n`.
#[derive(Clone, Debug)]
pub struct SkewMomentMatrix<T: Real = Dd> {
    pub beta: Beta,
    pub n: usize,
    pub m: Vec<T>,
    /// Relative antisymmetry defect before symmetrization.
    pub antisymmetry_residual: f64,
}

impl<T: Real> SkewMomentMatrix<T> {
    pub fn get(&self, j: usize, k: usize) -> T {
        self.m[j * self.n + k]
    }

    fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|j| {
                let mut acc = T::zero();
                for (k, &vk) in v.iter().enumerate() {
                    acc += self.m[j * self.n + k] * vk;
                }
                acc
            })
            .collect()
    }
}

/// β=4: M_jk = (k−j) μ_{j+k−1}. β=1: M_jk = ∫∫ x^j y^k ε(y−x) e^{−V(x)−V(y)} dx dy
/// (seed block by quadrature, the rest by integration-by-parts recursion).
pub fn skew_moment_matrix<T: Real>(potential: &Potential, beta: Beta, n: usize) -> Result<SkewMomentMatrix<T>> {
    let tol = moment_tol::<T>();
    let mu = seed_moments::<T>(potential, 2 * n + 2, tol)?.mu;
    let mut m = vec![T::zero(); n * n];
    match beta {
        Beta::Four => {
            for j in 0..n {
                for k in 0..n {
                    if j + k >= 1 {
                        m[j * n + k] = T::from_f64(k as f64 - j as f64) * mu[j + k - 1];
                    }
                }
            }
        }
        Beta::One => {
            let deg = potential.degree();
            let s = deg - 1;
            let seed = beta1_seed_block::<T>(potential, s, (tol * 10.0).max(1e-28))?;
            let lead = T::from_f64(potential.u(deg));
            // fill row j for k >= s from its first s entries
            let fill_row = |m: &mut Vec<T>, j: usize| {
                for top in s..n {
                    let mm = top + 1 - deg;
                    let mut acc = T::from_f64(2.0) * mu[j + mm];
                    if mm > 0 {
                        acc += T::from_f64(mm as f64) * m[j * n + mm - 1];
                    }
                    for kk in 1..deg {
                        acc -= T::from_f64(potential.u(kk)) * m[j * n + mm + kk - 1];
                    }
                    m[j * n + top] = acc / lead;
                }
            };
            for j in 0..s.min(n) {
                for k in 0..s.min(n) {
                    m[j * n + k] = seed[j * s + k];
                }
                fill_row(&mut m, j);
            }
            for j in s..n {
                for k in 0..s {
                    m[j * n + k] = -m[k * n + j];
                }
                fill_row(&mut m, j);
            }
        }
    }
    // defects are measured against the geometric mean of the row magnitudes
    let row_max: Vec<f64> =
        (0..n).map(|j| (0..n).map(|k| m[j * n + k].to_f64().abs()).fold(1e-300, f64::max)).collect();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..j {
            let a = m[j * n + k];
            let b = m[k * n + j];
            let scale = (row_max[j] * row_max[k]).sqrt();
            worst = worst.max((a + b).to_f64().abs() / scale);
            let avg = (a - b) * T::from_f64(0.5);
            m[j * n + k] = avg;
            m[k * n + j] = -avg;
        }
        m[j * n + j] = T::zero();
    }
    if worst > 1e-10 {
        return Err(Error::PrecisionLoss { what: "skew-moment antisymmetry", residual: worst });
    }
    Ok(SkewMomentMatrix { beta, n, m, antisymmetry_residual: worst })
}

/// Seed block M_jk, j,k < s, of the β=1 matrix: m_j m_k − 2∫ x^j w(x) F_k(x) dx.
fn beta1_seed_block<T: Real>(potential: &Potential, s: usize, tol: f64) -> Result<Vec<T>> {
    let single = weight_moments::<T>(potential, 1, 2 * s + 2, tol)?.mu;
    let cut = potential.cutoff(1.0, 2 * s, tol);
    let mut err = None;
    let inner_tol = tol;
    let integrals = trapezoid_vec(
        |x: T, out: &mut [T]| {
            let w = (-potential.v(x)).exp();
            let f = match lower_moments::<T>(potential, s - 1, x, inner_tol) {
                Ok(f) => f,
                Err(e) => {
                    err = Some(e);
                    vec![T::zero(); s]
                }
            };
            let mut xj = w;
            for j in 0..s {
                for k in 0..s {
                    out[j * s + k] = xj * f[k];
                }
                xj *= x;
            }
        },
        -cut,
        cut,
        s * s,
        tol,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let mut block = vec![T::zero(); s * s];
    for j in 0..s {
        for k in 0..s {
            block[j * s + k] = single[j] * single[k] - T::from_f64(2.0) * integrals[j * s + k];
        }
    }
    Ok(block)
}

/// Monic skew-orthogonal polynomials π_0..π_{n−1} with their normalizations.
#[derive(Clone, Debug)]
pub struct SopFamily {
    pub beta: Beta,
    pub potential: Potential,
    /// Number of scalar indices (even).
    pub n: usize,
    /// coeffs[i][k]: coefficient of x^k in π_i (monic, k ≤ i).
    pub coeffs: Vec<Vec<Dd>>,
    /// g per quaternion index.
    pub g: Vec<Dd>,
    /// Significant digits of the working precision used for construction.
    pub digits: u32,
    pub construction_residual: f64,
    pub antisymmetry_residual: f64,
    dcoeffs: Vec<Vec<Dd>>,
    d2coeffs: Vec<Vec<Dd>>,
    /// 1/√g_{⌊i/2⌋} per scalar index.
    norm: Vec<Dd>,
    /// ∫ φ_i(x) dx.
    phi_total: Vec<f64>,
    /// φ-weighted integrals are negligible outside [−domain, domain].
    domain: f64,
}

/// Builds the family by sequential skew elimination in working precision `T`.
pub fn build_family<T: Real>(potential: &Potential, beta: Beta, n: usize) -> Result<SopFamily> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("n_scalar must be even and >= 2, got {n}")));
    }
    let mm = skew_moment_matrix::<T>(potential, beta, n)?;
    let scale = T::from_f64(beta.pairing_scale());
    let dot = |a: &[T], b: &[T]| {
        let mut acc = T::zero();
        for (x, y) in a.iter().zip(b) {
            acc += *x * *y;
        }
        acc
    };
    let mut c: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut mc: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut g: Vec<T> = Vec::with_capacity(n / 2);
    for m in 0..n / 2 {
        let mut e = vec![T::zero(); n];
        e[2 * m] = T::one();
        let mut o = vec![T::zero(); n];
        o[2 * m + 1] = T::one();
        for k in 0..m {
            for v in [&mut e, &mut o] {
                let a = scale * dot(v, &mc[2 * k + 1]) / g[k];
                let b = scale * dot(v, &mc[2 * k]) / g[k];
                for i in 0..n {
                    v[i] = v[i] - a * c[2 * k][i] + b * c[2 * k + 1][i];
                }
            }
        }
        let lead = o[2 * m];
        for i in 0..n {
            o[i] -= lead * e[i];
        }
        let mo = mm.apply(&o);
        let gm = scale * dot(&e, &mo);
        if !(gm.to_f64() > 0.0) || !gm.to_f64().is_finite() {
            return Err(Error::Degenerate { index: m, g: gm.to_f64() });
        }
        let me = mm.apply(&e);
        c.push(e);
        c.push(o);
        mc.push(me);
        mc.push(mo);
        g.push(gm);
    }
    // pairing of normalized vectors against the Z-block structure
    let mut residual: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let val = scale * dot(&c[a], &mc[b]) / (g[a / 2] * g[b / 2]).sqrt();
            let target = if a / 2 == b / 2 && a != b {
                if a % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            };
            residual = residual.max((val.to_f64() - target).abs());
        }
    }
    let coeffs: Vec<Vec<Dd>> = c.iter().enumerate().map(|(i, row)| row[..=i].iter().map(|v| v.to_dd()).collect()).collect();
    let g: Vec<Dd> = g.iter().map(|v| v.to_dd()).collect();
    SopFamily::assemble(potential.clone(), beta, coeffs, g, T::DIGITS, residual, mm.antisymmetry_residual)
}

fn derivative(c: &[Dd]) -> Vec<Dd> {
    if c.len() <= 1 {
        return vec![Dd::ZERO];
    }
    c.iter().enumerate().skip(1).map(|(k, v)| v.mul_f64(k as f64)).collect()
}

fn horner(c: &[Dd], x: Dd) -> Dd {
    let mut acc = Dd::ZERO;
    for &v in c.iter().rev() {
        acc = acc * x + v;
    }
    acc
}

fn horner_c(c: &[Dd], z: Cdd) -> Cdd {
    let mut acc = Cdd::default();
    for &v in c.iter().rev() {
        acc = acc * z + Cdd::new(v, Dd::ZERO);
    }
    acc
}

/// Values of the quasi-polynomial and its partner at one point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WaveEval {
    pub n: usize,
    pub x: f64,
    pub phi: f64,
    pub psi: f64,
    pub dphi: f64,
}

impl SopFamily {
    fn assemble(
        potential: Potential,
        beta: Beta,
        coeffs: Vec<Vec<Dd>>,
        g: Vec<Dd>,
        digits: u32,
        construction_residual: f64,
        antisymmetry_residual: f64,
    ) -> Result<Self> {
        let n = coeffs.len();
        let dcoeffs: Vec<Vec<Dd>> = coeffs.iter().map(|c| derivative(c)).collect();
        let d2coeffs: Vec<Vec<Dd>> = dcoeffs.iter().map(|c| derivative(c)).collect();
        let norm: Vec<Dd> = (0..n).map(|i| Dd::ONE / g[i / 2].sqrt()).collect();
        let single = weight_moments::<Dd>(&potential, 1, n.max(2 * potential.d()) + 1, 1e-31)?.mu;
        let phi_total = (0..n)
            .map(|i| (coeffs[i].iter().zip(&single).map(|(&c, &m)| c * m).sum::<Dd>() * norm[i]).to_f64())
            .collect();
        let domain = potential.cutoff(1.0, n + 2, 1e-22);
        Ok(SopFamily {
            beta,
            potential,
            n,
            coeffs,
            g,
            digits,
            construction_residual,
            antisymmetry_residual,
            dcoeffs,
            d2coeffs,
            norm,
            phi_total,
            domain,
        })
    }

    pub fn nq(&self) -> usize {
        self.n / 2
    }

    /// φ-type integrands are negligible outside [−domain, domain]; β=1 ψ is tabulated there.
    pub fn domain(&self) -> f64 {
        self.domain
    }

    pub fn norm(&self, i: usize) -> Dd {
        self.norm[i]
    }

    /// ∫ φ_i, the limit of ψ^{(1)}_i at +∞.
    pub fn phi_integral(&self, i: usize) -> f64 {
        self.phi_total[i]
    }

    pub fn pi_values(&self, x: Dd) -> Vec<Dd> {
        self.coeffs.iter().map(|c| horner(c, x)).collect()
    }

    pub fn phi_all(&self, x: f64) -> Vec<f64> {
        let xd = Dd::from_f64(x);
        let w = (-self.potential.v(x)).exp();
        (0..self.n).map(|i| (horner(&self.coeffs[i], xd) * self.norm[i]).to_f64() * w).collect()
    }

    /// φ′ = (π′ − V′π) e^{−V}/√g, evaluated with the cancellation done in double-double.
    pub fn dphi_all(&self, x: f64) -> Vec<f64> {
        let xd = Dd::from_f64(x);
        let dv = self.potential.dv(xd);
        let w = (-self.potential.v(x)).exp();
        (0..self.n)
            .map(|i| {
                let p = horner(&self.coeffs[i], xd);
                let dp = horner(&self.dcoeffs[i], xd);
                ((dp - dv * p) * self.norm[i]).to_f64() * w
            })
            .collect()
    }

    /// φ″ = (π″ − 2V′π′ − V″π + V′²π) e^{−V}/√g.
    pub fn d2phi_all(&self, x: f64) -> Vec<f64> {
        let xd = Dd::from_f64(x);
        let dv = self.potential.dv(xd);
        let d2v = Dd::from_f64(self.potential.d2v(x));
        let w = (-self.potential.v(x)).exp();
        (0..self.n)
            .map(|i| {
                let p = horner(&self.coeffs[i], xd);
                let dp = horner(&self.dcoeffs[i], xd);
                let d2p = horner(&self.d2coeffs[i], xd);
                ((d2p - dv.mul_f64(2.0) * dp - d2v * p + dv * dv * p) * self.norm[i]).to_f64() * w
            })
            .collect()
    }

    pub fn phi_all_c(&self, z: Complex64) -> Vec<Complex64> {
        let zd = Cdd::from_c64(z);
        let w = (-self.potential.v_c(z)).exp();
        (0..self.n).map(|i| horner_c(&self.coeffs[i], zd).scale(self.norm[i]).to_c64() * w).collect()
    }

    pub fn dphi_all_c(&self, z: Complex64) -> Vec<Complex64> {
        let zd = Cdd::from_c64(z);
        let dv = self.dv_cdd(zd);
        let w = (-self.potential.v_c(z)).exp();
        (0..self.n)
            .map(|i| {
                let p = horner_c(&self.coeffs[i], zd);
                let dp = horner_c(&self.dcoeffs[i], zd);
                (dp - dv * p).scale(self.norm[i]).to_c64() * w
            })
            .collect()
    }

    fn dv_cdd(&self, z: Cdd) -> Cdd {
        let mut acc = Cdd::default();
        for &u in self.potential.coeffs().iter().rev() {
            acc = acc * z + Cdd::new(Dd::from_f64(u), Dd::ZERO);
        }
        acc
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x.abs() > self.domain {
            return Err(Error::DomainError { x, lo: -self.domain, hi: self.domain });
        }
        Ok(())
    }

    /// ψ for all indices at each point (β=1 shares one cumulative sweep over sorted points).
    pub fn psi_batch(&self, xs: &[f64]) -> Result<Vec<Vec<f64>>> {
        match self.beta {
            Beta::Four => Ok(xs.iter().map(|&x| self.dphi_all(x)).collect()),
            Beta::One => {
                for &x in xs {
                    self.check_domain(x)?;
                }
                let cum = self.cumulative_phi(xs);
                Ok(cum
                    .into_iter()
                    .map(|c| c.iter().zip(&self.phi_total).map(|(ci, t)| 2.0 * ci - t).collect())
                    .collect())
            }
        }
    }

    /// ∫_{−∞}^{x} φ_i for all i at each point, by Gauss–Legendre panels between sorted points.
    pub fn cumulative_phi(&self, xs: &[f64]) -> Vec<Vec<f64>> {
        let gl = GaussLegendre::new(12);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
        let mut out = vec![Vec::new(); xs.len()];
        let mut acc = vec![0.0f64; self.n];
        let mut pos = -self.domain;
        for &idx in &order {
            let target = xs[idx].max(-self.domain);
            if target > pos {
                let panels = ((target - pos) / 0.25).ceil().max(1.0) as usize;
                for p in 0..panels {
                    let a = pos + (target - pos) * p as f64 / panels as f64;
                    let b = pos + (target - pos) * (p + 1) as f64 / panels as f64;
                    for (t, w) in gl.mapped(a, b) {
                        for (acc_i, v) in acc.iter_mut().zip(self.phi_all(t)) {
                            *acc_i += w * v;
                        }
                    }
                }
                pos = target;
            }
            out[idx] = acc.clone();
        }
        out
    }

    pub fn psi_all(&self, x: f64) -> Result<Vec<f64>> {
        Ok(self.psi_batch(&[x])?.remove(0))
    }

    /// ψ at complex z: β=4 analytically; β=1 continued from Re z along a vertical segment.
    pub fn psi_all_c(&self, z: Complex64) -> Result<Vec<Complex64>> {
        match self.beta {
            Beta::Four => Ok(self.dphi_all_c(z)),
            Beta::One => {
                let base = self.psi_all(z.re)?;
                let mut out: Vec<Complex64> = base.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                if z.im != 0.0 {
                    let gl = GaussLegendre::new(16);
                    let panels = (z.im.abs() / 0.25).ceil().max(1.0) as usize;
                    for p in 0..panels {
                        let a = Complex64::new(z.re, z.im * p as f64 / panels as f64);
                        let b = Complex64::new(z.re, z.im * (p + 1) as f64 / panels as f64);
                        for (t, w) in gl.segment(a, b) {
                            for (o, v) in out.iter_mut().zip(self.phi_all_c(t)) {
                                *o += w * v * 2.0;
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn wave_all(&self, wave: Wave, x: f64) -> Result<Vec<f64>> {
        match wave {
            Wave::Phi => Ok(self.phi_all(x)),
            Wave::Psi => self.psi_all(x),
        }
    }

    pub fn wave_all_c(&self, wave: Wave, z: Complex64) -> Result<Vec<Complex64>> {
        match wave {
            Wave::Phi => Ok(self.phi_all_c(z)),
            Wave::Psi => self.psi_all_c(z),
        }
    }

    /// x-derivative of the wave vector: Φ′ analytically; Ψ′ = Φ″ (β=4) or 2Φ (β=1).
    pub fn wave_derivative(&self, wave: Wave, x: f64) -> Vec<f64> {
        match (wave, self.beta) {
            (Wave::Phi, _) => self.dphi_all(x),
            (Wave::Psi, Beta::Four) => self.d2phi_all(x),
            (Wave::Psi, Beta::One) => self.phi_all(x).iter().map(|v| 2.0 * v).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "k", "c_k"])?;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                wr.write_record([i.to_string(), k.to_string(), format!("{c}")])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_g_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "g_n"])?;
        for (i, g) in self.g.iter().enumerate() {
            wr.write_record([i.to_string(), format!("{g}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Rebuilds a family of the same size and working precision for another potential
/// (used by the finite-difference deformation checks).
pub fn rebuild_with(family: &SopFamily, potential: &Potential) -> Result<SopFamily> {
    if family.digits <= <f64 as Real>::DIGITS {
        build_family::<f64>(potential, family.beta, family.n)
    } else {
        build_family::<Dd>(potential, family.beta, family.n)
    }
}

/// Evaluates φ_n, ψ_n and φ_n′ at a real point.
pub fn evaluate_wave(family: &SopFamily, n: usize, x: f64) -> Result<WaveEval> {
    if n >= family.n {
        return Err(Error::IndexError(format!("n = {n} exceeds the family size {}", family.n)));
    }
    Ok(WaveEval {
        n,
        x,
        phi: family.phi_all(x)[n],
        psi: family.psi_all(x)?[n],
        dphi: family.dphi_all(x)[n],
    })
}

/// Z_N = N! Π_{j<N} g_j.
pub fn partition_function(family: &SopFamily, n: usize) -> Result<f64> {
    Ok(log_partition_function(family, n)?.exp())
}

/// ln Z_N, safe against overflow.
pub fn log_partition_function(family: &SopFamily, n: usize) -> Result<f64> {
    if n > family.g.len() {
        return Err(Error::IndexError(format!("N = {n} exceeds the computed normalizations ({})", family.g.len())));
    }
    Ok((1..=n).map(|k| (k as f64).ln()).sum::<f64>() + family.g[..n].iter().map(|g| g.to_f64().ln()).sum::<f64>())
}

/// max_{n,m} |(Φ_n, Ψ̂_m) − δ_{nm} 1| from quadrature of the evaluated waves
/// (independent of the moment matrix used in the construction).
pub fn orthonormality_residual(family: &SopFamily) -> Result<f64> {
    let l = family.domain();
    let npts = 4097usize;
    let xs: Vec<f64> = (0..npts).map(|i| -l + 2.0 * l * i as f64 / (npts - 1) as f64).collect();
    let h = 2.0 * l / (npts - 1) as f64;
    let psi = family.psi_batch(&xs)?;
    let n = family.n;
    let mut gram = vec![0.0f64; n * n];
    for (x, ps) in xs.iter().zip(&psi) {
        let ph = family.phi_all(*x);
        for a in 0..n {
            if ph[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                gram[a * n + b] += h * ph[a] * ps[b];
            }
        }
    }
    let sigma = family.beta.hat_sign();
    let mut worst: f64 = 0.0;
    for p in 0..n / 2 {
        for q in 0..n / 2 {
            // (Φ_p, Ψ̂_q) = −σ (∫Φ_p Ψ_q^t) Z
            let gcell = |i: usize, j: usize| gram[(2 * p + i) * n + 2 * q + j];
            let cell = [[sigma * gcell(0, 1), -sigma * gcell(0, 0)], [sigma * gcell(1, 1), -sigma * gcell(1, 0)]];
            for i in 0..2 {
                for j in 0..2 {
                    let target = if p == q && i == j { 1.0 } else { 0.0 };
                    worst = worst.max((cell[i][j] - target).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Agreement of the family built in f64 and in double-double.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityTelemetry {
    pub n: usize,
    pub max_relative_difference: f64,
    /// Decimal digits lost by the f64 construction.
    pub digits_lost: f64,
}

pub fn stability_telemetry(potential: &Potential, beta: Beta, n: usize) -> Result<StabilityTelemetry> {
    let lo = build_family::<f64>(potential, beta, n)?;
    let hi = build_family::<Dd>(potential, beta, n)?;
    let mut worst: f64 = 0.0;
    for (a, b) in lo.coeffs.iter().zip(&hi.coeffs) {
        let scale = b.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((*x - *y).to_f64().abs() / scale);
        }
    }
    Ok(StabilityTelemetry {
        n,
        max_relative_difference: worst,
        digits_lost: (16.0 + worst.max(1e-17).log10()).max(0.0),
    })
}
