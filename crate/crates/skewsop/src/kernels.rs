//! Correlation kernels S, D, I and σ₂, the level density, and the generalized
//! Christoffel–Darboux identity in product form.

use std::io::Write;

use serde::Serialize;

use crate::conventions::Beta;
use crate::error::{Error, Result};
use crate::operators::OperatorSet;
use crate::qlinalg::QMatrix;
use crate::quadrature::GaussLegendre;
use crate::report::InvariantReport;
use crate::sop::SopFamily;

/// â(x) Π_N b(y) with â cell = −σ aᵗZ, i.e. σ Σ_{m<N} (a_{2m+1} b_{2m} − a_{2m} b_{2m+1}).
pub fn hat_pair(beta: Beta, a: &[f64], b: &[f64], n: usize) -> f64 {
    let s: f64 = (0..n).map(|m| a[2 * m + 1] * b[2 * m] - a[2 * m] * b[2 * m + 1]).sum();
    beta.hat_sign() * s
}

fn check_n(family: &SopFamily, n: usize) -> Result<()> {
    if n > family.nq() {
        return Err(Error::IndexError(format!("2N = {} exceeds the truncation {}", 2 * n, family.n)));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelEval {
    pub beta: Beta,
    pub n: usize,
    pub x: f64,
    pub y: f64,
    /// S_2N(x, y)
    pub s: f64,
    /// S_2N(y, x)
    pub s_swapped: f64,
    pub d: f64,
    pub i: f64,
    /// [[S(x,y), D(x,y)], [I(x,y) + ½ε(x−y) δ_{β1}, S(y,x)]]
    pub sigma2: [[f64; 2]; 2],
}

fn step(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// S, D, I and σ₂ at (x, y) from the first N quaternion terms.
pub fn kernel(family: &SopFamily, n: usize, x: f64, y: f64) -> Result<KernelEval> {
    check_n(family, n)?;
    let b = family.beta;
    let psi = family.psi_batch(&[x, y])?;
    let (px, py) = (family.phi_all(x), family.phi_all(y));
    let (sx, sy) = (&psi[0], &psi[1]);
    let s = hat_pair(b, sx, &py, n);
    let s_swapped = hat_pair(b, sy, &px, n);
    let d = hat_pair(b, &px, &py, n);
    let i = hat_pair(b, sx, sy, n);
    let eps = if b == Beta::One { 0.5 * step(x - y) } else { 0.0 };
    Ok(KernelEval { beta: b, n, x, y, s, s_swapped, d, i, sigma2: [[s, d], [i + eps, s_swapped]] })
}

/// [R̄(x), Π_N] with R̄ as it enters the Christoffel–Darboux formula.
#[derive(Clone, Debug)]
pub struct GcdMatrix {
    pub n: usize,
    pub d: usize,
    pub x: f64,
    pub comm: QMatrix,
}

pub fn gcd_matrix(set: &OperatorSet, n: usize, x: f64) -> Result<GcdMatrix> {
    if n < set.d || n + set.d > set.valid_rows() {
        return Err(Error::IndexError(format!(
            "the commutator at N = {n} needs d <= N <= {} (d = {})",
            set.valid_rows().saturating_sub(set.d),
            set.d
        )));
    }
    let rb = set.rbar_gcd(x);
    let pn = QMatrix::proj(set.nq, n);
    let comm = &rb.matmul(&pn) - &pn.matmul(&rb);
    Ok(GcdMatrix { n, d: set.d, x, comm })
}

impl GcdMatrix {
    /// Scalar positions allowed to be nonzero: cells crossing the N boundary within
    /// the band |p − q| ≤ d, the outermost cells lower triangular. In the upper-right
    /// block this is the staircase i < 2N ≤ j ≤ i + 2d.
    pub fn in_footprint(&self, i: usize, j: usize) -> bool {
        let (p, q) = (i / 2, j / 2);
        let crossing = (p < self.n && q >= self.n) || (q < self.n && p >= self.n);
        let dist = p.abs_diff(q);
        crossing && dist <= self.d && !(dist == self.d && i.is_multiple_of(2) && j % 2 == 1)
    }

    /// max |entry| outside the footprint relative to max |entry|.
    pub fn footprint_leak(&self) -> f64 {
        let dim = self.comm.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                if !self.in_footprint(i, j) {
                    worst = worst.max(self.comm.get(i, j).abs());
                }
            }
        }
        worst / self.comm.max_abs().max(1e-300)
    }

    /// Corner entries of the staircase, R̄_{2N−1,2N+2d−1} and R̄_{2N+2d−1,2N−1} in
    /// magnitude (nonzero for every potential; the outermost diagonal is invertible).
    pub fn corner_magnitude(&self) -> f64 {
        let e = 2 * self.n;
        let w = 2 * self.d;
        self.comm.get(e - 1, e + w - 1).abs().min(self.comm.get(e + w - 1, e - 1).abs())
    }
}

/// Product-form residual at each (x, y), relative to max(1, |LHS|):
/// β=4: (x−y) S + Φ̂(x)[R̄(y), Π_N]Φ(y); β=1: (y−x) S + Ψ̂(x)[R̄(x), Π_N]Ψ(y).
pub fn gcd_residual(set: &OperatorSet, family: &SopFamily, n: usize, points: &[(f64, f64)]) -> Result<f64> {
    let b = family.beta;
    let mut worst: f64 = 0.0;
    for &(x, y) in points {
        let k = kernel(family, n, x, y)?;
        let (lhs, rhs) = match b {
            Beta::Four => {
                let c = gcd_matrix(set, n, y)?;
                let v = c.comm.matvec(&family.phi_all(y));
                ((x - y) * k.s, -hat_pair(b, &family.phi_all(x), &v, set.nq))
            }
            Beta::One => {
                let c = gcd_matrix(set, n, x)?;
                let psi = family.psi_batch(&[x, y])?;
                let v = c.comm.matvec(&psi[1]);
                ((y - x) * k.s, -hat_pair(b, &psi[0], &v, set.nq))
            }
        };
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityScan {
    pub n: usize,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    /// ∫ρ over the real line (Gauss–Legendre panels on the family's domain).
    pub integral: f64,
    pub min_rho: f64,
    /// max |ρ(x) − ρ(−x)| over the grid (0 for non-symmetric potentials, not computed).
    pub parity: f64,
}

/// ρ(x) = S_2N(x, x) for the first N quaternion terms at each point.
pub fn density(family: &SopFamily, n: usize, xs: &[f64]) -> Result<Vec<f64>> {
    check_n(family, n)?;
    let psi = family.psi_batch(xs)?;
    Ok(xs.iter().zip(&psi).map(|(&x, s)| hat_pair(family.beta, s, &family.phi_all(x), n)).collect())
}

pub fn density_scan(family: &SopFamily, n: usize, grid: &[f64]) -> Result<DensityScan> {
    let rho = density(family, n, grid)?;
    let l = family.domain();
    let gl = GaussLegendre::new(20);
    let panels = (2.0 * l / 0.25).ceil() as usize;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for p in 0..panels {
        let a = -l + 2.0 * l * p as f64 / panels as f64;
        let b = -l + 2.0 * l * (p + 1) as f64 / panels as f64;
        for (t, w) in gl.mapped(a, b) {
            nodes.push(t);
            weights.push(w);
        }
    }
    let integral = density(family, n, &nodes)?.iter().zip(&weights).map(|(r, w)| r * w).sum();
    let parity = if family.potential.is_symmetric() {
        let mirrored: Vec<f64> = grid.iter().map(|x| -x).collect();
        let rm = density(family, n, &mirrored)?;
        rho.iter().zip(&rm).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    } else {
        0.0
    };
    let min_rho = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DensityScan { n, x: grid.to_vec(), rho, integral, min_rho, parity })
}

impl DensityScan {
    pub fn normalization_residual(&self) -> f64 {
        (self.integral - 2.0 * self.n as f64).abs()
    }

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

/// Kernel CSV with columns x, y, S, D, I.
pub fn write_kernel_csv<W: Write>(evals: &[KernelEval], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y", "S", "D", "I"])?;
    for k in evals {
        wr.write_record([k.x, k.y, k.s, k.d, k.i].map(|v| format!("{v:.17e}")))?;
    }
    wr.flush()?;
    Ok(())
}

/// Kernel invariants: GCD (product form) and its footprint, density sign,
/// normalization and parity.
pub fn kernel_suite(
    set: &OperatorSet,
    family: &SopFamily,
    n: usize,
    points: &[(f64, f64)],
    grid: &[f64],
    gcd_tol: f64,
) -> Result<Vec<InvariantReport>> {
    let tag = format!("beta{}", family.beta.as_int());
    let gcd = gcd_residual(set, family, n, points)?;
    let mut leak: f64 = 0.0;
    let mut corner = f64::INFINITY;
    for &(x, _) in points.iter().take(8) {
        let g = gcd_matrix(set, n, x)?;
        leak = leak.max(g.footprint_leak());
        corner = corner.min(g.corner_magnitude());
    }
    let scan = density_scan(family, n, grid)?;
    Ok(vec![
        InvariantReport::new(format!("{tag}.gcd.product_form"), gcd, gcd_tol),
        InvariantReport::new(format!("{tag}.gcd.footprint_leak"), leak, 1e-12),
        InvariantReport::above(format!("{tag}.gcd.footprint_corner"), corner, 1e-12),
        InvariantReport::new(format!("{tag}.density.normalization"), scan.normalization_residual(), 1e-6),
        InvariantReport::new(format!("{tag}.density.nonnegative"), (-scan.min_rho).max(0.0), 1e-9),
        InvariantReport::new(format!("{tag}.density.parity"), scan.parity, 1e-9),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_pair_is_antisymmetric() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [0.5, -1.0, 2.0, 0.25];
        assert_eq!(hat_pair(Beta::Four, &a, &b, 2), -hat_pair(Beta::Four, &b, &a, 2));
        assert_eq!(hat_pair(Beta::One, &a, &a, 2), 0.0);
    }
}
