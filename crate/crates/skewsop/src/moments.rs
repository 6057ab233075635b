//! Potentials, weight moments and ε-integrals.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::quadrature::{half_line_vec, trapezoid_vec};
use crate::scalar::Real;

/// V(x) = Σ_{K=1}^{2d} (u_K / K) x^K with even degree and u_{2d} > 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    coeffs: Vec<f64>,
}

impl Potential {
    /// `coeffs[K-1] = u_K`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        if coeffs.len() < 2 || !coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidPotential(format!(
                "degree {} is not even and >= 2",
                coeffs.len()
            )));
        }
        let lead = *coeffs.last().unwrap();
        if lead <= 0.0 {
            return Err(Error::InvalidPotential(format!("leading coefficient u_{} = {lead} <= 0", coeffs.len())));
        }
        Ok(Potential { coeffs })
    }

    pub fn gaussian() -> Self {
        Potential { coeffs: vec![0.0, 1.0] }
    }

    pub fn quartic() -> Self {
        Potential { coeffs: vec![0.0, 0.0, 0.0, 1.0] }
    }

    /// u_1..u_{2d}.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn u(&self, k: usize) -> f64 {
        self.coeffs.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn d(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|&c| c == 0.0)
    }

    /// The same potential with u_K shifted by `delta` (K may not raise the degree).
    pub fn perturbed(&self, k: usize, delta: f64) -> Result<Self> {
        let mut c = self.coeffs.clone();
        if k == 0 || k > c.len() {
            return Err(Error::InvalidArgument(format!("u_{k} is not a coefficient of this potential")));
        }
        c[k - 1] += delta;
        Potential::new(c)
    }

    pub fn v<T: Real>(&self, x: T) -> T {
        let mut acc = T::zero();
        for k in (1..=self.coeffs.len()).rev() {
            acc = (acc + T::from_f64(self.coeffs[k - 1]) / T::from_f64(k as f64)) * x;
        }
        acc
    }

    pub fn dv<T: Real>(&self, x: T) -> T {
        let mut acc = T::zero();
        for k in (1..=self.coeffs.len()).rev() {
            acc = acc * x + T::from_f64(self.coeffs[k - 1]);
        }
        acc
    }

    pub fn d2v(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in (2..=self.coeffs.len()).rev() {
            acc = acc * x + self.coeffs[k - 1] * (k - 1) as f64;
        }
        acc
    }

    pub fn v_c(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=self.coeffs.len()).rev() {
            acc = (acc + self.coeffs[k - 1] / k as f64) * z;
        }
        acc
    }

    pub fn dv_c(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=self.coeffs.len()).rev() {
            acc = acc * z + self.coeffs[k - 1];
        }
        acc
    }

    /// Smallest L (a multiple of 1/2) with s·V(±L) − k_max ln L ≥ ln(1/tol) + 8,
    /// i.e. x^{k_max} e^{−sV} is negligible beyond |x| = L.
    pub fn cutoff(&self, weight_power: f64, k_max: usize, tol: f64) -> f64 {
        let need = (1.0 / tol).ln() + 8.0;
        let mut l: f64 = 2.0;
        loop {
            let ok = [l, -l].iter().all(|&x| weight_power * self.v(x) - k_max as f64 * l.ln() >= need);
            if ok || l > 200.0 {
                return l;
            }
            l += 0.5;
        }
    }
}

/// μ_k = ∫ x^k e^{−pV(x)} dx for k < len, with p = `weight_power` (2 for the
/// ensemble weight, 1 for the single weight w = e^{−V}).
#[derive(Clone, Debug)]
pub struct MomentTable<T: Real = Dd> {
    pub potential: Potential,
    pub weight_power: u32,
    pub mu: Vec<T>,
    pub tol: f64,
    pub cutoff: f64,
}

/// Moments of e^{−2V}.
pub fn seed_moments<T: Real>(potential: &Potential, count: usize, tol: f64) -> Result<MomentTable<T>> {
    weight_moments(potential, 2, count, tol)
}

/// Moments of e^{−pV} computed directly by quadrature (all indices share nodes).
pub fn weight_moments<T: Real>(potential: &Potential, weight_power: u32, count: usize, tol: f64) -> Result<MomentTable<T>> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if count < 2 * potential.d() {
        return Err(Error::InvalidArgument(format!("need at least {} moments", 2 * potential.d())));
    }
    let cutoff = potential.cutoff(weight_power as f64, count, tol);
    let p = T::from_f64(weight_power as f64);
    let mu = trapezoid_vec(
        |x: T, out: &mut [T]| {
            let mut v = (-(p * potential.v(x))).exp();
            for o in out.iter_mut() {
                *o = v;
                v *= x;
            }
        },
        -cutoff,
        cutoff,
        count,
        tol,
    )?;
    Ok(MomentTable { potential: potential.clone(), weight_power, mu, tol, cutoff })
}

impl<T: Real> MomentTable<T> {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Integration by parts: k μ_{k−1} − p Σ_K u_K μ_{k+K−1} = 0.
    fn recursion_lhs(&self, k: usize) -> T {
        let p = T::from_f64(self.weight_power as f64);
        let mut acc = if k > 0 { T::from_f64(k as f64) * self.mu[k - 1] } else { T::zero() };
        for (i, &u) in self.potential.coeffs().iter().enumerate() {
            acc -= p * T::from_f64(u) * self.mu[k + i];
        }
        acc
    }

    /// max_k |k μ_{k−1} − p Σ u_K μ_{k+K−1}| / max(1, |μ_{k+2d−1}|).
    pub fn recursion_residual(&self) -> f64 {
        let deg = self.potential.degree();
        (0..self.mu.len().saturating_sub(deg - 1))
            .map(|k| self.recursion_lhs(k).to_f64().abs() / self.mu[k + deg - 1].to_f64().abs().max(1.0))
            .fold(0.0, f64::max)
    }

    /// Extends the table by the upward recursion
    /// μ_{k+2d−1} = (k μ_{k−1} − p Σ_{K<2d} u_K μ_{k+K−1}) / (p u_{2d}).
    pub fn extend_moments(&self, up_to: usize) -> Result<MomentTable<T>> {
        let deg = self.potential.degree();
        if self.mu.len() < deg - 1 {
            return Err(Error::InvalidArgument(format!("need {} seed moments", deg - 1)));
        }
        let mut out = self.clone();
        if up_to < out.mu.len() {
            return Ok(out);
        }
        let p = T::from_f64(self.weight_power as f64);
        let lead = p * T::from_f64(self.potential.u(deg));
        while out.mu.len() <= up_to {
            let top = out.mu.len();
            let k = top + 1 - deg;
            let mut acc = if k > 0 { T::from_f64(k as f64) * out.mu[k - 1] } else { T::zero() };
            for kk in 1..deg {
                acc -= p * T::from_f64(self.potential.u(kk)) * out.mu[k + kk - 1];
            }
            out.mu.push(acc / lead);
        }
        Ok(out)
    }

    /// Extends by recursion and cross-checks the top entry against direct quadrature.
    pub fn extend_checked(&self, up_to: usize) -> Result<MomentTable<T>> {
        let ext = self.extend_moments(up_to)?;
        let direct: MomentTable<T> = weight_moments(&self.potential, self.weight_power, up_to + 1, self.tol)?;
        let scale = |k: usize| direct.mu[k].to_f64().abs().max(1e-300);
        let worst = (self.mu.len()..=up_to)
            .map(|k| (ext.mu[k] - direct.mu[k]).to_f64().abs() / scale(k).max(direct.mu[k & !1].to_f64().abs()))
            .fold(0.0, f64::max);
        if worst > 1e-8 {
            return Err(Error::PrecisionLoss { what: "moment recursion", residual: worst });
        }
        Ok(ext)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "mu_k"])?;
        for (k, m) in self.mu.iter().enumerate() {
            wr.write_record([k.to_string(), format!("{}", m.to_dd())])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Grid on which ε-integrals are tabulated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let n = self.n.max(2);
        (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect()
    }
}

/// F_k(x) = ∫_{−∞}^x y^k e^{−V(y)} dy for k = 0..=k_max, in working precision.
pub fn lower_moments<T: Real>(potential: &Potential, k_max: usize, x: T, tol: f64) -> Result<Vec<T>> {
    // the tail beyond x − s_max must be negligible relative to the integrand near x
    let xf = x.to_f64();
    let need = (1.0 / tol).ln() + 8.0 + potential.v(xf).max(0.0);
    let mut reach: f64 = 2.0;
    while potential.v(-reach) - k_max as f64 * reach.ln() < need && reach < 200.0 {
        reach += 0.5;
    }
    let s_max = (xf + reach).max(1.0);
    half_line_vec(
        |s: T, out: &mut [T]| {
            let y = x - s;
            let mut v = (-potential.v(y)).exp();
            for o in out.iter_mut() {
                *o = v;
                v *= y;
            }
        },
        s_max,
        k_max + 1,
        tol,
    )
}

/// h_k(x) = ∫ ε(x−y) y^k e^{−V(y)} dy = 2F_k(x) − m_k, tabulated on a grid.
#[derive(Clone, Debug)]
pub struct EpsilonTable {
    pub potential: Potential,
    pub k_max: usize,
    pub grid: GridSpec,
    /// Single-weight moments m_k = ∫ y^k e^{−V}, the limits h_k(±∞) = ±m_k.
    pub m: Vec<Dd>,
    /// values[i][k] = h_k(grid point i).
    pub values: Vec<Vec<Dd>>,
    tol: f64,
}

pub fn epsilon_table(potential: &Potential, k_max: usize, grid: GridSpec) -> Result<EpsilonTable> {
    if k_max < 2 * potential.d() {
        return Err(Error::InvalidArgument(format!("k_max must be at least {}", 2 * potential.d())));
    }
    let tol = 1e-30;
    let m = weight_moments::<Dd>(potential, 1, k_max + 1, tol)?.mu;
    let mut table = EpsilonTable { potential: potential.clone(), k_max, grid, m, values: Vec::new(), tol };
    let mut values = Vec::with_capacity(grid.n);
    for x in grid.points() {
        values.push(table.h_all(x)?);
    }
    table.values = values;
    Ok(table)
}

impl EpsilonTable {
    /// h_0..h_{k_max} at x (computed on demand; x must lie in the grid range).
    pub fn h_all(&self, x: f64) -> Result<Vec<Dd>> {
        if x < self.grid.lo - 1e-12 || x > self.grid.hi + 1e-12 {
            return Err(Error::DomainError { x, lo: self.grid.lo, hi: self.grid.hi });
        }
        let f = lower_moments::<Dd>(&self.potential, self.k_max, Dd::from_f64(x), self.tol)?;
        Ok(f.iter().zip(&self.m).map(|(&fk, &mk)| fk.mul_f64(2.0) - mk).collect())
    }

    pub fn h(&self, k: usize, x: f64) -> Result<Dd> {
        if k > self.k_max {
            return Err(Error::IndexError(format!("k = {k} exceeds k_max = {}", self.k_max)));
        }
        Ok(self.h_all(x)?[k])
    }

    /// Max deviation of the central difference of h_k from 2 x^k e^{−V} at interior grid points.
    pub fn derivative_residual(&self) -> f64 {
        let pts = self.grid.points();
        let mut worst: f64 = 0.0;
        for i in 1..pts.len().saturating_sub(1) {
            let dx = pts[i + 1] - pts[i - 1];
            let w = (-self.potential.v(pts[i])).exp();
            for k in 0..=self.k_max {
                let fd = (self.values[i + 1][k] - self.values[i - 1][k]).to_f64() / dx;
                let exact = 2.0 * pts[i].powi(k as i32) * w;
                worst = worst.max((fd - exact).abs() / (1.0 + exact.abs()));
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["x".to_string()];
        header.extend((0..=self.k_max).map(|k| format!("h_{k}")));
        wr.write_record(&header)?;
        for (x, row) in self.grid.points().iter().zip(&self.values) {
            let mut rec = vec![format!("{x}")];
            rec.extend(row.iter().map(|v| format!("{:e}", v.to_f64())));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_degree_and_negative_lead() {
        assert!(Potential::new(vec![0.0, 0.0, 1.0]).is_err());
        assert!(Potential::new(vec![0.0, -1.0]).is_err());
        assert!(Potential::new(vec![0.0, 1.0, 0.0, 0.0]).is_ok());
        assert_eq!(Potential::new(vec![0.5, 1.0, 0.0, 0.0]).unwrap().d(), 1);
    }

    #[test]
    fn potential_evaluation() {
        let p = Potential::new(vec![0.3, -0.5, 0.2, 1.0]).unwrap();
        let x = 1.7f64;
        let v = 0.3 * x - 0.25 * x * x + 0.2 / 3.0 * x.powi(3) + 0.25 * x.powi(4);
        assert!((p.v(x) - v).abs() < 1e-14);
        let dv = 0.3 - 0.5 * x + 0.2 * x * x + x.powi(3);
        assert!((p.dv(x) - dv).abs() < 1e-14);
        assert!((p.dv_c(Complex64::new(x, 0.0)).re - dv).abs() < 1e-14);
    }

    #[test]
    fn moment_recursion_holds() {
        let p = Potential::new(vec![0.3, -0.5, 0.2, 1.0]).unwrap();
        let t: MomentTable<Dd> = seed_moments(&p, 24, 1e-30).unwrap();
        assert!(t.recursion_residual() < 1e-26, "{}", t.recursion_residual());
    }

    #[test]
    fn extension_of_short_table_matches_direct() {
        let p = Potential::quartic();
        let t: MomentTable<Dd> = seed_moments(&p, 4, 1e-30).unwrap();
        let e = t.extend_checked(12).unwrap();
        assert_eq!(e.len(), 13);
    }
}
