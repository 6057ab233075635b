//! The band operators Q, P, R, their diagonals ζ/η/α, R̄(x), and the checks of
//! the string equations, duality and triangularity relations.

use crate::conventions::{Beta, System, Wave};
use crate::dd::Dd;
use crate::error::Result;
use crate::moments::{seed_moments, Potential};
use crate::qlinalg::{asd_completion, QCell, QMatrix};
use crate::report::InvariantReport;
use crate::scalar::Field;
use crate::sop::SopFamily;

type DdMat = Vec<Vec<Dd>>;

/// Coefficients of `target` (degree < m) in the basis π_0..π_{m−1}.
fn expand(coeffs: &[Vec<Dd>], mut target: Vec<Dd>, m: usize) -> Vec<Dd> {
    let mut coef = vec![Dd::ZERO; m];
    for i in (0..m).rev() {
        if i < target.len() && target[i] != Dd::ZERO {
            let a = target[i];
            coef[i] = a;
            for (t, c) in target.iter_mut().zip(&coeffs[i]) {
                *t -= a * *c;
            }
        }
    }
    coef
}

fn dd_matmul(a: &DdMat, b: &DdMat) -> DdMat {
    let n = a.len();
    let mut out = vec![vec![Dd::ZERO; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == Dd::ZERO {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn to_qmatrix(m: &DdMat) -> QMatrix {
    QMatrix::from_fn(m.len() / 2, |i, j| m[i][j].to_f64())
}

fn sqrt_g(family: &SopFamily) -> Vec<Dd> {
    (0..family.n).map(|i| family.g[i / 2].sqrt()).collect()
}

/// Q from x π_n expanded in the π basis: x Φ = Q Φ.
pub fn build_q(family: &SopFamily) -> QMatrix {
    to_qmatrix(&q_dd(family))
}

fn q_dd(family: &SopFamily) -> DdMat {
    let n = family.n;
    let sq = sqrt_g(family);
    let mut q = vec![vec![Dd::ZERO; n]; n];
    for i in 0..n {
        let mut t = vec![Dd::ZERO];
        t.extend_from_slice(&family.coeffs[i]);
        let m = (i + 2).min(n);
        let cf = expand(&family.coeffs, t, m);
        for j in 0..m {
            q[i][j] = cf[j] * sq[j] / sq[i];
        }
    }
    q
}

/// Coefficients of x^shift·(π_i′ − V′π_i), or None if the degree exceeds the family.
fn derivative_poly(family: &SopFamily, i: usize, shift: usize) -> Option<Vec<Dd>> {
    let deg_v = family.potential.degree();
    let deg = i + deg_v - 1 + shift;
    if deg >= family.n {
        return None;
    }
    let c = &family.coeffs[i];
    let mut t = vec![Dd::ZERO; deg + 1];
    for k in 1..=i {
        t[k - 1 + shift] += c[k].mul_f64(k as f64);
    }
    for (k, &ck) in c.iter().enumerate() {
        for kk in 1..=deg_v {
            t[k + kk - 1 + shift] -= ck.mul_f64(family.potential.u(kk));
        }
    }
    Some(t)
}

/// Scalar matrix of ∫ x^shift Φ Φ^t e^{...} assembled into −2 (·) Z cells.
fn gram_p(family: &SopFamily, mu: &[Dd], shift: usize) -> DdMat {
    let n = family.n;
    let sq = sqrt_g(family);
    let v: DdMat = (0..n)
        .map(|b| (0..n).map(|i| family.coeffs[b].iter().enumerate().map(|(j, &c)| c * mu[i + j + shift]).sum()).collect())
        .collect();
    let gram: DdMat = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| family.coeffs[a].iter().enumerate().map(|(i, &c)| c * v[b][i]).sum::<Dd>() / (sq[a] * sq[b]))
                .collect()
        })
        .collect();
    let mut p = vec![vec![Dd::ZERO; n]; n];
    for a in 0..n {
        for m in 0..n / 2 {
            p[a][2 * m] = gram[a][2 * m + 1].mul_f64(2.0);
            p[a][2 * m + 1] = gram[a][2 * m].mul_f64(-2.0);
        }
    }
    p
}

/// Q, P, R on a truncation of n_q quaternion indices.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub beta: Beta,
    pub potential: Potential,
    pub d: usize,
    pub nq: usize,
    pub q: QMatrix,
    pub p: QMatrix,
    pub r: QMatrix,
    /// R from an expansion independent of the product formula (x φ′ for β=4, ∫xΦΦ^t for β=1).
    pub r_independent: QMatrix,
}

pub fn build_operators(family: &SopFamily) -> Result<OperatorSet> {
    let n = family.n;
    let sq = sqrt_g(family);
    let q = q_dd(family);
    let (p, r, r_ind) = match family.beta {
        Beta::Four => {
            let mut p = vec![vec![Dd::ZERO; n]; n];
            let mut r_ind = vec![vec![Dd::ZERO; n]; n];
            for i in 0..n {
                if let Some(t) = derivative_poly(family, i, 0) {
                    let m = t.len();
                    let cf = expand(&family.coeffs, t, m);
                    for j in 0..m {
                        p[i][j] = cf[j] * sq[j] / sq[i];
                    }
                }
                if let Some(t) = derivative_poly(family, i, 1) {
                    let m = t.len();
                    let cf = expand(&family.coeffs, t, m);
                    for j in 0..m {
                        r_ind[i][j] = cf[j] * sq[j] / sq[i];
                    }
                }
            }
            let r = dd_matmul(&p, &q);
            (p, r, r_ind)
        }
        Beta::One => {
            let mu = seed_moments::<Dd>(&family.potential, 2 * n + 2, 1e-30)?.mu;
            let p = gram_p(family, &mu, 0);
            let r_ind = gram_p(family, &mu, 1);
            let r = dd_matmul(&q, &p);
            (p, r, r_ind)
        }
    };
    Ok(OperatorSet {
        beta: family.beta,
        potential: family.potential.clone(),
        d: family.potential.d(),
        nq: n / 2,
        q: to_qmatrix(&q),
        p: to_qmatrix(&p),
        r: to_qmatrix(&r),
        r_independent: to_qmatrix(&r_ind),
    })
}

impl OperatorSet {
    /// Quaternion rows/columns [0, interior) unaffected by truncation after
    /// `products` band multiplications (2d guard rows per product).
    pub fn interior(&self, products: usize) -> usize {
        self.nq.saturating_sub(2 * self.d * products.max(1))
    }

    /// Quaternion rows of P and R that are complete on the truncation.
    pub fn valid_rows(&self) -> usize {
        self.nq.saturating_sub(self.d)
    }

    fn residual(&self, m: &QMatrix, products: usize) -> f64 {
        let k = self.interior(products);
        m.max_abs_cells(0..k, 0..k)
    }

    /// ζ_k(n) = P cell (n, n−k).
    pub fn zeta(&self, k: i64, n: usize) -> QCell {
        diag_cell(&self.p, k, n)
    }

    /// η_k(n) = R cell (n, n−k).
    pub fn eta(&self, k: i64, n: usize) -> QCell {
        diag_cell(&self.r, k, n)
    }

    /// α_k(n, x) = η_k(n) − x ζ_k(n).
    pub fn alpha(&self, k: i64, n: usize, x: f64) -> QCell {
        self.eta(k, n) - self.zeta(k, n).scale(x)
    }

    /// R̄(x) = R − xP band-limited to |k| ≤ d; minus the identity for the shifted system.
    pub fn rbar(&self, x: f64, system: System) -> QMatrix {
        self.rbar_at(x, system)
    }

    /// R̄ at a real or complex point.
    pub fn rbar_at<T: Field>(&self, x: T, system: System) -> QMatrix<T> {
        let r: QMatrix<T> = self.r.map(T::from_f64);
        let p: QMatrix<T> = self.p.map(T::from_f64);
        let rb = (&r - &p.scale(x)).band_limited(self.d);
        match system {
            System::Plain => rb,
            System::Shifted => &rb - &QMatrix::identity(self.nq),
        }
    }

    /// R̄ as it enters the Christoffel–Darboux commutator (carries ½ for β=1).
    pub fn rbar_gcd(&self, x: f64) -> QMatrix {
        self.rbar(x, System::Plain).scale(self.beta.gcd_rbar_scale())
    }

    /// V′(Q) = Σ_K u_K Q^{K−1}.
    pub fn v_prime_q(&self) -> QMatrix {
        let mut acc = QMatrix::zeros(self.nq);
        let mut qk = QMatrix::identity(self.nq);
        for k in 1..=self.potential.degree() {
            acc = &acc + &qk.scale(self.potential.u(k));
            qk = qk.matmul(&self.q);
        }
        acc
    }

    /// ([Q,P] − 1, [R,P] − P) on the interior.
    pub fn string_residuals(&self) -> (f64, f64) {
        let i = QMatrix::identity(self.nq);
        let qp = &self.q.commutator(&self.p) - &i;
        let rp = &self.r.commutator(&self.p) - &self.p;
        (self.residual(&qp, 1), self.residual(&rp, 2))
    }

    /// max(|P + P^D|, |R + R^D|) on the interior.
    pub fn duality_residual(&self) -> f64 {
        let a = &self.p + &self.p.dual();
        let b = &self.r + &self.r.dual();
        self.residual(&a, 1).max(self.residual(&b, 2))
    }

    /// (Q − Q^D)P and P(Q − Q^D) against σ·1 (σ = +1 for β=4, −1 for β=1).
    pub fn qqd_residual(&self) -> f64 {
        let qq = &self.q - &self.q.dual();
        let target = QMatrix::identity(self.nq).scale(self.beta.hat_sign());
        let a = &qq.matmul(&self.p) - &target;
        let b = &self.p.matmul(&qq) - &target;
        self.residual(&a, 2).max(self.residual(&b, 2))
    }

    /// |R − R_independent| on the interior (R = PQ for β=4, R = QP for β=1).
    pub fn product_residual(&self) -> f64 {
        self.residual(&(&self.r - &self.r_independent), 2)
    }

    /// Strictly upper scalar entries of P + V′(Q) and of R + QV′(Q) − (β=1: 1).
    pub fn upper_leakage(&self) -> (f64, f64) {
        let vq = self.v_prime_q();
        let a = &self.p + &vq;
        let b = &self.r + &self.q.matmul(&vq);
        let k = 2 * self.interior(2);
        let strict_upper = |m: &QMatrix, diag_ok: bool| {
            let mut worst: f64 = 0.0;
            for i in 0..k {
                for j in i..k {
                    if j == i && diag_ok {
                        continue;
                    }
                    worst = worst.max(m.get(i, j).abs());
                }
            }
            worst
        };
        (strict_upper(&a, false), strict_upper(&b, true))
    }

    /// P + T(V′(Q)) − E with E_n = [[0,0],[2n+1,0]].
    pub fn e_structure_residual(&self) -> f64 {
        let vq = self.v_prime_q();
        let e = QMatrix::block_diag(&e_cells(self.nq));
        let m = &(&self.p + &asd_completion(&vq)) - &e;
        self.residual(&m, 2)
    }

    /// Cells of P and R outside the quaternion band |k| ≤ d.
    pub fn band_tail(&self) -> f64 {
        let k = self.interior(2);
        let mut worst: f64 = 0.0;
        for n in 0..k {
            for m in 0..k {
                if n.abs_diff(m) > self.d {
                    worst = worst.max(self.p.cell(n, m).max_abs()).max(self.r.cell(n, m).max_abs());
                }
            }
        }
        worst
    }

    /// Σ_j [η_j(n) ζ_{l−j}(n−j) − ζ_j(n) η_{l−j}(n−j)] − ζ_l(n), over the interior.
    pub fn string1_residual(&self) -> f64 {
        let d = self.d as i64;
        let hi = self.interior(2) as i64;
        let mut worst: f64 = 0.0;
        for n in 0..hi {
            for l in -d..=d {
                if n - l < 0 || n - l >= hi {
                    continue;
                }
                let mut acc = QCell::zero();
                for j in -d..=d {
                    if (l - j).abs() > d || n - j < 0 {
                        continue;
                    }
                    let nj = (n - j) as usize;
                    acc = acc + self.eta(j, n as usize) * self.zeta(l - j, nj)
                        - self.zeta(j, n as usize) * self.eta(l - j, nj);
                }
                worst = worst.max((acc - self.zeta(l, n as usize)).max_abs());
            }
        }
        worst
    }

    /// Φ′ − PΦ (and Ψ′ − PΨ) at x on interior rows.
    pub fn derivative_residual(&self, family: &SopFamily, x: f64) -> Result<f64> {
        let rows = 2 * self.interior(1);
        let mut worst: f64 = 0.0;
        for wave in [Wave::Phi, Wave::Psi] {
            let v = family.wave_all(wave, x)?;
            let dv = family.wave_derivative(wave, x);
            let pv = self.p.matvec(&v);
            for i in 0..rows {
                worst = worst.max((pv[i] - dv[i]).abs());
            }
        }
        Ok(worst)
    }

    /// (|R̄(x)·primary|, |(R̄(x) − 1)·secondary|) on interior rows.
    pub fn annihilation_residual(&self, family: &SopFamily, x: f64) -> Result<(f64, f64)> {
        let rows = 2 * self.interior(1);
        let mut out = [0.0f64; 2];
        let waves = [self.beta.primary_wave(), other(self.beta.primary_wave())];
        for (slot, wave) in waves.into_iter().enumerate() {
            let v = family.wave_all(wave, x)?;
            let r = self.rbar(x, self.beta.system_for(wave)).matvec(&v);
            out[slot] = r[..rows].iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        Ok((out[0], out[1]))
    }

    /// ζ_{±d} carry only the a10 entry and η_{±d} are lower triangular.
    pub fn outermost_structure_residual(&self) -> f64 {
        let d = self.d as i64;
        let mut worst: f64 = 0.0;
        for n in self.d..self.interior(1) {
            for k in [-d, d] {
                let z = self.zeta(k, n);
                let e = self.eta(k, n);
                worst = worst.max(z.a[0][0].abs()).max(z.a[0][1].abs()).max(z.a[1][1].abs()).max(e.a[0][1].abs());
            }
        }
        worst
    }

    /// min over |x| ≤ x_max and interior n of |det α_{±d}(n, x)| / max|α|².
    pub fn alpha_invertibility(&self, x_max: f64, steps: usize) -> f64 {
        let d = self.d as i64;
        let mut worst = f64::INFINITY;
        for s in 0..=steps {
            let x = -x_max + 2.0 * x_max * s as f64 / steps as f64;
            for n in self.d..self.interior(1) {
                for k in [-d, d] {
                    let a = self.alpha(k, n, x);
                    let scale = a.max_abs().powi(2).max(1e-300);
                    worst = worst.min(a.det().abs() / scale);
                }
            }
        }
        worst
    }
}

fn diag_cell(m: &QMatrix, k: i64, n: usize) -> QCell {
    let col = n as i64 - k;
    if col < 0 || col >= m.nq() as i64 {
        return QCell::zero();
    }
    m.cell(n, col as usize)
}

pub(crate) fn other(w: Wave) -> Wave {
    match w {
        Wave::Phi => Wave::Psi,
        Wave::Psi => Wave::Phi,
    }
}

/// E_n = [[0,0],[2n+1,0]], the diagonal-cell correction in P = −T(V′(Q)) + E.
pub fn e_cells(nq: usize) -> Vec<QCell> {
    (0..nq).map(|n| QCell::new(0.0, 0.0, (2 * n + 1) as f64, 0.0)).collect()
}

/// Every band-operator invariant with its tolerance.
pub fn operator_suite(set: &OperatorSet, family: &SopFamily, xs: &[f64]) -> Result<Vec<InvariantReport>> {
    let tag = format!("beta{}", set.beta.as_int());
    let (qp, rp) = set.string_residuals();
    let (lp, lr) = set.upper_leakage();
    let mut out = vec![
        InvariantReport::new(format!("{tag}.string.QP"), qp, 1e-9),
        InvariantReport::new(format!("{tag}.string.RP"), rp, 1e-9),
        InvariantReport::new(format!("{tag}.duality"), set.duality_residual(), 1e-9),
        InvariantReport::new(format!("{tag}.qqd"), set.qqd_residual(), 1e-9),
        InvariantReport::new(format!("{tag}.product"), set.product_residual(), 1e-9),
        InvariantReport::new(format!("{tag}.lower.P"), lp, 1e-9),
        InvariantReport::new(format!("{tag}.lower.R"), lr, 1e-9),
        InvariantReport::new(format!("{tag}.E_structure"), set.e_structure_residual(), 1e-9),
        InvariantReport::new(format!("{tag}.band_tail"), set.band_tail(), 1e-9),
        InvariantReport::new(format!("{tag}.string1"), set.string1_residual(), 1e-9),
        InvariantReport::new(format!("{tag}.outermost"), set.outermost_structure_residual(), 1e-9),
        InvariantReport::above(format!("{tag}.alpha_invertible"), set.alpha_invertibility(6.0, 48), 1e-12),
    ];
    let mut der: f64 = 0.0;
    let mut ann: f64 = 0.0;
    let mut ann2: f64 = 0.0;
    for &x in xs {
        der = der.max(set.derivative_residual(family, x)?);
        let (a, b) = set.annihilation_residual(family, x)?;
        ann = ann.max(a);
        ann2 = ann2.max(b);
    }
    out.push(InvariantReport::new(format!("{tag}.derivative"), der, 1e-8));
    out.push(InvariantReport::new(format!("{tag}.annihilation.primary"), ann, 1e-8));
    out.push(InvariantReport::new(format!("{tag}.annihilation.secondary"), ann2, 1e-8));
    Ok(out)
}
