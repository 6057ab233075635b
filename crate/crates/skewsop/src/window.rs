//! Windows, ladder matrices, folding, deformation matrices (full and folded)
//! and the folded ODE matrices.
//!
//! The window at N is the 2d quaternion entries N−d..N+d−1 of a wave vector.
//! Everything here is evaluated at explicit x; polynomiality in x is checked
//! by interpolation rather than carried symbolically.

use num_complex::Complex64;
use serde::Serialize;

use crate::conventions::{System, Wave};
use crate::error::{Error, Result};
use crate::moments::Potential;
use crate::operators::{build_operators, e_cells, OperatorSet};
use crate::qlinalg::{asd_completion, QCell, QMatrix, Triangle};
use crate::report::InvariantReport;
use crate::scalar::Field;
use crate::sop::{rebuild_with, SopFamily};

/// 2d quaternion entries of a wave vector around N.
#[derive(Clone, Debug, Serialize)]
pub struct WindowVector {
    pub n: usize,
    pub d: usize,
    pub wave: Wave,
    pub values: Vec<f64>,
}

fn check_window(d: usize, n: usize, nq: usize, guard: usize) -> Result<()> {
    if n < d {
        return Err(Error::IndexError(format!("window needs N >= d (N = {n}, d = {d})")));
    }
    if n + d + guard > nq {
        return Err(Error::IndexError(format!(
            "window at N = {n} needs {} quaternion indices, truncation has {nq}",
            n + d + guard
        )));
    }
    Ok(())
}

fn slice_window<T: Copy>(v: &[T], d: usize, n: usize) -> Vec<T> {
    v[2 * (n - d)..2 * (n + d)].to_vec()
}

/// Φ_W or Ψ_W at real x.
pub fn window(family: &SopFamily, n: usize, x: f64, wave: Wave) -> Result<WindowVector> {
    let d = family.potential.d();
    check_window(d, n, family.nq(), 0)?;
    let v = family.wave_all(wave, x)?;
    Ok(WindowVector { n, d, wave, values: slice_window(&v, d, n) })
}

/// The window at complex x.
pub fn window_c(family: &SopFamily, n: usize, x: Complex64, wave: Wave) -> Result<Vec<Complex64>> {
    let d = family.potential.d();
    check_window(d, n, family.nq(), 0)?;
    Ok(slice_window(&family.wave_all_c(wave, x)?, d, n))
}

/// x-derivative of the real window (analytic).
pub fn window_derivative(family: &SopFamily, n: usize, x: f64, wave: Wave) -> Result<Vec<f64>> {
    let d = family.potential.d();
    check_window(d, n, family.nq(), 0)?;
    Ok(slice_window(&family.wave_derivative(wave, x), d, n))
}

/// α_k(n, x) for the given system (the shifted one subtracts 1 from α_0).
pub fn alpha_cell<T: Field>(set: &OperatorSet, system: System, k: i64, n: usize, x: T) -> QCell<T> {
    let a = set.eta(k, n).map(T::from_f64) - set.zeta(k, n).map(T::from_f64).scale(x);
    if system == System::Shifted && k == 0 {
        a - QCell::identity()
    } else {
        a
    }
}

/// Ladder A_N (plain) or B_N (shifted): maps the window at N to the window at N+1.
pub fn ladder<T: Field>(set: &OperatorSet, n: usize, x: T, system: System) -> Result<QMatrix<T>> {
    let d = set.d;
    check_window(d, n, set.nq, d)?;
    let mut a = QMatrix::zeros(2 * d);
    for r in 0..2 * d - 1 {
        a.set_cell(r, r + 1, QCell::identity());
    }
    let inv = alpha_cell(set, system, -(d as i64), n, x).inverse()?;
    for c in 0..2 * d {
        let k = d as i64 - c as i64;
        a.set_cell(2 * d - 1, c, -(inv * alpha_cell(set, system, k, n, x)));
    }
    Ok(a)
}

/// dA_N/dx, from α_k′ = −ζ_k.
pub fn ladder_derivative<T: Field>(set: &OperatorSet, n: usize, x: T, system: System) -> Result<QMatrix<T>> {
    let d = set.d;
    check_window(d, n, set.nq, d)?;
    let mut a = QMatrix::zeros(2 * d);
    let md = -(d as i64);
    let zeta = |k: i64| set.zeta(k, n).map(T::from_f64);
    let inv = alpha_cell(set, system, md, n, x).inverse()?;
    let dinv = inv * zeta(md) * inv;
    for c in 0..2 * d {
        let k = d as i64 - c as i64;
        let ak = alpha_cell(set, system, k, n, x);
        // d/dx[−α_{−d}^{-1} α_k] = −(α_{−d}^{-1})′ α_k + α_{−d}^{-1} ζ_k
        a.set_cell(2 * d - 1, c, -(dinv * ak) + inv * zeta(k));
    }
    Ok(a)
}

/// Inverse of A_{N−1}: maps the window at N to the window at N−1.
pub fn inverse_ladder<T: Field>(set: &OperatorSet, n: usize, x: T, system: System) -> Result<QMatrix<T>> {
    let d = set.d;
    if n < d + 1 {
        return Err(Error::IndexError(format!("inverse ladder needs N >= d + 1 (N = {n})")));
    }
    check_window(d, n, set.nq, d)?;
    let m = n - 1;
    let mut a = QMatrix::zeros(2 * d);
    for r in 1..2 * d {
        a.set_cell(r, r - 1, QCell::identity());
    }
    let inv = alpha_cell(set, system, d as i64, m, x).inverse()?;
    for c in 0..2 * d {
        let k = d as i64 - 1 - c as i64;
        a.set_cell(0, c, -(inv * alpha_cell(set, system, k, m, x)));
    }
    Ok(a)
}

/// Folding at window N: F = (L⁻¹ − R⁻¹)[R̄, Π_N] with the one-sided inverses of R̄
/// built from the triangular factors G (strictly lower) and C (strictly upper).
/// Real x gives the polynomial coefficients; complex x serves off-axis solutions.
#[derive(Clone, Debug)]
pub struct Folding<T: Field = f64> {
    pub n: usize,
    pub d: usize,
    pub x: T,
    pub system: System,
    pub rbar: QMatrix<T>,
    pub g: QMatrix<T>,
    pub c: QMatrix<T>,
    pub linv: QMatrix<T>,
    pub rinv: QMatrix<T>,
    pub comm: QMatrix<T>,
    pub f: QMatrix<T>,
}

pub fn folding<T: Field>(set: &OperatorSet, n: usize, x: T, system: System) -> Result<Folding<T>> {
    let d = set.d;
    let nq = set.nq;
    check_window(d, n, nq, 2 * d)?;
    // rows of R̄ at or beyond nv are incomplete on the truncation and are dropped
    let nv = set.valid_rows();
    let rb = set.rbar_at(x, system).masked(0..nv, 0..nq);
    let mut ad_inv = Vec::with_capacity(nq);
    let mut amd_inv = Vec::with_capacity(nq);
    for k in 0..nq {
        ad_inv.push(if k >= d && k < nv { rb.cell(k, k - d).inverse()? } else { QCell::zero() });
        amd_inv.push(if k < nv { rb.cell(k, k + d).inverse()? } else { QCell::zero() });
    }
    let ad_inv = QMatrix::block_diag(&ad_inv);
    let amd_inv = QMatrix::block_diag(&amd_inv);
    let lam = QMatrix::shift_power(nq, d);
    let lam_t = lam.transpose();
    let id = QMatrix::identity(nq);
    let lam_ad = lam.matmul(&ad_inv);
    let lamt_amd = lam_t.matmul(&amd_inv);
    // rows of G and C whose diagonal-side cells cancel analytically are zeroed exactly
    let g_full = &(&id - &QMatrix::proj(nq, d)) - &lamt_amd.matmul(&rb);
    let c_full = &id - &lam_ad.matmul(&rb);
    let g = strict_part(&g_full, Triangle::StrictlyLower, nq);
    let c = strict_part(&c_full, Triangle::StrictlyUpper, nv.saturating_sub(d));
    let linv = QMatrix::triangular_inverse(&c, Triangle::StrictlyUpper)?.matmul(&lam_ad);
    let rinv = QMatrix::triangular_inverse(&g, Triangle::StrictlyLower)?.matmul(&lamt_amd);
    let pn = QMatrix::proj(nq, n);
    let comm = &rb.matmul(&pn) - &pn.matmul(&rb);
    let f = (&linv - &rinv).matmul(&comm);
    Ok(Folding { n, d, x, system, rbar: rb, g, c, linv, rinv, comm, f })
}

/// Cells strictly below (or above) the diagonal, for quaternion rows [0, rows).
fn strict_part<T: Field>(m: &QMatrix<T>, kind: Triangle, rows: usize) -> QMatrix<T> {
    let mut out = QMatrix::zeros(m.nq());
    for i in 0..rows {
        for j in 0..m.nq() {
            let keep = match kind {
                Triangle::StrictlyLower => j < i,
                Triangle::StrictlyUpper => j > i,
            };
            if keep {
                out.set_cell(i, j, m.cell(i, j));
            }
        }
    }
    out
}

impl<T: Field> Folding<T> {
    /// Window cell indices N−d..N+d−1.
    pub fn window_range(&self) -> std::ops::Range<usize> {
        self.n - self.d..self.n + self.d
    }

    /// Rows where the truncated folding is exact: below the window and up to nq − 4d above it.
    pub fn safe_rows(&self) -> Vec<usize> {
        let nq = self.f.nq();
        (0..nq.saturating_sub(4 * self.d)).collect()
    }

    /// F restricted to window columns (scalar rows of F, 4d columns).
    pub fn row(&self, m: usize) -> Vec<QCell<T>> {
        self.window_range().map(|k| self.f.cell(m, k)).collect()
    }

    /// max |v_m − Σ_k F_{m,k} v_k| over the given quaternion rows.
    pub fn reproduction_residual(&self, v: &[T], rows: &[usize]) -> f64 {
        let mut worst: f64 = 0.0;
        for &m in rows {
            let mut acc = [T::zero(); 2];
            for k in self.window_range() {
                let c = self.f.cell(m, k);
                let vk = [v[2 * k], v[2 * k + 1]];
                let a = c.apply(vk);
                acc[0] += a[0];
                acc[1] += a[1];
            }
            worst = worst.max((acc[0] - v[2 * m]).modulus()).max((acc[1] - v[2 * m + 1]).modulus());
        }
        worst
    }

    /// |F| outside the window columns (must vanish) on safe rows.
    pub fn off_window_leak(&self) -> f64 {
        let w = self.window_range();
        let mut worst: f64 = 0.0;
        for m in self.safe_rows() {
            for k in 0..self.f.nq() {
                if !w.contains(&k) {
                    worst = worst.max(self.f.cell(m, k).max_abs());
                }
            }
        }
        worst
    }

    /// |F_{W,W} − 1|.
    pub fn window_identity_residual(&self) -> f64 {
        let lo = self.n - self.d;
        let sub = self.f.sub_block(lo, 2 * self.d);
        (&sub - &QMatrix::identity(2 * self.d)).max_abs()
    }

    /// Π_W X F restricted to window columns, as a 2d×2d quaternion matrix.
    pub fn fold(&self, x: &QMatrix<T>) -> QMatrix<T> {
        x.matmul(&self.f).sub_block(self.n - self.d, 2 * self.d)
    }

    /// `fold` of a real operator (P, U_K) at this folding's point.
    pub fn fold_real(&self, x: &QMatrix) -> QMatrix<T> {
        self.fold(&x.map(T::from_f64))
    }
}

/// U_K = −(1/K) T(Q^K), T the anti-self-dual completion of the upper part.
pub fn deformation_u(set: &OperatorSet, k: u32) -> QMatrix {
    asd_completion(&set.q.powi(k)).scale(-1.0 / k as f64)
}

/// Closed form of Π_W T(X) F for X = Q^K (xk = x^K) or X = V′(Q) (xk = V′(x)).
fn closed_t(x_mat: &QMatrix, xk: f64, fold: &Folding) -> QMatrix {
    let d = fold.d;
    let n = fold.n;
    let (up, x0, lo) = x_mat.parts();
    let (upd, _, lod) = x_mat.dual().parts();
    let s = (&x0 + &x0.dual()).scale(0.5);
    let top = &(&up + &upd) + &s;
    let bot = &(&lo + &lod) + &s;
    let mut out = QMatrix::zeros(2 * d);
    for a in 0..d {
        for b in 0..d {
            let shift = if a == b { QCell::scalar(xk) } else { QCell::zero() };
            out.set_cell(a, b, top.cell(n - d + a, n - d + b) - shift);
            out.set_cell(d + a, d + b, -bot.cell(n + a, n + b) + shift);
        }
    }
    let am = &x_mat.clone() - &QMatrix::identity(x_mat.nq()).scale(xk);
    let wm = &am.matmul(&fold.rinv) + &am.dual().matmul(&fold.linv);
    let t = wm.matmul(&fold.comm).sub_block(n - d, 2 * d);
    &out - &t
}

/// U_K^N two ways: folded directly (Π_W U_K F) and by the closed formula.
#[derive(Clone, Debug)]
pub struct FoldedPair {
    pub direct: QMatrix,
    pub closed: QMatrix,
}

impl FoldedPair {
    pub fn agreement(&self) -> f64 {
        (&self.direct - &self.closed).max_abs()
    }
}

pub fn folded_deformation(set: &OperatorSet, fold: &Folding, k: u32) -> FoldedPair {
    let direct = fold.fold(&deformation_u(set, k));
    let x = fold.x;
    let closed = closed_t(&set.q.powi(k), x.powi(k as i32), fold).scale(-1.0 / k as f64);
    FoldedPair { direct, closed }
}

/// D_N (plain system) or the underline D_N (shifted): Π_W P F and its closed form
/// −[V′(Q) fold] + E on the window.
pub fn ode_d(set: &OperatorSet, fold: &Folding) -> FoldedPair {
    let direct = fold.fold(&set.p);
    let x = fold.x;
    let vq = set.v_prime_q();
    let mut closed = closed_t(&vq, set.potential.dv(x), fold).scale(-1.0);
    let e = e_cells(set.nq);
    for a in 0..2 * fold.d {
        let cell = closed.cell(a, a) + e[fold.n - fold.d + a];
        closed.set_cell(a, a, cell);
    }
    FoldedPair { direct, closed }
}

/// Σ₃ = diag(1,…,1,−1,…,−1) with d quaternion blocks each.
pub fn sigma3(d: usize) -> QMatrix {
    let mut m = QMatrix::zeros(2 * d);
    for a in 0..2 * d {
        m.set_cell(a, a, QCell::scalar(if a < d { 1.0 } else { -1.0 }));
    }
    m
}

fn vec_residual(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn rel_residual(a: &QMatrix, b: &QMatrix) -> f64 {
    (a - b).max_abs() / b.max_abs().max(1.0)
}

/// Family and operators at u_K ± h.
struct Perturbed {
    plus: (SopFamily, OperatorSet),
    minus: (SopFamily, OperatorSet),
    h: f64,
}

fn perturbed(family: &SopFamily, k: usize, h: f64) -> Result<Perturbed> {
    let build = |pot: Potential| -> Result<(SopFamily, OperatorSet)> {
        let f = rebuild_with(family, &pot)?;
        let s = build_operators(&f)?;
        Ok((f, s))
    };
    Ok(Perturbed {
        plus: build(family.potential.perturbed(k, h)?)?,
        minus: build(family.potential.perturbed(k, -h)?)?,
        h,
    })
}

/// Residuals of the difference–differential–deformation system at one N and x.
#[derive(Clone, Debug, Serialize)]
pub struct WindowResiduals {
    pub n: usize,
    pub x: f64,
    pub k: u32,
    pub system: System,
    pub wave: Wave,
    pub ladder: f64,
    pub inverse_ladder: f64,
    pub fold_above: f64,
    pub fold_below: f64,
    pub fold_safe_rows: f64,
    pub fold_leak: f64,
    pub ode: f64,
    pub ode_closed_vs_direct: f64,
    pub deformation_window: f64,
    pub deformation_closed_vs_direct: f64,
    pub string2_p: f64,
    pub string2_r: f64,
    pub u_anti_self_dual: f64,
    pub compat_shift_x: f64,
    pub compat_shift_u: f64,
    pub compat_x_u: f64,
}

/// Checks every window identity for the given wave (its system is read off the
/// convention table) at window N, point x and deformation index K, using the
/// family rebuilt at u_K ± h as the deformation oracle.
pub fn window_residuals(
    family: &SopFamily,
    set: &OperatorSet,
    wave: Wave,
    n: usize,
    x: f64,
    k: u32,
    h: f64,
) -> Result<WindowResiduals> {
    let pert = perturbed(family, k as usize, h)?;
    window_residuals_with(family, set, &pert, wave, n, x, k)
}

fn window_residuals_with(
    family: &SopFamily,
    set: &OperatorSet,
    pert: &Perturbed,
    wave: Wave,
    n: usize,
    x: f64,
    k: u32,
) -> Result<WindowResiduals> {
    let d = set.d;
    let system = family.beta.system_for(wave);
    let full = family.wave_all(wave, x)?;
    let wn = slice_window(&full, d, n);
    let wn1 = slice_window(&full, d, n + 1);

    let a = ladder(set, n, x, system)?;
    let ladder_res = vec_residual(&a.matvec(&wn), &wn1);
    let ainv = inverse_ladder(set, n + 1, x, system)?;
    let inverse_res = vec_residual(&ainv.matvec(&wn1), &wn);

    let fold = folding(set, n, x, system)?;
    let fold_above = fold.reproduction_residual(&full, &[n + d]);
    let fold_below = if n > d { fold.reproduction_residual(&full, &[n - d - 1]) } else { 0.0 };
    let fold_safe = fold.reproduction_residual(&full, &fold.safe_rows());
    let leak = fold.off_window_leak().max(fold.window_identity_residual());

    let dm = ode_d(set, &fold);
    let dw = slice_window(&family.wave_derivative(wave, x), d, n);
    let ode_res = vec_residual(&dm.direct.matvec(&wn), &dw);
    let ode_agree = rel_residual(&dm.closed, &dm.direct);

    let um = folded_deformation(set, &fold, k);
    let wp = slice_window(&pert.plus.0.wave_all(wave, x)?, d, n);
    let wm = slice_window(&pert.minus.0.wave_all(wave, x)?, d, n);
    let dwu: Vec<f64> = wp.iter().zip(&wm).map(|(p, m)| (p - m) / (2.0 * pert.h)).collect();
    let uw = um.direct.matvec(&wn);
    let scale = dwu.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let def_res = vec_residual(&uw, &dwu) / scale;
    let def_agree = rel_residual(&um.closed, &um.direct);

    let u_full = deformation_u(set, k);
    let inner = set.interior(2);
    let dp = (&pert.plus.1.p - &pert.minus.1.p).scale(0.5 / pert.h);
    let dr = (&pert.plus.1.r - &pert.minus.1.r).scale(0.5 / pert.h);
    let cp = u_full.commutator(&set.p);
    let cr = u_full.commutator(&set.r);
    let string2_p = (&dp - &cp).max_abs_cells(0..inner, 0..inner) / cp.max_abs_cells(0..inner, 0..inner).max(1.0);
    let string2_r = (&dr - &cr).max_abs_cells(0..inner, 0..inner) / cr.max_abs_cells(0..inner, 0..inner).max(1.0);
    let asd = (&u_full + &u_full.dual()).max_abs_cells(0..inner, 0..inner);

    // the compatibility conditions hold on solutions, so they are applied to the window
    let on_window = |m: &QMatrix, reference: &QMatrix| -> f64 {
        let r = reference.matvec(&wn);
        let scale = r.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        m.matvec(&wn).iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale
    };

    // (A_N′ + A_N D_N − D_{N+1} A_N) Φ_W = 0
    let fold1 = folding(set, n + 1, x, system)?;
    let d1 = ode_d(set, &fold1).direct;
    let ap = ladder_derivative(set, n, x, system)?;
    let d1a = d1.matmul(&a);
    let compat_x = on_window(&(&(&ap + &a.matmul(&dm.direct)) - &d1a), &d1a);

    // (∂_u A_N + A_N U_N − U_{N+1} A_N) Φ_W = 0
    let ap_u = ladder(&pert.plus.1, n, x, system)?;
    let am_u = ladder(&pert.minus.1, n, x, system)?;
    let du_a = (&ap_u - &am_u).scale(0.5 / pert.h);
    let u1a = folded_deformation(set, &fold1, k).direct.matmul(&a);
    let compat_u = on_window(&(&(&du_a + &a.matmul(&um.direct)) - &u1a), &u1a);

    // (∂_u D_N − ∂_x U_N − [U_N, D_N]) Φ_W = 0
    let fp = folding(&pert.plus.1, n, x, system)?;
    let fm = folding(&pert.minus.1, n, x, system)?;
    let du_d = (&ode_d(&pert.plus.1, &fp).direct - &ode_d(&pert.minus.1, &fm).direct).scale(0.5 / pert.h);
    let hx = 1e-3;
    let ux = |xx: f64| -> Result<QMatrix> { Ok(folded_deformation(set, &folding(set, n, xx, system)?, k).direct) };
    let dx_u = (&(&ux(x - 2.0 * hx)? - &ux(x - hx)?.scale(8.0)) + &(&ux(x + hx)?.scale(8.0) - &ux(x + 2.0 * hx)?))
        .scale(1.0 / (12.0 * hx));
    let ud = um.direct.commutator(&dm.direct);
    let compat_xu = on_window(&(&(&du_d - &dx_u) - &ud), &du_d);

    Ok(WindowResiduals {
        n,
        x,
        k,
        system,
        wave,
        ladder: ladder_res,
        inverse_ladder: inverse_res,
        fold_above,
        fold_below,
        fold_safe_rows: fold_safe,
        fold_leak: leak,
        ode: ode_res,
        ode_closed_vs_direct: ode_agree,
        deformation_window: def_res,
        deformation_closed_vs_direct: def_agree,
        string2_p,
        string2_r,
        u_anti_self_dual: asd,
        compat_shift_x: compat_x,
        compat_shift_u: compat_u,
        compat_x_u: compat_xu,
    })
}

/// Max over sample rows of the interpolation defect of F_{m,W}(x) as a polynomial:
/// fit on `degree + 1` Chebyshev points in [−1, 1], test at other points.
pub fn folding_polynomiality(set: &OperatorSet, n: usize, system: System, rows: &[usize], degree: usize) -> Result<f64> {
    let nodes: Vec<f64> = (0..=degree)
        .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / (degree + 1) as f64).cos())
        .collect();
    let samples: Vec<Folding> = nodes.iter().map(|&x| folding(set, n, x, system)).collect::<Result<_>>()?;
    let probes = [-0.83, -0.31, 0.12, 0.57, 0.94];
    let mut worst: f64 = 0.0;
    for &x in &probes {
        let actual = folding(set, n, x, system)?;
        let weights: Vec<f64> = (0..nodes.len())
            .map(|i| {
                nodes.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &xj)| (x - xj) / (nodes[i] - xj)).product()
            })
            .collect();
        for &m in rows {
            for c in actual.window_range() {
                let truth = actual.f.cell(m, c);
                let mut interp = QCell::zero();
                for (s, w) in samples.iter().zip(&weights) {
                    interp = interp + s.f.cell(m, c).scale(*w);
                }
                worst = worst.max((interp - truth).max_abs() / truth.max_abs().max(1.0));
            }
        }
    }
    Ok(worst)
}

/// The window-system invariants for both waves over N = d..d+n_count−1 at each x.
pub fn compatibility_suite(
    family: &SopFamily,
    set: &OperatorSet,
    ns: std::ops::Range<usize>,
    xs: &[f64],
    ks: &[u32],
    h: f64,
) -> Result<Vec<InvariantReport>> {
    let tag = format!("beta{}", set.beta.as_int());
    let mut worst = std::collections::BTreeMap::<&'static str, f64>::new();
    let mut bump = |key: &'static str, v: f64| {
        let e = worst.entry(key).or_insert(0.0);
        *e = e.max(v);
    };
    for &k in ks {
        let pert = perturbed(family, k as usize, h)?;
        for n in ns.clone() {
            for &x in xs {
                for wave in [Wave::Phi, Wave::Psi] {
                    let r = window_residuals_with(family, set, &pert, wave, n, x, k)?;
                    bump("ladder", r.ladder.max(r.inverse_ladder));
                    bump("fold.adjacent", r.fold_above.max(r.fold_below));
                    bump("fold.structure", r.fold_leak);
                    bump("ode", r.ode);
                    bump("ode.closed_vs_direct", r.ode_closed_vs_direct);
                    bump("deformation.window", r.deformation_window);
                    bump("deformation.closed_vs_direct", r.deformation_closed_vs_direct);
                    bump("string2", r.string2_p.max(r.string2_r));
                    bump("U.anti_self_dual", r.u_anti_self_dual);
                    bump("compat.shift_x", r.compat_shift_x);
                    bump("compat.shift_u", r.compat_shift_u);
                    bump("compat.x_u", r.compat_x_u);
                }
            }
        }
    }
    let tol = |key: &str| match key {
        "ladder" | "fold.adjacent" | "ode" => 1e-8,
        "fold.structure" | "ode.closed_vs_direct" | "deformation.closed_vs_direct" | "U.anti_self_dual" => 1e-9,
        "deformation.window" | "string2" => 1e-6,
        _ => 1e-7,
    };
    Ok(worst.into_iter().map(|(k, v)| InvariantReport::new(format!("{tag}.window.{k}"), v, tol(k))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma3_squares_to_identity() {
        let s = sigma3(2);
        assert_eq!(s.matmul(&s), QMatrix::identity(4));
    }
}
