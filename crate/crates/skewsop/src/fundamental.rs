//! Moment functions f_j, the Cauchy-like transforms and the f_j-based auxiliary
//! solutions, their difference–differential–deformation residuals, and the
//! fundamental matrices built from windows of all of them.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::conventions::{Beta, Wave};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::moments::{lower_moments, weight_moments, Potential};
use crate::operators::{build_operators, OperatorSet};
use crate::quadrature::{breakpoints, GaussLegendre};
use crate::report::InvariantReport;
use crate::sop::{rebuild_with, SopFamily};
use crate::window::{deformation_u, folding, ladder};

/// Default minimum distance of a Cauchy-transform point from the real axis.
pub const MIN_IM: f64 = 0.1;

/// Panel width of the fixed real-line rule; with 20 nodes per panel the Cauchy
/// kernel is resolved to ~1e−13 at distance `MIN_IM`.
const PANEL: f64 = 0.125;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// f_j(x) = e^{V(x)} ∫ ε(x−y) y^j e^{−V(y)} dy, j = 0..2d−2.
#[derive(Clone, Debug)]
pub struct MomentFunction {
    pub potential: Potential,
    pub j: usize,
    /// m_j = ∫ y^j e^{−V}
    pub m: f64,
    /// f_j(0), the constant of the antiderivative form
    pub c: f64,
    /// real points beyond ±domain are rejected by the ε-form evaluator
    pub domain: f64,
    m_dd: Dd,
}

impl MomentFunction {
    pub fn new(potential: &Potential, j: usize) -> Result<Self> {
        let d = potential.d();
        if j > 2 * d - 2 {
            return Err(Error::IndexError(format!("j = {j} exceeds 2d − 2 = {}", 2 * d - 2)));
        }
        let m = weight_moments::<Dd>(potential, 1, (2 * d).max(j + 1), 1e-30)?.mu[j];
        // V(0) = 0, so f_j(0) = h_j(0)
        let c = lower_moments::<Dd>(potential, j, Dd::ZERO, 1e-28)?[j].mul_f64(2.0) - m;
        Ok(MomentFunction {
            potential: potential.clone(),
            j,
            m: m.to_f64(),
            c: c.to_f64(),
            m_dd: m,
            domain: potential.cutoff(1.0, j + 2, 1e-22),
        })
    }

    /// ε-form e^{V}(2F_j(x) − m_j) in double-double.
    pub fn value(&self, x: f64) -> Result<f64> {
        if x.abs() > self.domain {
            return Err(Error::DomainError { x, lo: -self.domain, hi: self.domain });
        }
        let f = lower_moments::<Dd>(&self.potential, self.j, Dd::from_f64(x), 1e-28)?[self.j];
        Ok((f.mul_f64(2.0) - self.m_dd).to_f64() * self.potential.v(x).exp())
    }

    /// Antiderivative form e^{V(z)}(f_j(0) e^{−V(0)} + 2∫_0^z y^j e^{−V}), entire in z.
    pub fn value_c(&self, z: Complex64) -> Complex64 {
        let gl = GaussLegendre::new(20);
        let panels = (z.norm() / PANEL).ceil().max(1.0) as usize;
        let mut acc = c(0.0);
        for p in 0..panels {
            let a = z * (p as f64 / panels as f64);
            let b = z * ((p + 1) as f64 / panels as f64);
            for (t, w) in gl.segment(a, b) {
                acc += w * t.powu(self.j as u32) * (-self.potential.v_c(t)).exp();
            }
        }
        self.potential.v_c(z).exp() * (c(self.c) + acc * 2.0)
    }

    /// f_j′ = V′ f_j + 2x^j.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        Ok(self.potential.dv(x) * self.value(x)? + 2.0 * x.powi(self.j as i32))
    }

    /// max over xs of |f_j′ − V′f_j − 2x^j| with f_j′ by central differences (step h),
    /// relative to max(1, |2x^j|, |V′ f_j|).
    pub fn identity_residual(&self, xs: &[f64], h: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &x in xs {
            let fd = (self.value(x + h)? - self.value(x - h)?) / (2.0 * h);
            let vf = self.potential.dv(x) * self.value(x)?;
            let rhs = 2.0 * x.powi(self.j as i32);
            worst = worst.max((fd - vf - rhs).abs() / rhs.abs().max(vf.abs()).max(1.0));
        }
        Ok(worst)
    }
}

/// f_j(x) by the ε-form.
pub fn moment_function(potential: &Potential, j: usize, x: f64) -> Result<f64> {
    MomentFunction::new(potential, j)?.value(x)
}

/// Which transform a solution vector comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AuxKind {
    /// e^{V(x)} ∫ w_n(z) e^{−V(z)} / (x − z) dz
    Cauchy,
    /// ∫ (f_j(x) − f_j(z)) / (x − z) w_n(z) e^{−V(z)} dz
    Moment(usize),
}

impl AuxKind {
    pub fn label(self) -> String {
        match self {
            AuxKind::Cauchy => "cauchy".into(),
            AuxKind::Moment(j) => format!("f{j}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuxSolution {
    pub kind: AuxKind,
    pub wave: Wave,
    pub x: Complex64,
    /// one value per scalar index n
    pub values: Vec<Complex64>,
}

/// The real-line rule and every node value the transforms of one family need.
#[derive(Clone, Debug)]
pub struct Transforms {
    pub beta: Beta,
    pub potential: Potential,
    pub n: usize,
    /// integration limit; the integrands are negligible beyond it
    pub limit: f64,
    pub min_im: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ew: Vec<f64>,
    phi: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    moment: Vec<MomentFunction>,
    phi_total: Vec<f64>,
}

impl Transforms {
    pub fn new(family: &SopFamily) -> Result<Self> {
        Self::build(family, None)
    }

    /// Transforms of a deformed family that keep the ε-integrals h_j = e^{−V} f_j
    /// (and the real-line rule) of `base`, so that f_j changes only through e^{V}.
    pub fn with_moments_of(family: &SopFamily, base: &Transforms) -> Result<Self> {
        Self::build(family, Some(base))
    }

    fn build(family: &SopFamily, base: Option<&Transforms>) -> Result<Self> {
        let pot = family.potential.clone();
        let l = base.map_or(family.domain(), |b| b.limit);
        let gl = GaussLegendre::new(20);
        let bp = breakpoints(-l, l, PANEL, &[]);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in bp.windows(2) {
            for (t, wt) in gl.mapped(w[0], w[1]) {
                nodes.push(t);
                weights.push(wt);
            }
        }
        let ew: Vec<f64> = nodes.iter().map(|&z| (-pot.v(z)).exp()).collect();
        let phi: Vec<Vec<f64>> = nodes.iter().map(|&z| family.phi_all(z)).collect();
        let psi = family.psi_batch(&nodes)?;
        let jmax = 2 * pot.d() - 2;
        if let Some(b) = base {
            // the ε-integrals h_j = f_j e^{−V} are held fixed; f_j follows e^{V}
            let h = b.h.clone();
            let phi_total = (0..family.n).map(|i| family.phi_integral(i)).collect();
            return Ok(Transforms {
                beta: family.beta,
                potential: pot,
                n: family.n,
                limit: l,
                min_im: b.min_im,
                nodes,
                weights,
                ew,
                phi,
                psi,
                h,
                moment: b.moment.clone(),
                phi_total,
            });
        }
        let moment: Vec<MomentFunction> = (0..=jmax).map(|j| MomentFunction::new(&pot, j)).collect::<Result<_>>()?;
        // h_j(z) = 2∫_{−L}^{z} y^j e^{−V} − m_j by a cumulative sweep over the (sorted) nodes
        let small = GaussLegendre::new(10);
        let mut acc = vec![0.0f64; jmax + 1];
        let mut pos = -l;
        let mut h = Vec::with_capacity(nodes.len());
        for &z in &nodes {
            for (t, w) in small.mapped(pos, z) {
                let e = (-pot.v(t)).exp();
                let mut tp = 1.0;
                for a in acc.iter_mut() {
                    *a += w * tp * e;
                    tp *= t;
                }
            }
            pos = z;
            h.push(acc.iter().zip(&moment).map(|(a, mf)| 2.0 * a - mf.m).collect());
        }
        let phi_total = (0..family.n).map(|i| family.phi_integral(i)).collect();
        Ok(Transforms {
            beta: family.beta,
            potential: pot,
            n: family.n,
            limit: l,
            min_im: MIN_IM,
            nodes,
            weights,
            ew,
            phi,
            psi,
            h,
            moment,
            phi_total,
        })
    }

    fn wave_at(&self, wave: Wave, i: usize) -> &[f64] {
        match wave {
            Wave::Phi => &self.phi[i],
            Wave::Psi => &self.psi[i],
        }
    }

    pub fn moment_function(&self, j: usize) -> Result<&MomentFunction> {
        self.moment.get(j).ok_or_else(|| Error::IndexError(format!("no moment function f_{j}")))
    }

    /// ∫ z^k w_n(z) e^{−V(z)} dz for all n.
    pub fn wave_moment(&self, wave: Wave, k: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.nodes.len() {
            let s = self.weights[i] * self.ew[i] * self.nodes[i].powi(k as i32);
            for (o, v) in out.iter_mut().zip(self.wave_at(wave, i)) {
                *o += s * v;
            }
        }
        out
    }

    /// ∫ w_n(z) e^{−V(z)} / (x − z) dz (the transform without the e^{V(x)} factor).
    pub fn cauchy_integral(&self, wave: Wave, x: Complex64) -> Result<Vec<Complex64>> {
        if x.im.abs() < self.min_im {
            return Err(Error::OnRealAxis { im: x.im, min: self.min_im });
        }
        let mut out = vec![c(0.0); self.n];
        for i in 0..self.nodes.len() {
            let k = (x - self.nodes[i]).inv() * (self.weights[i] * self.ew[i]);
            for (o, v) in out.iter_mut().zip(self.wave_at(wave, i)) {
                *o += k * v;
            }
        }
        Ok(out)
    }

    pub fn cauchy_transform(&self, wave: Wave, x: Complex64) -> Result<AuxSolution> {
        let scale = self.potential.v_c(x).exp();
        let values = self.cauchy_integral(wave, x)?.into_iter().map(|v| v * scale).collect();
        Ok(AuxSolution { kind: AuxKind::Cauchy, wave, x, values })
    }

    /// The f_j-based solution at real or complex x. For β=1 Ψ the integrand decays
    /// only like 1/z; it is taken as the symmetric limit, with the analytic tail
    /// beyond ±L added back.
    pub fn aux_solution(&self, j: usize, wave: Wave, x: Complex64) -> Result<AuxSolution> {
        let mf = self.moment_function(j)?;
        // e^{V(x)} h_j(x) with h_j taken from the family the moment function was built on
        let r = (self.potential.v_c(x) - mf.potential.v_c(x)).exp();
        let fx = mf.value_c(x) * r;
        let dfx = self.potential.dv_c(x) * fx + x.powu(j as u32) * (2.0 * r);
        let mut out = vec![c(0.0); self.n];
        for i in 0..self.nodes.len() {
            let z = self.nodes[i];
            let diff = x - z;
            // (f_j(x) − f_j(z)) e^{−V(z)} / (x − z), with f_j(z) e^{−V(z)} = h_j(z)
            let q = if diff.norm() < 1e-9 {
                dfx * self.ew[i]
            } else {
                (fx * self.ew[i] - self.h[i][j]) / diff
            };
            let s = q * self.weights[i];
            for (o, v) in out.iter_mut().zip(self.wave_at(wave, i)) {
                *o += s * v;
            }
        }
        if self.beta == Beta::One && wave == Wave::Psi {
            let l = self.limit;
            let log = ((x + l) / (c(l) - x)).ln();
            for (o, t) in out.iter_mut().zip(&self.phi_total) {
                *o += log * (mf.m * t);
            }
        }
        Ok(AuxSolution { kind: AuxKind::Moment(j), wave, x, values: out })
    }

    pub fn solution(&self, kind: AuxKind, wave: Wave, x: Complex64) -> Result<AuxSolution> {
        match kind {
            AuxKind::Cauchy => self.cauchy_transform(wave, x),
            AuxKind::Moment(j) => self.aux_solution(j, wave, x),
        }
    }
}

/// A family, its operators and transforms, plus the same at u_K ± h for the
/// deformation checks.
pub struct FundamentalContext {
    pub family: SopFamily,
    pub set: OperatorSet,
    pub transforms: Transforms,
    pub k: u32,
    pub h: f64,
    plus: (SopFamily, OperatorSet, Transforms),
    minus: (SopFamily, OperatorSet, Transforms),
}

impl FundamentalContext {
    pub fn new(family: &SopFamily, k: u32, h: f64) -> Result<Self> {
        let transforms = Transforms::new(family)?;
        let build = |f: SopFamily| -> Result<(SopFamily, OperatorSet, Transforms)> {
            let s = build_operators(&f)?;
            let t = Transforms::with_moments_of(&f, &transforms)?;
            Ok((f, s, t))
        };
        let plus = build(rebuild_with(family, &family.potential.perturbed(k as usize, h)?)?)?;
        let minus = build(rebuild_with(family, &family.potential.perturbed(k as usize, -h)?)?)?;
        Ok(FundamentalContext {
            family: family.clone(),
            set: build_operators(family)?,
            transforms,
            k,
            h,
            plus,
            minus,
        })
    }

    /// The full solution vector of a column kind (the wave itself, or a transform).
    fn column(&self, which: Column, wave: Wave, x: Complex64, at: Shift) -> Result<Vec<Complex64>> {
        let (fam, tr) = match at {
            Shift::None => (&self.family, &self.transforms),
            Shift::Plus => (&self.plus.0, &self.plus.2),
            Shift::Minus => (&self.minus.0, &self.minus.2),
        };
        match which {
            Column::Wave => fam.wave_all_c(wave, x),
            Column::Aux(kind) => Ok(tr.solution(kind, wave, x)?.values),
        }
    }

    fn x_derivative(&self, which: Column, wave: Wave, x: Complex64) -> Result<Vec<Complex64>> {
        // fourth-order central difference along the real direction (the solutions are analytic)
        let hx = 1e-3;
        let f = |s: f64| self.column(which, wave, x + s, Shift::None);
        let (m2, m1, p1, p2) = (f(-2.0 * hx)?, f(-hx)?, f(hx)?, f(2.0 * hx)?);
        Ok((0..m2.len()).map(|i| (m2[i] - m1[i] * 8.0 + p1[i] * 8.0 - p2[i]) / (12.0 * hx)).collect())
    }

    fn u_derivative(&self, which: Column, wave: Wave, x: Complex64) -> Result<Vec<Complex64>> {
        let p = self.column(which, wave, x, Shift::Plus)?;
        let m = self.column(which, wave, x, Shift::Minus)?;
        Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * self.h)).collect())
    }

    /// Residuals of one transform in the three systems (rows n ≥ 2d), plus the ODE
    /// residual on rows n < 2d, where the transforms are not solutions.
    pub fn solution_residuals(&self, kind: AuxKind, wave: Wave, x: Complex64) -> Result<SystemResiduals> {
        let d = self.set.d;
        let which = Column::Aux(kind);
        let v = self.column(which, wave, x, Shift::None)?;
        let hi = 2 * self.set.interior(1);
        let lo = 2 * d;
        let rel = |a: &[Complex64], b: &[Complex64], rows: std::ops::Range<usize>| -> f64 {
            let scale = rows.clone().map(|i| b[i].norm()).fold(1.0f64, f64::max);
            rows.map(|i| (a[i] - b[i]).norm()).fold(0.0f64, f64::max) / scale
        };
        let pv = self.set.p.to_c64().matvec(&v);
        let dv = self.x_derivative(which, wave, x)?;
        let system = self.family.beta.system_for(wave);
        let rv = self.set.rbar_at(x, system).matvec(&v);
        let vmax = (lo..hi).map(|i| v[i].norm()).fold(0.0f64, f64::max);
        let rmax = (lo..hi).map(|i| rv[i].norm()).fold(0.0f64, f64::max);
        let recursion = rmax / (self.set.rbar_at(x, system).max_abs() * vmax).max(1e-300);
        let uv = deformation_u(&self.set, self.k).to_c64().matvec(&v);
        let du = self.u_derivative(which, wave, x)?;
        Ok(SystemResiduals {
            kind,
            wave,
            x,
            ode: rel(&dv, &pv, lo..hi),
            recursion,
            deformation: rel(&du, &uv, lo..hi),
            ode_below: rel(&dv, &pv, 0..lo),
        })
    }

    /// Φ_[W] or Ψ_[W] at window N: columns window, Cauchy transform, f_0..f_{2d−2}.
    pub fn fundamental_matrix(&self, wave: Wave, n: usize, x: Complex64) -> Result<FundamentalMatrix> {
        let d = self.set.d;
        let system = self.family.beta.system_for(wave);
        let mut cols = vec![Column::Wave, Column::Aux(AuxKind::Cauchy)];
        cols.extend((0..=2 * d - 2).map(|j| Column::Aux(AuxKind::Moment(j))));
        let fold = folding(&self.set, n, x, system)?;
        let dn = fold.fold_real(&self.set.p);
        let un = fold.fold_real(&deformation_u(&self.set, self.k));
        let an = ladder(&self.set, n, x, system)?;
        let win = |v: &[Complex64], m: usize| v[2 * (m - d)..2 * (m + d)].to_vec();
        let rel = |a: &[Complex64], b: &[Complex64]| -> f64 {
            let scale = b.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
            a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0f64, f64::max) / scale
        };
        let mut columns = Vec::new();
        let mut residuals = Vec::new();
        for &col in &cols {
            let full = self.column(col, wave, x, Shift::None)?;
            let w = win(&full, n);
            let dw = win(&self.x_derivative(col, wave, x)?, n);
            let uw = win(&self.u_derivative(col, wave, x)?, n);
            residuals.push(ColumnResidual {
                label: col.label(),
                ode: rel(&dw, &dn.matvec(&w)),
                shift: rel(&an.matvec(&w), &win(&full, n + 1)),
                deformation: rel(&uw, &un.matvec(&w)),
            });
            columns.push(w);
        }
        let gram_det = gram_determinant(&columns);
        Ok(FundamentalMatrix { wave, n, d, x, labels: cols.iter().map(|c| c.label()).collect(), columns, residuals, gram_det })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Column {
    Wave,
    Aux(AuxKind),
}

impl Column {
    fn label(self) -> String {
        match self {
            Column::Wave => "window".into(),
            Column::Aux(k) => k.label(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shift {
    None,
    Plus,
    Minus,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemResiduals {
    pub kind: AuxKind,
    pub wave: Wave,
    pub x: Complex64,
    /// |v′ − Pv| on rows n ≥ 2d, relative to max(1, |Pv|)
    pub ode: f64,
    /// |R̄ v| (or |(R̄ − 1) v|) on rows n ≥ 2d, relative to |R̄|·|v|
    pub recursion: f64,
    /// |∂_u v − U_K v| on rows n ≥ 2d
    pub deformation: f64,
    /// the ODE residual on rows n < 2d (not small)
    pub ode_below: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ColumnResidual {
    pub label: String,
    /// |d/dx v_W − D_N v_W|
    pub ode: f64,
    /// |A_N v_W − v_{W+1}|
    pub shift: f64,
    /// |∂_u v_W − U_K^N v_W|
    pub deformation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalMatrix {
    pub wave: Wave,
    pub n: usize,
    pub d: usize,
    pub x: Complex64,
    pub labels: Vec<String>,
    /// 2d + 1 columns of 4d scalar entries
    pub columns: Vec<Vec<Complex64>>,
    pub residuals: Vec<ColumnResidual>,
    /// det(YᴴY) of the column-normalized matrix Y; nonzero iff the columns are independent
    pub gram_det: f64,
}

impl FundamentalMatrix {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["row", "column", "re", "im"])?;
        for (label, col) in self.labels.iter().zip(&self.columns) {
            for (r, v) in col.iter().enumerate() {
                wr.write_record([r.to_string(), label.clone(), format!("{:.17e}", v.re), format!("{:.17e}", v.im)])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// det(YᴴY) for the column-normalized Y.
pub fn gram_determinant(columns: &[Vec<Complex64>]) -> f64 {
    let rows = columns.first().map_or(0, |c| c.len());
    let y = DMatrix::from_fn(rows, columns.len(), |i, j| {
        let norm = columns[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        columns[j][i] / norm
    });
    (y.adjoint() * &y).determinant().re
}

/// Orthogonality relations of φ_{2k} (β=1) or ψ_{2k}′ (β=4) against the weight
/// e^{−V} and the ε-integrals h_j.
#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub beta: Beta,
    pub k: usize,
    /// max over the single-integral conditions j = 0..2k−2d+1 (relative)
    pub single: f64,
    /// max over the ε-double-integral conditions j = 0..2d−2 (relative)
    pub double: f64,
    /// the first single-integral index outside the range (generically nonzero)
    pub negative_control: f64,
}

pub fn orthogonality_certificates(family: &SopFamily, k: usize) -> Result<CertificateReport> {
    let d = family.potential.d();
    let idx = 2 * k;
    if idx >= family.n {
        return Err(Error::IndexError(format!("2k = {idx} exceeds the family size {}", family.n)));
    }
    let tr = Transforms::new(family)?;
    let pot = &family.potential;
    // f(z): φ_{2k} for β=1, ψ′_{2k} = φ″_{2k} for β=4
    let f: Vec<f64> = tr
        .nodes
        .iter()
        .map(|&z| match family.beta {
            Beta::One => family.phi_all(z)[idx],
            Beta::Four => family.d2phi_all(z)[idx],
        })
        .collect();
    let single = |j: usize| -> f64 {
        let (mut s, mut a) = (0.0, 0.0);
        for i in 0..tr.nodes.len() {
            let t = tr.weights[i] * f[i] * tr.nodes[i].powi(j as i32) * (-pot.v(tr.nodes[i])).exp();
            s += t;
            a += t.abs();
        }
        s.abs() / a.max(1e-300)
    };
    let top = (2 * k + 1).checked_sub(2 * d);
    let single_max = match top {
        Some(t) => (0..=t).map(single).fold(0.0, f64::max),
        None => 0.0,
    };
    let negative_control = single(top.map_or(0, |t| t + 1));
    // double integrals ∫ g(x) h_m(x) dx with g = φ_{2k}, m = j (β=1) or g = ψ_{2k}, m = j + 2d − 1 (β=4)
    let mut double: f64 = 0.0;
    let hm: Vec<Vec<f64>> = match family.beta {
        Beta::One => tr.h.clone(),
        Beta::Four => {
            let ms = (0..=2 * d - 2).map(|j| j + 2 * d - 1).max().unwrap_or(0);
            let mf = weight_moments::<f64>(pot, 1, (ms + 1).max(2 * d), 1e-15)?.mu;
            let small = GaussLegendre::new(10);
            let mut acc = vec![0.0f64; ms + 1];
            let mut pos = -tr.limit;
            let mut out = Vec::with_capacity(tr.nodes.len());
            for &z in &tr.nodes {
                for (t, w) in small.mapped(pos, z) {
                    let e = (-pot.v(t)).exp();
                    let mut tp = 1.0;
                    for a in acc.iter_mut() {
                        *a += w * tp * e;
                        tp *= t;
                    }
                }
                pos = z;
                out.push((2 * d - 1..=ms).map(|m| 2.0 * acc[m] - mf[m]).collect());
            }
            out
        }
    };
    for j in 0..=2 * d - 2 {
        let (mut s, mut a) = (0.0, 0.0);
        for i in 0..tr.nodes.len() {
            let g = match family.beta {
                Beta::One => tr.phi[i][idx],
                Beta::Four => tr.psi[i][idx],
            };
            let t = tr.weights[i] * g * hm[i][j];
            s += t;
            a += t.abs();
        }
        double = double.max(s.abs() / a.max(1e-300));
    }
    Ok(CertificateReport { beta: family.beta, k, single: single_max, double, negative_control })
}

/// Transform residuals (Ψ transforms, the family's own system) and fundamental-matrix
/// probes as invariant reports.
pub fn fundamental_suite(ctx: &FundamentalContext, n: usize, xs: &[Complex64], ks: &[usize]) -> Result<Vec<InvariantReport>> {
    let tag = format!("beta{}", ctx.family.beta.as_int());
    let d = ctx.set.d;
    let mut kinds = vec![AuxKind::Cauchy];
    kinds.extend((0..=2 * d - 2).map(AuxKind::Moment));
    let (mut ode, mut rec, mut def, mut below) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for &x in xs {
        for &kind in &kinds {
            let r = ctx.solution_residuals(kind, Wave::Psi, x)?;
            ode = ode.max(r.ode);
            rec = rec.max(r.recursion);
            def = def.max(r.deformation);
            if kind == AuxKind::Cauchy {
                below = below.min(r.ode_below);
            }
        }
    }
    let (mut col, mut gram) = (0.0f64, f64::INFINITY);
    for &x in xs {
        let fm = ctx.fundamental_matrix(Wave::Psi, n, x)?;
        for r in &fm.residuals {
            col = col.max(r.ode).max(r.shift).max(r.deformation);
        }
        gram = gram.min(fm.gram_det.abs());
    }
    let mut cert: f64 = 0.0;
    let mut neg = f64::INFINITY;
    for &k in ks {
        let c = orthogonality_certificates(&ctx.family, k)?;
        cert = cert.max(c.single);
        if ctx.family.beta == Beta::One {
            cert = cert.max(c.double);
        }
        neg = neg.min(c.negative_control);
    }
    let grid: Vec<f64> = (0..20).map(|i| -2.5 + 0.26 * i as f64).collect();
    let mut ident: f64 = 0.0;
    for j in 0..=2 * d - 2 {
        ident = ident.max(ctx.transforms.moment_function(j)?.identity_residual(&grid, 1e-5)?);
    }
    Ok(vec![
        InvariantReport::new(format!("{tag}.moment_function.identity"), ident, 1e-7),
        InvariantReport::new(format!("{tag}.transforms.ode"), ode, 1e-6),
        InvariantReport::new(format!("{tag}.transforms.recursion"), rec, 1e-6),
        InvariantReport::new(format!("{tag}.transforms.deformation"), def, 1e-6),
        InvariantReport::above(format!("{tag}.transforms.below_2d"), below, 1e-3),
        InvariantReport::new(format!("{tag}.fundamental.columns"), col, 1e-6),
        InvariantReport::above(format!("{tag}.fundamental.gram_det"), gram, 1e-8),
        InvariantReport::new(format!("{tag}.certificates"), cert, 1e-8),
        InvariantReport::above(format!("{tag}.certificates.negative_control"), neg, 1e-6),
    ])
}
