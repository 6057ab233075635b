//! Quaternion (2×2 block) matrices.
//!
//! Quaternion index n addresses scalar rows 2n and 2n+1. The dual of a matrix
//! is A^D = −Z A^t Z with Z the block-diagonal symplectic unit; cellwise,
//! (A^D)_{nm} = dual(A_{mn}) with dual([[a,b],[c,e]]) = [[e,−b],[−c,a]].

use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Field;

/// A 2×2 block `[[a00, a01], [a10, a11]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QCell<T: Field = f64> {
    pub a: [[T; 2]; 2],
}

impl<T: Field> QCell<T> {
    pub fn new(a00: T, a01: T, a10: T, a11: T) -> Self {
        QCell { a: [[a00, a01], [a10, a11]] }
    }

    pub fn zero() -> Self {
        QCell { a: [[T::zero(); 2]; 2] }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn scalar(s: T) -> Self {
        Self::new(s, T::zero(), T::zero(), s)
    }

    /// Z = [[0, 1], [−1, 0]].
    pub fn z() -> Self {
        Self::new(T::zero(), T::one(), -T::one(), T::zero())
    }

    pub fn dual(&self) -> Self {
        let [[a, b], [c, e]] = self.a;
        Self::new(e, -b, -c, a)
    }

    pub fn transpose(&self) -> Self {
        let [[a, b], [c, e]] = self.a;
        Self::new(a, c, b, e)
    }

    pub fn det(&self) -> T {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn scale(&self, s: T) -> Self {
        let [[a, b], [c, e]] = self.a;
        Self::new(a * s, b * s, c * s, e * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().flatten().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Exact 2×2 inverse; `Singular` when |det| ≤ tol·‖c‖².
    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        let scale = self.max_abs();
        if det.modulus() <= 1e-14 * scale * scale || scale == 0.0 || !det.modulus().is_finite() {
            return Err(Error::Singular { what: format!("2x2 cell with det {:.3e}", det.modulus()) });
        }
        let [[a, b], [c, e]] = self.a;
        let inv = T::one() / det;
        Ok(Self::new(e * inv, -b * inv, -c * inv, a * inv))
    }

    pub fn map<U: Field>(&self, f: impl Fn(T) -> U) -> QCell<U> {
        let [[a, b], [c, e]] = self.a;
        QCell::new(f(a), f(b), f(c), f(e))
    }

    pub fn apply(&self, v: [T; 2]) -> [T; 2] {
        [self.a[0][0] * v[0] + self.a[0][1] * v[1], self.a[1][0] * v[0] + self.a[1][1] * v[1]]
    }
}

impl<T: Field> Add for QCell<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..2 {
            for j in 0..2 {
                r.a[i][j] += o.a[i][j];
            }
        }
        r
    }
}

impl<T: Field> Sub for QCell<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Field> Neg for QCell<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Field> Mul for QCell<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                r.a[i][j] = self.a[i][0] * o.a[0][j] + self.a[i][1] * o.a[1][j];
            }
        }
        r
    }
}

/// Structural kind of a strictly triangular factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Triangle {
    StrictlyLower,
    StrictlyUpper,
}

/// Dense matrix of n_q × n_q quaternion cells (2n_q × 2n_q scalars, row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix<T: Field = f64> {
    nq: usize,
    data: Vec<T>,
}

impl<T: Field> QMatrix<T> {
    pub fn zeros(nq: usize) -> Self {
        QMatrix { nq, data: vec![T::zero(); 4 * nq * nq] }
    }

    pub fn identity(nq: usize) -> Self {
        let mut m = Self::zeros(nq);
        for i in 0..2 * nq {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_fn(nq: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let n = 2 * nq;
        let mut m = Self::zeros(nq);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Block-diagonal matrix from quaternion cells.
    pub fn block_diag(cells: &[QCell<T>]) -> Self {
        let mut m = Self::zeros(cells.len());
        for (n, c) in cells.iter().enumerate() {
            m.set_cell(n, n, *c);
        }
        m
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    /// Scalar dimension 2n_q.
    pub fn dim(&self) -> usize {
        2 * self.nq
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * 2 * self.nq + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let n = 2 * self.nq;
        self.data[i * n + j] = v;
    }

    pub fn cell(&self, n: usize, m: usize) -> QCell<T> {
        QCell::new(
            self.get(2 * n, 2 * m),
            self.get(2 * n, 2 * m + 1),
            self.get(2 * n + 1, 2 * m),
            self.get(2 * n + 1, 2 * m + 1),
        )
    }

    pub fn set_cell(&mut self, n: usize, m: usize, c: QCell<T>) {
        for i in 0..2 {
            for j in 0..2 {
                self.set(2 * n + i, 2 * m + j, c.a[i][j]);
            }
        }
    }

    pub fn map<U: Field>(&self, f: impl Fn(T) -> U) -> QMatrix<U> {
        QMatrix { nq: self.nq, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn to_c64(&self) -> QMatrix<Complex64> {
        self.map(|v| v.to_c64())
    }

    pub fn scale(&self, s: T) -> Self {
        QMatrix { nq: self.nq, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim();
        Self::from_fn(self.nq, |i, j| self.data[j * n + i])
    }

    /// A^D = −Z A^t Z.
    pub fn dual(&self) -> Self {
        let mut out = Self::zeros(self.nq);
        for n in 0..self.nq {
            for m in 0..self.nq {
                out.set_cell(n, m, self.cell(m, n).dual());
            }
        }
        out
    }

    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.nq, o.nq, "quaternion dimensions differ");
        let n = self.dim();
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let ok = &o.data[k * n..(k + 1) * n];
                for (dst, &b) in orow.iter_mut().zip(ok) {
                    *dst += a * b;
                }
            }
        }
        QMatrix { nq: self.nq, data: out }
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length");
        (0..n)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..n {
                    acc += self.data[i * n + j] * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.nq);
        for _ in 0..k {
            acc = acc.matmul(self);
        }
        acc
    }

    /// AB − BA.
    pub fn commutator(&self, o: &Self) -> Self {
        &self.matmul(o) - &o.matmul(self)
    }

    /// (strictly upper, diagonal, strictly lower) parts at the cell level.
    pub fn parts(&self) -> (Self, Self, Self) {
        let mut up = Self::zeros(self.nq);
        let mut diag = Self::zeros(self.nq);
        let mut low = Self::zeros(self.nq);
        for n in 0..self.nq {
            for m in 0..self.nq {
                let c = self.cell(n, m);
                match m.cmp(&n) {
                    std::cmp::Ordering::Greater => up.set_cell(n, m, c),
                    std::cmp::Ordering::Equal => diag.set_cell(n, m, c),
                    std::cmp::Ordering::Less => low.set_cell(n, m, c),
                }
            }
        }
        (up, diag, low)
    }

    /// Copy with cells outside |n − m| ≤ b set to zero.
    pub fn band_limited(&self, b: usize) -> Self {
        let mut out = self.clone();
        for n in 0..self.nq {
            for m in 0..self.nq {
                if n.abs_diff(m) > b {
                    out.set_cell(n, m, QCell::zero());
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Max modulus over the cell rectangle rows × cols.
    pub fn max_abs_cells(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> f64 {
        let mut worst: f64 = 0.0;
        for n in rows {
            for m in cols.clone() {
                worst = worst.max(self.cell(n, m).max_abs());
            }
        }
        worst
    }

    /// Max modulus of the cell rows [lo, hi) over all columns.
    pub fn max_abs_rows(&self, lo: usize, hi: usize) -> f64 {
        self.max_abs_cells(lo..hi.min(self.nq), 0..self.nq)
    }

    /// Square sub-matrix of cells [lo, lo + len).
    pub fn sub_block(&self, lo: usize, len: usize) -> Self {
        let mut out = Self::zeros(len);
        for n in 0..len {
            for m in 0..len {
                out.set_cell(n, m, self.cell(lo + n, lo + m));
            }
        }
        out
    }

    /// Cells outside the rectangle rows × cols set to zero.
    pub fn masked(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut out = Self::zeros(self.nq);
        for n in rows {
            for m in cols.clone() {
                out.set_cell(n, m, self.cell(n, m));
            }
        }
        out
    }

    /// Λ^d: identity cells on the d-th quaternion superdiagonal, (Λ^d X)_n = X_{n+d}.
    pub fn shift_power(nq: usize, d: usize) -> Self {
        let mut m = Self::zeros(nq);
        for n in 0..nq.saturating_sub(d) {
            m.set_cell(n, n + d, QCell::identity());
        }
        m
    }

    /// Π_N: identity on the first N quaternion indices.
    pub fn proj(nq: usize, n: usize) -> Self {
        Self::proj_range(nq, 0, n)
    }

    /// Π^N = 1 − Π_N.
    pub fn proj_upper(nq: usize, n: usize) -> Self {
        Self::proj_range(nq, n, nq)
    }

    /// Π_N^M = Π_N − Π_M: identity on quaternion indices [M, N).
    pub fn proj_range(nq: usize, m: usize, n: usize) -> Self {
        let mut p = Self::zeros(nq);
        for k in m..n.min(nq) {
            p.set_cell(k, k, QCell::identity());
        }
        p
    }

    /// (1 − T)^{-1} for strictly triangular T, by substitution (the finite Neumann series).
    pub fn triangular_inverse(t: &Self, kind: Triangle) -> Result<Self> {
        let n = t.dim();
        for i in 0..n {
            for j in 0..n {
                let bad = match kind {
                    Triangle::StrictlyLower => j >= i,
                    Triangle::StrictlyUpper => j <= i,
                };
                if bad && t.get(i, j) != T::zero() {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not {kind:?} at ({i}, {j})"
                    )));
                }
            }
        }
        let mut x = Self::identity(t.nq);
        let order: Vec<usize> = match kind {
            Triangle::StrictlyLower => (0..n).collect(),
            Triangle::StrictlyUpper => (0..n).rev().collect(),
        };
        // row i of X = e_i + Σ_j T_ij X_j over already computed rows j
        for &i in &order {
            let mut row = vec![T::zero(); n];
            row[i] = T::one();
            for j in 0..n {
                let tij = t.get(i, j);
                if tij == T::zero() {
                    continue;
                }
                for k in 0..n {
                    row[k] += tij * x.get(j, k);
                }
            }
            for k in 0..n {
                x.set(i, k, row[k]);
            }
        }
        Ok(x)
    }

    /// LU factorization with partial pivoting; returns the determinant.
    pub fn det(&self) -> T {
        let n = self.dim();
        let mut a = self.data.clone();
        let mut det = T::one();
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| a[x * n + c].modulus().partial_cmp(&a[y * n + c].modulus()).unwrap()).unwrap();
            if a[p * n + c].modulus() == 0.0 {
                return T::zero();
            }
            if p != c {
                for k in 0..n {
                    a.swap(p * n + k, c * n + k);
                }
                det = -det;
            }
            let piv = a[c * n + c];
            det *= piv;
            for r in c + 1..n {
                let f = a[r * n + c] / piv;
                if f == T::zero() {
                    continue;
                }
                for k in c..n {
                    let v = a[c * n + k];
                    a[r * n + k] -= f * v;
                }
            }
        }
        det
    }

    /// Dense inverse by Gauss–Jordan with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim();
        let mut a = self.data.clone();
        let mut inv = Self::identity(self.nq).data;
        let scale = self.max_abs().max(1e-300);
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| a[x * n + c].modulus().partial_cmp(&a[y * n + c].modulus()).unwrap()).unwrap();
            if a[p * n + c].modulus() <= 1e-15 * scale {
                return Err(Error::Singular { what: "dense inverse".into() });
            }
            for k in 0..n {
                a.swap(p * n + k, c * n + k);
                inv.swap(p * n + k, c * n + k);
            }
            let piv = T::one() / a[c * n + c];
            for k in 0..n {
                a[c * n + k] *= piv;
                inv[c * n + k] *= piv;
            }
            for r in 0..n {
                if r == c {
                    continue;
                }
                let f = a[r * n + c];
                if f == T::zero() {
                    continue;
                }
                for k in 0..n {
                    let (av, iv) = (a[c * n + k], inv[c * n + k]);
                    a[r * n + k] -= f * av;
                    inv[r * n + k] -= f * iv;
                }
            }
        }
        Ok(QMatrix { nq: self.nq, data: inv })
    }

    /// Scalar CSV dump (2n_q rows, real and imaginary parts for complex entries).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = self.dim();
        let complex = self.data.iter().any(|v| v.to_c64().im != 0.0);
        for i in 0..n {
            let rec: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.get(i, j).to_c64();
                    if complex {
                        format!("{:e}{:+e}i", z.re, z.im)
                    } else {
                        format!("{:e}", z.re)
                    }
                })
                .collect();
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

impl<T: Field> Add for &QMatrix<T> {
    type Output = QMatrix<T>;
    fn add(self, o: &QMatrix<T>) -> QMatrix<T> {
        assert_eq!(self.nq, o.nq);
        QMatrix { nq: self.nq, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<T: Field> Sub for &QMatrix<T> {
    type Output = QMatrix<T>;
    fn sub(self, o: &QMatrix<T>) -> QMatrix<T> {
        assert_eq!(self.nq, o.nq);
        QMatrix { nq: self.nq, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<T: Field> Mul for &QMatrix<T> {
    type Output = QMatrix<T>;
    fn mul(self, o: &QMatrix<T>) -> QMatrix<T> {
        self.matmul(o)
    }
}

impl<T: Field> Neg for &QMatrix<T> {
    type Output = QMatrix<T>;
    fn neg(self) -> QMatrix<T> {
        self.scale(-T::one())
    }
}

/// X ↦ X_+ − (X^D)_− + ½(X_0 − X_0^D): the anti-self-dual completion of the
/// upper part of X (used for deformation matrices and the structure of P).
pub fn asd_completion<T: Field>(x: &QMatrix<T>) -> QMatrix<T> {
    let (up, diag, _) = x.parts();
    let (_, _, low_d) = x.dual().parts();
    let half = &(&diag - &diag.dual()).scale(T::from_f64(0.5));
    &(&up - &low_d) + half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_dual_of_lower_triangular() {
        let c = QCell::new(1.0, 0.0, 2.0, 3.0);
        assert_eq!(c.dual(), QCell::new(3.0, 0.0, -2.0, 1.0));
        // dual = −Z c^t Z
        let z = QCell::<f64>::z();
        assert_eq!(-(z * c.transpose() * z), c.dual());
    }

    #[test]
    fn triangular_cell_inverse() {
        let c = QCell::new(2.0, 0.0, 3.0, 4.0);
        assert_eq!(c.inverse().unwrap(), QCell::new(0.5, 0.0, -0.375, 0.25));
        assert!(QCell::new(1.0, 2.0, 2.0, 4.0).inverse().is_err());
    }

    #[test]
    fn shift_identities() {
        let (nq, d) = (9, 2);
        let l = QMatrix::<f64>::shift_power(nq, d);
        let lt = l.transpose();
        assert_eq!(lt, l.dual());
        assert_eq!(lt.matmul(&l), QMatrix::proj_upper(nq, d));
        for n in 0..nq - d {
            let lhs = QMatrix::proj_upper(nq, n + d).matmul(&lt);
            let rhs = lt.matmul(&QMatrix::proj_upper(nq, n));
            assert_eq!(lhs, rhs);
        }
    }
}
