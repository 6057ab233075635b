//! Double-double arithmetic.
//!
//! A value is the unevaluated sum `hi + lo` of two `f64` with `|lo| <= ulp(hi)/2`,
//! which carries about 32 significant decimal digits. Only the operations the
//! skew-elimination pipeline needs are provided: the four field operations,
//! `sqrt` and `exp`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Multiplies by `2^m` without intermediate overflow for |m| up to ~2000.
fn ldexp(x: f64, m: i32) -> f64 {
    let half = m / 2;
    x * 2f64.powi(half) * 2f64.powi(m - half)
}

const LN2: Dd = Dd::new(std::f64::consts::LN_2, 2.319_046_813_846_299_6e-17);

impl Dd {
    pub const ZERO: Dd = Dd::new(0.0, 0.0);
    pub const ONE: Dd = Dd::new(1.0, 0.0);
    pub const PI: Dd = Dd::new(std::f64::consts::PI, 1.224_646_799_147_353_2e-16);

    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_i64(n: i64) -> Self {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = self.lo.mul_add(b, e);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - Dd::from_f64(b).mul_f64(q1);
        let q2 = r.hi / b;
        let r = r - Dd::from_f64(b).mul_f64(q2);
        let q3 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Dd::ONE;
        let mut base = self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::ZERO } else { Dd::new(f64::NAN, f64::NAN) };
        }
        let x = Dd::from_f64(self.hi.sqrt());
        x + (self - x * x) / (x.mul_f64(2.0))
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.7 {
            return Dd::new(f64::INFINITY, 0.0);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let m = (self.hi / LN2.hi).round();
        // r in [-ln2/2, ln2/2], then scaled by 2^-10 so the series converges fast
        let r = (self - LN2.mul_f64(m)).mul_f64(1.0 / 1024.0);
        let mut term = r;
        let mut sum = r;
        for i in 2..=14 {
            term = (term * r).div_f64(i as f64);
            sum += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        // e^{2r} - 1 = s (s + 2) keeps the small quantity accurate
        for _ in 0..10 {
            sum = sum * (sum + Dd::from_f64(2.0));
        }
        let v = sum + Dd::ONE;
        Dd::new(ldexp(v.hi, m as i32), ldexp(v.lo, m as i32))
    }

    /// Scientific notation with `digits` significant digits.
    pub fn to_sci_string(self, digits: usize) -> String {
        if self.hi == 0.0 {
            return "0".to_string();
        }
        if !self.is_finite() {
            return format!("{}", self.hi);
        }
        let neg = self.hi < 0.0;
        let mut v = self.abs();
        let mut e = v.hi.log10().floor() as i32;
        let ten = Dd::from_f64(10.0);
        v = if e >= 0 { v / ten.powi(e as u32) } else { v * ten.powi((-e) as u32) };
        while v.hi >= 10.0 {
            v /= ten;
            e += 1;
        }
        while v.hi < 1.0 {
            v *= ten;
            e -= 1;
        }
        let mut s = String::new();
        for i in 0..digits {
            let dgt = v.hi.floor().clamp(0.0, 9.0);
            s.push(char::from(b'0' + dgt as u8));
            if i == 0 {
                s.push('.');
            }
            v = (v - Dd::from_f64(dgt)) * ten;
        }
        format!("{}{}e{}", if neg { "-" } else { "" }, s, e)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for Dd {
            #[inline]
            fn $m(&mut self, b: Dd) { *self = *self $op b; }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(32);
        f.write_str(&self.to_sci_string(digits))
    }
}

/// Complex double-double, used only for polynomial evaluation off the real axis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub fn new(re: Dd, im: Dd) -> Self {
        Cdd { re, im }
    }
    pub fn from_c64(z: num_complex::Complex64) -> Self {
        Cdd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }
    pub fn to_c64(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    pub fn scale(self, s: Dd) -> Self {
        Cdd { re: self.re * s, im: self.im * s }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, b: Cdd) -> Cdd {
        Cdd { re: self.re + b.re, im: self.im + b.im }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, b: Cdd) -> Cdd {
        Cdd { re: self.re - b.re, im: self.im - b.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, b: Cdd) -> Cdd {
        Cdd { re: self.re * b.re - self.im * b.im, im: self.re * b.im + self.im * b.re }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_matches_known_digits() {
        // e = 2.71828182845904523536028747135266249...
        let e = Dd::ONE.exp();
        let reference = Dd::new(std::f64::consts::E, 1.445_646_891_729_250_2e-16);
        assert!((e - reference).abs().hi < 1e-31);
        let x = Dd::from_f64(-37.25);
        let back = x.exp() * (-x).exp();
        assert!((back - Dd::ONE).abs().hi < 1e-30);
    }

    #[test]
    fn division_and_sqrt_round_trip() {
        let a = Dd::from_f64(2.0).sqrt();
        assert!((a * a - Dd::from_f64(2.0)).abs().hi < 1e-31);
        let third = Dd::ONE / Dd::from_f64(3.0);
        assert!((third.mul_f64(3.0) - Dd::ONE).abs().hi < 1e-31);
        let q = Dd::from_f64(7.0).div_f64(11.0);
        assert!((q.mul_f64(11.0) - Dd::from_f64(7.0)).abs().hi < 1e-30);
    }

    #[test]
    fn formatting_prints_thirty_digits() {
        let third = Dd::ONE / Dd::from_f64(3.0);
        let s = third.to_sci_string(30);
        assert!(s.starts_with("3.3333333333333333333333333333"), "{s}");
        assert_eq!(Dd::from_f64(-250.0).to_sci_string(3), "-2.50e2");
    }
}
