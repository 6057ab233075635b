//! Quadrature engines.
//!
//! * `trapezoid_vec`: trapezoid rule with successive halving on a finite
//!   interval, for smooth integrands that are negligible at both ends. For such
//!   integrands the rule converges geometrically, so halving until two levels
//!   agree gives (close to) full working precision.
//! * `half_line_vec`: ∫_0^∞ via the double-exponential map s = exp(t − e^{−t}).
//! * `GaussLegendre`: fixed-order f64 rule used for panels, vertical segments
//!   and Cauchy-type integrals.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_LEVELS: u32 = 14;

/// Integrates a vector-valued `f` over [a, b] (f64 endpoints, so nodes are exact).
/// `f(x, out)` must fill `out` with the integrand values.
/// Convergence: every component changes by less than `tol * max(|I_k|, ∫|f_k|)`.
pub fn trapezoid_vec<T: Real>(
    mut f: impl FnMut(T, &mut [T]),
    a: f64,
    b: f64,
    nvals: usize,
    tol: f64,
) -> Result<Vec<T>> {
    let mut n = 64usize;
    let mut buf = vec![T::zero(); nvals];
    let mut sum = vec![T::zero(); nvals];
    let mut abs_sum = vec![0.0f64; nvals];
    let h0 = (b - a) / n as f64;
    for i in 0..=n {
        f(T::from_f64(a + i as f64 * h0), &mut buf);
        let wgt = if i == 0 || i == n { 0.5 } else { 1.0 };
        for k in 0..nvals {
            sum[k] += buf[k] * T::from_f64(wgt);
            abs_sum[k] += wgt * buf[k].to_f64().abs();
        }
    }
    let mut prev: Vec<T> = sum.iter().map(|&s| s * T::from_f64(h0)).collect();
    for level in 1..=MAX_LEVELS {
        let h = (b - a) / (2 * n) as f64;
        for i in 0..n {
            f(T::from_f64(a + (2 * i + 1) as f64 * h), &mut buf);
            for k in 0..nvals {
                sum[k] += buf[k];
                abs_sum[k] += buf[k].to_f64().abs();
            }
        }
        n *= 2;
        let cur: Vec<T> = sum.iter().map(|&s| s * T::from_f64(h)).collect();
        let converged = (0..nvals).all(|k| {
            let scale = cur[k].to_f64().abs().max(abs_sum[k] * h);
            (cur[k] - prev[k]).to_f64().abs() <= tol * scale || scale == 0.0
        });
        if converged && level >= 2 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergent {
        what: "trapezoid quadrature",
        detail: format!("no agreement to {tol:.1e} after {MAX_LEVELS} halvings on [{a}, {b}]"),
    })
}

/// ∫_0^∞ g(s) ds for `g` negligible beyond `s_max`, via s = exp(t − e^{−t}).
/// The left end decays double-exponentially, so integrands that are merely
/// bounded at s = 0 are handled without a huge node count.
pub fn half_line_vec<T: Real>(
    mut g: impl FnMut(T, &mut [T]),
    s_max: f64,
    nvals: usize,
    tol: f64,
) -> Result<Vec<T>> {
    let t_lo = -4.5;
    // solve t - e^{-t} = ln s_max for the upper end
    let target = s_max.max(1e-3).ln();
    let mut t_hi = target.max(0.0) + 1.0;
    for _ in 0..60 {
        let fval = t_hi - (-t_hi).exp() - target;
        t_hi -= fval / (1.0 + (-t_hi).exp());
    }
    let t_hi = (t_hi * 8.0).ceil() / 8.0;
    let mut inner = vec![T::zero(); nvals];
    trapezoid_vec(
        |t: T, out: &mut [T]| {
            let et = (-t).exp();
            let s = (t - et).exp();
            let jac = s * (T::one() + et);
            g(s, &mut inner);
            for k in 0..nvals {
                out[k] = inner[k] * jac;
            }
        },
        t_lo,
        t_hi,
        nvals,
        tol,
    )
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + r * x, r * w))
    }

    /// Nodes and weights on the straight segment from `a` to `b` in the complex plane.
    pub fn segment(&self, a: Complex64, b: Complex64) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        let c = (a + b) * 0.5;
        let r = (b - a) * 0.5;
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + r * x, r * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Panel breakpoints covering [a, b] with panels no wider than `max_width`,
/// always including every point of `extra` that lies inside.
pub fn breakpoints(a: f64, b: f64, max_width: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(extra.iter().copied().filter(|&p| p > a && p < b));
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let m = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
        for i in 1..=m {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / m as f64);
        }
    }
    out
}

/// Panels graded geometrically towards `center`: widths `delta, 2 delta, ...`
/// capped at `max_width`. Used for near-singular (Cauchy) integrands.
pub fn graded_breakpoints(a: f64, b: f64, center: f64, delta: f64, max_width: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    if center > a && center < b {
        pts.push(center);
        let mut w = delta;
        let mut off = delta;
        while center + off < b || center - off > a {
            pts.push(center + off);
            pts.push(center - off);
            w = (w * 2.0).min(max_width);
            off += w;
        }
    }
    let pts: Vec<f64> = pts.into_iter().filter(|&p| p >= a && p <= b).collect();
    breakpoints(a, b, max_width, &pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::Dd;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(12);
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(23));
        let exact = (2f64.powi(24) - 1.0) / 24.0;
        assert!((v - exact).abs() < 1e-9 * exact);
        let wsum: f64 = gl.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_gaussian_in_double_double() {
        let v = trapezoid_vec(|x: Dd, out: &mut [Dd]| out[0] = (-(x * x)).exp(), -10.0, 10.0, 1, 1e-31).unwrap();
        let sqrt_pi = Dd::PI.sqrt();
        assert!((v[0] - sqrt_pi).abs().hi < 1e-30);
    }

    #[test]
    fn half_line_handles_bounded_left_end() {
        // ∫_0^∞ e^{-s} ds = 1
        let v = half_line_vec(|s: f64, out: &mut [f64]| out[0] = (-s).exp(), 60.0, 1, 1e-15).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14);
    }
}
