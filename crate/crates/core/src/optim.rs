//! One-dimensional search routines shared by the likelihood fit.

use crate::scalar::Real;

/// Result of a bracketed one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum<T> {
    pub x: T,
    pub value: T,
    pub evaluations: usize,
}

/// Brent's method (golden section with parabolic steps) maximizing `f` on
/// `[a, b]` until the bracket is narrower than `width`.
///
/// `-∞` values are allowed and treated as "worse than anything finite".
pub fn brent_maximize<T: Real>(mut f: impl FnMut(T) -> T, a: T, b: T, width: T, max_iter: usize) -> Maximum<T> {
    let golden = T::lit(0.381_966_011_250_105_1);
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut x = a + golden * (b - a);
    let mut w = x;
    let mut v = x;
    // Minimize -f.
    let mut fx = -f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d = T::zero();
    let mut e = T::zero();
    let mut evaluations = 1;
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    for _ in 0..max_iter {
        let mid = half * (a + b);
        let tol1 = T::epsilon().sqrt() * x.abs() * T::lit(1e-3) + width * T::lit(0.25);
        let tol2 = two * tol1;
        if (b - a) <= width || (x - mid).abs() <= tol2 - half * (b - a) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = two * (q - r);
            if q > T::zero() {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (half * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if (u - a) < tol2 || (b - u) < tol2 {
                    d = if x < mid { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < mid { b - x } else { a - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > T::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let fu = -f(u);
        evaluations += 1;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Maximum {
        x,
        value: -fx,
        evaluations,
    }
}

/// Safeguarded Newton iteration for a root of `g` inside `[lo, hi]`, where
/// `g(lo) > 0 > g(hi)` (a decreasing derivative crossing zero at a maximum).
/// `g_and_slope` returns `(g(x), g'(x))`. Returns `None` if the bracket does
/// not straddle a sign change.
pub fn newton_bisect_decreasing<T: Real>(
    mut g_and_slope: impl FnMut(T) -> (T, T),
    mut lo: T,
    mut hi: T,
    start: T,
    x_tol: T,
    max_iter: usize,
) -> Option<T> {
    let (g_lo, _) = g_and_slope(lo);
    let (g_hi, _) = g_and_slope(hi);
    if !(g_lo >= T::zero() && g_hi <= T::zero()) {
        return None;
    }
    if g_lo == T::zero() {
        return Some(lo);
    }
    if g_hi == T::zero() {
        return Some(hi);
    }
    let half = T::lit(0.5);
    let mut x = if start > lo && start < hi { start } else { half * (lo + hi) };
    for _ in 0..max_iter {
        let (g, slope) = g_and_slope(x);
        if g == T::zero() {
            return Some(x);
        }
        if g > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if slope < T::zero() && slope.is_finite() { x - g / slope } else { T::nan() };
        let next = if newton > lo && newton < hi { newton } else { half * (lo + hi) };
        if (next - x).abs() <= x_tol * (T::one() + x.abs()) || hi - lo <= x_tol {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}
