//! One-dimensional root finding and maximization on a bracket.

use crate::scalar::Scalar;

const MAX_BISECTION_STEPS: usize = 400;

/// Finds `x` in `[lo, hi]` where `f` crosses zero, given `f(lo)` and `f(hi)`
/// of opposite sign (or one of them zero). Runs until the bracket stops
/// shrinking in the scalar type, so the result is accurate to the last ulp.
///
/// Returns the endpoint of the final bracket that lies on the `f(lo)` side.
pub(crate) fn bisect<T: Scalar>(mut lo: T, mut hi: T, mut f: impl FnMut(T) -> T) -> T {
    let f_lo = f(lo);
    if f_lo == T::zero() {
        return lo;
    }
    let lo_positive = f_lo > T::zero();
    let half = T::lit(0.5);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = lo + (hi - lo) * half;
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let v = f(mid);
        if v == T::zero() {
            return mid;
        }
        if (v > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Stops once the bracket is narrower than `tol`. Returns `(argmax, max)`,
/// also comparing against both endpoints so a boundary maximum is not lost.
pub(crate) fn golden_max<T: Scalar>(lo: T, hi: T, tol: T, mut f: impl FnMut(T) -> T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let floor = T::epsilon() * (T::one() + lo.abs().max(hi.abs()));
    while (b - a) > tol.max(floor) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) / T::lit(2.0);
    let mut best = (mid, f(mid));
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Golden-section minimization; see [`golden_max`].
pub(crate) fn golden_min<T: Scalar>(lo: T, hi: T, tol: T, mut f: impl FnMut(T) -> T) -> (T, T) {
    let (x, v) = golden_max(lo, hi, tol, |x| -f(x));
    (x, -v)
}
