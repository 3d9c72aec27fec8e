//! Bracketing root finders shared by the cost and optimizer modules.

use crate::scalar::Real;

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Returns `None` if `f(lo)` and `f(hi)` have the same strict sign. An exact
/// zero at either end is returned as is.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T, tol: T) -> Option<T> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Some(lo);
    }
    if f_hi == T::zero() {
        return Some(hi);
    }
    if (f_lo > T::zero()) == (f_hi > T::zero()) {
        return None;
    }
    // 200 halvings shrink any finite bracket below the tolerance.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        let f_mid = f(mid);
        if f_mid == T::zero() {
            return Some(mid);
        }
        if (f_mid > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(lo + (hi - lo) / T::lit(2.0))
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is
/// true on a prefix of the interval.
pub fn bisect_predicate<T: Real, P: FnMut(T) -> bool>(mut pred: P, mut lo: T, mut hi: T, tol: T) -> T {
    if pred(hi) {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn no_bracket() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn predicate_boundary() {
        let x = bisect_predicate(|x: f64| x <= 0.3, 0.0, 1.0, 1e-13);
        assert!((x - 0.3).abs() < 1e-12);
        assert_eq!(bisect_predicate(|_x: f64| true, 0.0, 1.0, 1e-13), 1.0);
    }

    #[test]
    fn works_in_single_precision() {
        let r = bisect(|x: f32| x * x * x - 0.125, 0.0, 1.0, 1e-6).unwrap();
        assert!((r - 0.5).abs() < 1e-5);
    }
}
