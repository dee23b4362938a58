//! Scalar root bracketing.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bisection on a sign-changing function. `f(lo)` and `f(hi)` must differ in
/// sign; iteration stops when `|f| <= ftol` or the bracket shrinks below
/// `xtol` (relative to the bracket end points).
pub fn bisect<T: Real, F>(mut f: F, lo: T, hi: T, ftol: T, xtol: T, max_iter: usize) -> Result<T>
where
    F: FnMut(T) -> Result<T>,
{
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    let fb = f(b)?;
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::BracketNotFound(format!(
            "f({}) = {} and f({}) = {} share a sign",
            a, fa, b, fb
        )));
    }
    let a_pos = fa > T::zero();
    let two = T::lit(2.0);
    for _ in 0..max_iter {
        let m = a + (b - a) / two;
        let fm = f(m)?;
        if fm.abs() <= ftol {
            return Ok(m);
        }
        if (fm > T::zero()) == a_pos {
            a = m;
        } else {
            b = m;
        }
        if (b - a).abs() <= xtol * (T::one() + a.abs().max(b.abs())) {
            return Ok(a + (b - a) / two);
        }
    }
    Ok(a + (b - a) / two)
}

/// Boundary of a predicate: `pred(lo)` true, `pred(hi)` false; returns the
/// transition point to relative width `xtol`.
pub fn bisect_predicate<T: Real, P>(mut pred: P, lo: T, hi: T, xtol: T, max_iter: usize) -> Result<T>
where
    P: FnMut(T) -> Result<bool>,
{
    let (mut a, mut b) = (lo, hi);
    let two = T::lit(2.0);
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol * (T::one() + a.abs().max(b.abs())) {
            break;
        }
        let m = a + (b - a) / two;
        if pred(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a + (b - a) / two)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x: f64| Ok(x * x - 2.0), 0.0, 2.0, 0.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        let r = bisect(|x: f64| Ok(x * x + 1.0), -1.0, 1.0, 0.0, 1e-12, 100);
        assert!(matches!(r, Err(Error::BracketNotFound(_))));
    }

    #[test]
    fn predicate_boundary() {
        let r = bisect_predicate(|x: f64| Ok(x < 0.3), 0.0, 1.0, 1e-14, 200).unwrap();
        assert!((r - 0.3).abs() < 1e-13);
    }
}
