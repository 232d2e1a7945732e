//! Bracketing root finders and monotone integer searches.

use crate::error::{Error, Result};

/// A root together with the final bracket `[lo, hi]` that contains the sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Bisection on `[lo, hi]`, which must bracket a sign change of `f`.
///
/// Stops once the bracket width is below `abs_tol + rel_tol * |x|`, or when the
/// midpoint can no longer be represented between the endpoints.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
    rel_tol: f64,
    what: &'static str,
) -> Result<Root> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(Root { x: lo, lo, hi: lo });
    }
    if fhi == 0.0 {
        return Ok(Root { x: hi, lo: hi, hi });
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::SolverNoBracket { what });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= abs_tol + rel_tol * mid.abs() || !(mid > lo && mid < hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(Root {
                x: mid,
                lo: mid,
                hi: mid,
            });
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        x: 0.5 * (lo + hi),
        lo,
        hi,
    })
}

/// Finds `hi > lo` with `f(hi)` of opposite sign to `f(lo)` by repeated
/// multiplication by `factor`, never exceeding `cap`.
pub fn grow_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    start: f64,
    factor: f64,
    cap: f64,
    what: &'static str,
) -> Result<f64> {
    let s0 = f(lo).signum();
    let mut hi = start.min(cap);
    loop {
        let v = f(hi);
        if v.is_nan() {
            return Err(Error::SolverNoBracket { what });
        }
        if v.signum() != s0 || v == 0.0 {
            return Ok(hi);
        }
        if hi >= cap {
            return Err(Error::SolverNoBracket { what });
        }
        hi = (hi * factor).min(cap);
    }
}

/// Smallest integer `n >= start` for which the monotone predicate holds
/// (false below the threshold, true at and above it), by doubling then binary search.
pub fn smallest_integer<P: FnMut(u64) -> bool>(mut pred: P, start: u64, limit: u64) -> Option<u64> {
    let start = start.max(1);
    if pred(start) {
        return Some(start);
    }
    let mut lo = start;
    let mut hi = start.saturating_mul(2);
    loop {
        if hi > limit {
            if pred(limit) {
                hi = limit;
                break;
            }
            return None;
        }
        if pred(hi) {
            break;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    // pred(lo) false, pred(hi) true
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0, 1e-15, "sqrt").unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-14);
        assert!(r.lo <= r.x && r.x <= r.hi);
    }

    #[test]
    fn no_bracket_is_reported() {
        let e = bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0, 1e-12, "pos").unwrap_err();
        assert_eq!(e, Error::SolverNoBracket { what: "pos" });
    }

    #[test]
    fn bracket_growth() {
        let hi = grow_bracket(|x| x - 1000.0, 0.0, 1.0, 2.0, 1e6, "g").unwrap();
        assert!((1000.0..=2048.0).contains(&hi));
        assert!(grow_bracket(|x| x - 1000.0, 0.0, 1.0, 2.0, 10.0, "g").is_err());
    }

    #[test]
    fn integer_search_finds_threshold() {
        for t in [1u64, 2, 3, 17, 1000, 12345] {
            assert_eq!(smallest_integer(|n| n >= t, 1, 1 << 40), Some(t));
        }
        assert_eq!(smallest_integer(|n| n >= 50, 60, 1 << 40), Some(60));
        assert_eq!(smallest_integer(|_| false, 1, 1000), None);
    }
}
