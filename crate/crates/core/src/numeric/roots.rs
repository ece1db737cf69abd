use crate::error::{Error, Result};
use crate::real::Real;

/// Bisection on a sign-changing bracket until the bracket is narrower than
/// `rel_tol * |x|`.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, rel_tol: T) -> Result<T> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootNotBracketed(format!(
            "f({}) = {} and f({}) = {} have the same sign",
            a, fa, b, fb
        )));
    }
    for _ in 0..400 {
        let m = a + (b - a) / T::lit(2.0);
        if (b - a).abs() <= rel_tol * m.abs().max(T::min_positive_value()) {
            return Ok(m);
        }
        let fm = f(m);
        if fm == T::zero() {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(a + (b - a) / T::lit(2.0))
}

/// Walks from `start` in increments of `step` (sign gives direction) until
/// `f` changes sign, giving up once `limit` is passed. Returns the bracketing
/// pair ordered along the walk.
pub fn bracket_outward<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    start: T,
    step: T,
    limit: T,
) -> Result<(T, T)> {
    let mut x = start;
    let mut fx = f(x);
    loop {
        let next = x + step;
        let past = if step > T::zero() { next > limit } else { next < limit };
        if past {
            return Err(Error::RootNotBracketed(format!(
                "no sign change between {} and {}",
                start, limit
            )));
        }
        let fn_ = f(next);
        if fn_ == T::zero() || fn_.signum() != fx.signum() {
            return Ok((x, next));
        }
        x = next;
        fx = fn_;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(matches!(
            bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-9),
            Err(Error::RootNotBracketed(_))
        ));
    }

    #[test]
    fn bracket_walks_both_ways() {
        let (a, b) = bracket_outward(|x: f64| x.cos(), 0.0, 0.1, 10.0).unwrap();
        assert!(a < std::f64::consts::FRAC_PI_2 && b >= std::f64::consts::FRAC_PI_2);
        let (a, b) = bracket_outward(|x: f64| x.cos(), 0.0, -0.1, -10.0).unwrap();
        assert!(a > -std::f64::consts::FRAC_PI_2 && b <= -std::f64::consts::FRAC_PI_2);
        assert!(bracket_outward(|x: f64| x * x + 1.0, 0.0, 0.1, 1.0).is_err());
    }
}
