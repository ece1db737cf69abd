//! Fit models with analytic derivatives.

use super::nls::Model;
use crate::real::Real;

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// `y = slope x + offset`; parameters `[slope, offset]`.
pub struct Linear {
    pub slope: &'static str,
    pub offset: &'static str,
}

impl<T: Real> Model<T> for Linear {
    fn names(&self) -> Vec<String> {
        names(&[self.slope, self.offset])
    }

    fn value(&self, x: T, p: &[T]) -> T {
        p[0] * x + p[1]
    }

    fn gradient(&self, x: T, _p: &[T], g: &mut [T]) {
        g[0] = x;
        g[1] = T::one();
    }
}

/// `y = slope x`.
pub struct Proportional {
    pub slope: &'static str,
}

impl<T: Real> Model<T> for Proportional {
    fn names(&self) -> Vec<String> {
        names(&[self.slope])
    }

    fn value(&self, x: T, p: &[T]) -> T {
        p[0] * x
    }

    fn gradient(&self, x: T, _p: &[T], g: &mut [T]) {
        g[0] = x;
    }
}

/// `y = c0 + c1 x + c2 x^2`.
pub struct Quadratic;

impl<T: Real> Model<T> for Quadratic {
    fn names(&self) -> Vec<String> {
        names(&["c0", "c1", "c2"])
    }

    fn value(&self, x: T, p: &[T]) -> T {
        p[0] + x * (p[1] + x * p[2])
    }

    fn gradient(&self, x: T, _p: &[T], g: &mut [T]) {
        g[0] = T::one();
        g[1] = x;
        g[2] = x * x;
    }
}

/// `y = offset + amplitude cos(2 pi x / period + phase)`;
/// parameters `[period, phase, amplitude, offset]`.
pub struct Sine;

impl<T: Real> Model<T> for Sine {
    fn names(&self) -> Vec<String> {
        names(&["period", "phase", "amplitude", "offset"])
    }

    fn value(&self, x: T, p: &[T]) -> T {
        p[3] + p[2] * (T::TAU() * x / p[0] + p[1]).cos()
    }

    fn gradient(&self, x: T, p: &[T], g: &mut [T]) {
        let arg = T::TAU() * x / p[0] + p[1];
        let (s, c) = arg.sin_cos();
        g[0] = p[2] * s * T::TAU() * x / (p[0] * p[0]);
        g[1] = -p[2] * s;
        g[2] = c;
        g[3] = T::one();
    }
}

/// `y = v_max tri((x - center) / (width / 2))`;
/// parameters `[center, width, v_max]`.
///
/// At the apex and the feet the derivative is taken from the side the
/// sample lies on.
pub struct Triangle;

impl<T: Real> Model<T> for Triangle {
    fn names(&self) -> Vec<String> {
        names(&["center", "l_c", "v_max"])
    }

    fn value(&self, x: T, p: &[T]) -> T {
        let u = (x - p[0]) / (p[1] / T::lit(2.0));
        p[2] * (T::one() - u.abs()).max(T::zero())
    }

    fn gradient(&self, x: T, p: &[T], g: &mut [T]) {
        let half = p[1] / T::lit(2.0);
        let u = (x - p[0]) / half;
        if u.abs() >= T::one() {
            g.iter_mut().for_each(|v| *v = T::zero());
            return;
        }
        let side = if u > T::zero() {
            T::one()
        } else if u < T::zero() {
            -T::one()
        } else {
            T::zero()
        };
        g[0] = p[2] * side / half;
        g[1] = p[2] * u.abs() / p[1];
        g[2] = T::one() - u.abs();
    }
}
