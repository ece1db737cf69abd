use num_complex::Complex;

use crate::real::Real;

/// `sin(x)/x`, continuous at zero.
#[inline]
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// Triangle function: `1 - |x|` on `(-1, 1)`, zero elsewhere.
#[inline]
pub fn tri<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax < T::one() {
        T::one() - ax
    } else {
        T::zero()
    }
}

/// Sine integral `Si(x) = \int_0^x sin(t)/t dt`.
///
/// Power series below |x| = 2, continued fraction for the complex exponential
/// integral `E1(ix)` above.
pub fn sine_integral<T: Real>(x: T) -> T {
    if x < T::zero() {
        return -sine_integral(-x);
    }
    if x == T::zero() {
        return T::zero();
    }
    let eps = T::epsilon();
    if x <= T::lit(2.0) {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0usize;
        loop {
            // term_n = (-1)^n x^(2n+1) / (2n+1)!
            let k = T::lit((2 * n + 2) as f64) * T::lit((2 * n + 3) as f64);
            term = -term * x2 / k;
            n += 1;
            let contrib = term / T::lit((2 * n + 1) as f64);
            sum = sum + contrib;
            if contrib.abs() < eps * sum.abs() || n > 60 {
                break;
            }
        }
        return sum;
    }
    let tiny = T::min_positive_value() / eps;
    let mut b = Complex::new(T::one(), x);
    let mut c = Complex::new(T::one() / tiny, T::zero());
    let mut d = Complex::new(T::one(), T::zero()) / b;
    let mut h = d;
    for i in 1..200 {
        let a = -T::lit((i * i) as f64);
        b = b + Complex::new(T::lit(2.0), T::zero());
        d = Complex::new(T::one(), T::zero()) / (d * a + b);
        c = b + Complex::new(a, T::zero()) / c;
        let del = c * d;
        h = h * del;
        if (del.re - T::one()).abs() + del.im.abs() < eps * T::lit(4.0) {
            break;
        }
    }
    let h = Complex::new(x.cos(), -x.sin()) * h;
    T::FRAC_PI_2() + h.im
}

/// `\int_X^\infty cos(k x) / x^2 dx` for `X > 0` and any real `k`.
pub fn cos_over_x2_tail<T: Real>(k: T, x0: T) -> T {
    let ak = k.abs();
    (k * x0).cos() / x0 - ak * (T::FRAC_PI_2() - sine_integral(ak * x0))
}

/// `\int_X^\infty sinc^2(x) cos(tau x) dx` for `X > 0`.
///
/// Uses `sin^2 x = (1 - cos 2x) / 2` and reduces every piece to
/// [`cos_over_x2_tail`].
pub fn sinc2_cos_tail<T: Real>(tau: T, x0: T) -> T {
    let two = T::lit(2.0);
    let quarter = T::lit(0.25);
    T::lit(0.5) * cos_over_x2_tail(tau, x0)
        - quarter * cos_over_x2_tail(tau + two, x0)
        - quarter * cos_over_x2_tail(tau - two, x0)
}
