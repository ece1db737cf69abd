//! Adaptive Simpson quadrature with Richardson correction.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    /// Absolute error target for the whole integral.
    pub abs_tol: T,
    /// Relative error target, applied to the running magnitude of each piece.
    pub rel_tol: T,
    pub max_depth: u32,
    /// Subdivisions forced before the error test is trusted. Guards against
    /// a coarse Simpson estimate that happens to agree with itself on an
    /// oscillating integrand.
    pub min_depth: u32,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-11),
            rel_tol: T::lit(1e-10),
            max_depth: 40,
            min_depth: 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
}

struct Worker<'a, T, F> {
    f: &'a mut F,
    opts: QuadOptions<T>,
    evals: usize,
    failed: bool,
    err: T,
}

impl<T: Real, F: FnMut(T) -> T> Worker<'_, T, F> {
    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
        let two = T::lit(2.0);
        let m = (a + b) / two;
        let lm = (a + m) / two;
        let rm = (m + b) / two;
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evals += 2;
        let six = T::lit(6.0);
        let left = (m - a) / six * (fa + T::lit(4.0) * flm + fm);
        let right = (b - m) / six * (fm + T::lit(4.0) * frm + fb);
        let delta = left + right - whole;
        let fifteen = T::lit(15.0);
        let level = self.opts.max_depth - depth;
        let local_tol = tol.max(self.opts.rel_tol * (left + right).abs());
        if level >= self.opts.min_depth && delta.abs() <= fifteen * local_tol {
            self.err = self.err + delta.abs() / fifteen;
            return left + right + delta / fifteen;
        }
        if depth == 0 {
            self.failed = true;
            self.err = self.err + delta.abs() / fifteen;
            return left + right + delta / fifteen;
        }
        let half = tol / two;
        self.step(a, m, fa, flm, fm, left, half, depth - 1)
            + self.step(m, b, fm, frm, fb, right, half, depth - 1)
    }
}

/// Integrates `f` over `[a, b]` with adaptive Simpson.
pub fn adaptive_simpson<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    opts: QuadOptions<T>,
) -> Result<QuadResult<T>> {
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: T::zero(), evals: 0 });
    }
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    let mut w = Worker { f: &mut f, opts, evals: 3, failed: false, err: T::zero() };
    let value = w.step(a, b, fa, fm, fb, whole, opts.abs_tol, opts.max_depth);
    if w.failed || !value.is_finite() {
        return Err(Error::Quadrature {
            lo: a.as_f64(),
            hi: b.as_f64(),
            err: w.err.as_f64(),
            context: String::new(),
        });
    }
    Ok(QuadResult { value, error: w.err, evals: w.evals })
}

/// Splits `[a, b]` into pieces no wider than `chunk` and integrates each with
/// [`adaptive_simpson`]. Used for integrands whose oscillation scale is known
/// in advance.
pub fn integrate_chunked<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    chunk: T,
    opts: QuadOptions<T>,
) -> Result<QuadResult<T>> {
    let span = b - a;
    if span == T::zero() {
        return Ok(QuadResult { value: T::zero(), error: T::zero(), evals: 0 });
    }
    let n = (span.abs() / chunk).ceil().to_usize().unwrap_or(1).max(1);
    let piece_opts = QuadOptions { abs_tol: opts.abs_tol / T::lit(n as f64), ..opts };
    let h = span / T::lit(n as f64);
    let mut total = QuadResult { value: T::zero(), error: T::zero(), evals: 0 };
    for i in 0..n {
        let lo = a + h * T::lit(i as f64);
        let hi = if i + 1 == n { b } else { a + h * T::lit((i + 1) as f64) };
        let r = adaptive_simpson(&mut f, lo, hi, piece_opts)?;
        total.value = total.value + r.value;
        total.error = total.error + r.error;
        total.evals += r.evals;
    }
    Ok(total)
}
