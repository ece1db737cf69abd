//! Damped Gauss-Newton (Levenberg-Marquardt) least squares.

use crate::error::{Error, Result};
use crate::numeric::linalg::{Cholesky, Matrix};
use crate::real::Real;

/// Two-sided 95% multiplier for a normal estimate.
pub const CI95: f64 = 1.96;

/// A model `y = f(x; p)`.
pub trait Model<T: Real> {
    fn names(&self) -> Vec<String>;

    fn value(&self, x: T, p: &[T]) -> T;

    /// `df/dp` into `grad`. Defaults to central differences.
    fn gradient(&self, x: T, p: &[T], grad: &mut [T]) {
        let mut q = p.to_vec();
        for j in 0..p.len() {
            let h = T::lit(1e-7) * p[j].abs().max(T::lit(1e-7));
            q[j] = p[j] + h;
            let up = self.value(x, &q);
            q[j] = p[j] - h;
            let down = self.value(x, &q);
            q[j] = p[j];
            grad[j] = (up - down) / (h + h);
        }
    }
}

/// A closure model differentiated numerically.
pub struct FnModel<F> {
    pub names: Vec<String>,
    pub f: F,
}

impl<T: Real, F: Fn(T, &[T]) -> T> Model<T> for FnModel<F> {
    fn names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn value(&self, x: T, p: &[T]) -> T {
        (self.f)(x, p)
    }
}

/// One observation with its standard uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint<T> {
    pub x: T,
    pub y: T,
    pub sigma: T,
}

impl<T: Real> DataPoint<T> {
    pub fn new(x: T, y: T, sigma: T) -> Self {
        Self { x, y, sigma }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NlsOptions<T> {
    /// Convergence threshold on the scaled gradient
    /// `max_j |J_j . r| / (|J_j| |r|)`.
    pub gradient_tol: T,
    pub max_iter: usize,
    pub initial_damping: T,
    /// Use the given sigmas as absolute. Otherwise the covariance is scaled
    /// by the reduced chi-square (when there are spare degrees of freedom).
    pub absolute_sigma: bool,
}

impl<T: Real> Default for NlsOptions<T> {
    fn default() -> Self {
        Self { gradient_tol: T::lit(1e-10), max_iter: 200, initial_damping: T::lit(1e-3), absolute_sigma: true }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport<T> {
    pub names: Vec<String>,
    pub params: Vec<T>,
    pub stderr: Vec<T>,
    pub covariance: Matrix<T>,
    /// RMS of the unweighted residuals `y - f(x)`.
    pub residual_rms: T,
    pub chi2: T,
    pub dof: usize,
    pub n_iter: usize,
    pub converged: bool,
    /// Final scaled gradient.
    pub gradient: T,
    /// Chi-square after each accepted step, starting with the initial value.
    pub chi2_history: Vec<T>,
}

impl<T: Real> FitReport<T> {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn param(&self, name: &str) -> Option<T> {
        self.index(name).map(|i| self.params[i])
    }

    pub fn stderr_of(&self, name: &str) -> Option<T> {
        self.index(name).map(|i| self.stderr[i])
    }

    pub fn ci95(&self) -> Vec<T> {
        self.stderr.iter().map(|&s| s * T::lit(CI95)).collect()
    }
}

struct Linearisation<T> {
    jtj: Matrix<T>,
    jtr: Vec<T>,
    chi2: T,
}

fn weighted_residuals<T: Real, M: Model<T> + ?Sized>(model: &M, data: &[DataPoint<T>], p: &[T]) -> T {
    data.iter()
        .map(|d| {
            let r = (d.y - model.value(d.x, p)) / d.sigma;
            r * r
        })
        .sum()
}

fn linearise<T: Real, M: Model<T> + ?Sized>(model: &M, data: &[DataPoint<T>], p: &[T]) -> Linearisation<T> {
    let m = p.len();
    let mut jtj = Matrix::zeros(m);
    let mut jtr = vec![T::zero(); m];
    let mut chi2 = T::zero();
    let mut g = vec![T::zero(); m];
    for d in data {
        let w = T::one() / d.sigma;
        let r = (d.y - model.value(d.x, p)) * w;
        chi2 = chi2 + r * r;
        model.gradient(d.x, p, &mut g);
        for i in 0..m {
            let gi = g[i] * w;
            jtr[i] = jtr[i] + gi * r;
            for j in 0..=i {
                let v = jtj.get(i, j) + gi * g[j] * w;
                jtj.set(i, j, v);
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            jtj.set(j, i, jtj.get(i, j));
        }
    }
    Linearisation { jtj, jtr, chi2 }
}

fn scaled_gradient<T: Real>(lin: &Linearisation<T>) -> T {
    if lin.chi2 == T::zero() {
        return T::zero();
    }
    let rn = lin.chi2.sqrt();
    (0..lin.jtr.len()).fold(T::zero(), |acc, j| {
        let jn = lin.jtj.get(j, j).sqrt();
        if jn > T::zero() {
            acc.max((lin.jtr[j] / (jn * rn)).abs())
        } else {
            acc
        }
    })
}

/// Fails with the name of the first parameter whose Jacobian column is zero
/// or a linear combination of earlier columns.
fn check_rank<T: Real>(jtj: &Matrix<T>, names: &[String]) -> Result<()> {
    let n = jtj.n;
    let d = jtj.diag();
    let mut corr = Matrix::zeros(n);
    for i in 0..n {
        if !(d[i] > T::zero()) {
            return Err(Error::RankDeficient { param: names[i].clone() });
        }
        for j in 0..n {
            corr.set(i, j, jtj.get(i, j) / (d[i] * d[j]).sqrt());
        }
    }
    Cholesky::new(&corr, T::lit(1e-12)).map(|_| ()).map_err(|i| Error::RankDeficient { param: names[i].clone() })
}

fn project<T: Real>(p: &mut [T], bounds: Option<&[(T, T)]>) {
    if let Some(b) = bounds {
        for (v, &(lo, hi)) in p.iter_mut().zip(b) {
            *v = v.max(lo).min(hi);
        }
    }
}

/// Minimises `sum ((y - f(x; p)) / sigma)^2` from `initial`.
///
/// Steps solve `(J^T J + lambda diag(J^T J)) dp = J^T r`; a step is kept only
/// if chi-square falls, after which `lambda` shrinks tenfold, otherwise it
/// grows tenfold. Parameters are clamped into `bounds` when given. Hitting
/// `max_iter` yields a report with `converged = false`.
pub fn nls_fit<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    data: &[DataPoint<T>],
    initial: &[T],
    bounds: Option<&[(T, T)]>,
    opts: &NlsOptions<T>,
) -> Result<FitReport<T>> {
    let names = model.names();
    let m = initial.len();
    if names.len() != m {
        return Err(Error::InvalidConfig(format!("model has {} parameters, {} initial values given", names.len(), m)));
    }
    if data.len() < m {
        return Err(Error::InsufficientData(format!("{} points for {} parameters", data.len(), m)));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(format!("non-finite initial parameters {initial:?}")));
    }
    if data.iter().any(|d| !(d.sigma > T::zero()) || !d.x.is_finite() || !d.y.is_finite()) {
        return Err(Error::InvalidConfig("data must be finite with positive sigma".into()));
    }
    if let Some(b) = bounds {
        if b.len() != m || b.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidConfig("bounds must give lo <= hi for every parameter".into()));
        }
    }

    let mut p = initial.to_vec();
    project(&mut p, bounds);
    let mut lin = linearise(model, data, &p);
    check_rank(&lin.jtj, &names)?;
    let mut lambda = opts.initial_damping;
    let mut history = vec![lin.chi2];
    let mut converged = false;
    let mut n_iter = 0;
    let stall_tol = T::lit(1e-6);
    let exact_floor = data.iter().map(|d| (d.y / d.sigma).powi(2)).sum::<T>() * (T::epsilon() * T::lit(1e3)).powi(2);

    while n_iter < opts.max_iter {
        let grad = scaled_gradient(&lin);
        if grad < opts.gradient_tol || lin.chi2 <= exact_floor {
            converged = true;
            break;
        }
        n_iter += 1;
        let mut a = lin.jtj.clone();
        for i in 0..m {
            a.set(i, i, lin.jtj.get(i, i) * (T::one() + lambda));
        }
        let step = match Cholesky::new(&a, T::zero()) {
            Ok(c) => c.solve(&lin.jtr),
            Err(_) => {
                lambda = lambda * T::lit(10.0);
                continue;
            }
        };
        let mut trial: Vec<T> = p.iter().zip(&step).map(|(&a, &b)| a + b).collect();
        project(&mut trial, bounds);
        let chi2 = weighted_residuals(model, data, &trial);
        if chi2 < lin.chi2 {
            let drop = lin.chi2 - chi2;
            let moved = trial.iter().zip(&p).any(|(a, b)| a != b);
            p = trial;
            lin = linearise(model, data, &p);
            history.push(lin.chi2);
            lambda = (lambda / T::lit(10.0)).max(T::lit(1e-15));
            if !moved || drop <= T::epsilon() * T::lit(4.0) * lin.chi2 {
                converged = scaled_gradient(&lin) < stall_tol;
                if converged {
                    break;
                }
            }
        } else {
            lambda = lambda * T::lit(10.0);
            if lambda > T::lit(1e16) {
                converged = scaled_gradient(&lin) < stall_tol || lin.chi2 <= exact_floor;
                break;
            }
        }
    }
    if !converged {
        log::warn!("least-squares fit stopped after {n_iter} iterations without converging");
    }

    let dof = data.len() - m;
    let mut covariance = match Cholesky::new(&lin.jtj, T::zero()) {
        Ok(c) => c.inverse(),
        Err(i) => return Err(Error::RankDeficient { param: names[i].clone() }),
    };
    if !opts.absolute_sigma && dof > 0 {
        let s = lin.chi2 / T::lit(dof as f64);
        covariance.data.iter_mut().for_each(|v| *v = *v * s);
    }
    let stderr = covariance.diag().into_iter().map(|v| v.max(T::zero()).sqrt()).collect();
    let ss: T = data
        .iter()
        .map(|d| {
            let r = d.y - model.value(d.x, &p);
            r * r
        })
        .sum();
    Ok(FitReport {
        names,
        params: p,
        stderr,
        covariance,
        residual_rms: (ss / T::lit(data.len() as f64)).sqrt(),
        chi2: lin.chi2,
        dof,
        n_iter,
        converged,
        gradient: scaled_gradient(&lin),
        chi2_history: history,
    })
}
