//! Estimators for the quantities measured from fringe data.

use super::extrema::RingExtremum;
use super::models::{Linear, Proportional, Sine, Triangle};
use super::nls::{nls_fit, DataPoint, FitReport, NlsOptions};
use crate::error::{Error, Result};
use crate::numeric::linalg::Matrix;
use crate::real::Real;
use crate::synth::{FringePattern, RadialBin};

/// A derived value with its propagated standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement<T> {
    pub value: T,
    pub stderr: T,
}

fn relative_fit_options<T: Real>() -> NlsOptions<T> {
    NlsOptions { absolute_sigma: false, ..NlsOptions::default() }
}

/// Fits `N = a rho^2 + offset` to ring orders; `a` in inverse square metres.
pub fn fit_quadratic_coefficient<T: Real>(extrema: &[RingExtremum<T>]) -> Result<FitReport<T>> {
    if extrema.len() < 3 {
        return Err(Error::InsufficientData(format!("{} ring extrema, need at least 3", extrema.len())));
    }
    let data: Vec<_> = extrema.iter().map(|e| DataPoint::new(e.radius * e.radius, e.order, T::one())).collect();
    let (sx, sy, sxx, sxy) = data.iter().fold((T::zero(), T::zero(), T::zero(), T::zero()), |a, d| {
        (a.0 + d.x, a.1 + d.y, a.2 + d.x * d.x, a.3 + d.x * d.y)
    });
    let n = T::lit(data.len() as f64);
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let start = [slope, (sy - slope * sx) / n];
    nls_fit(&Linear { slope: "a", offset: "offset" }, &data, &start, None, &relative_fit_options())
}

/// `lambda_eq = 1 / (f2^2 s)` from the proportional fit `a = s d`.
pub fn fit_lambda_eq<T: Real>(pairs: &[(T, T)], f2: T) -> Result<FitReport<T>> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no (d, a) pairs".into()));
    }
    let data: Vec<_> = pairs.iter().map(|&(d, a)| DataPoint::new(d, a, T::one())).collect();
    let sxy: T = pairs.iter().map(|&(d, a)| d * a).sum();
    let sxx: T = pairs.iter().map(|&(d, _)| d * d).sum();
    let fit = nls_fit(&Proportional { slope: "slope" }, &data, &[sxy / sxx], None, &relative_fit_options())?;
    let slope = fit.params[0];
    if !(slope > T::zero()) {
        return Err(Error::Inconsistent(format!("ring coefficient slope {slope} is not positive")));
    }
    let lambda = T::one() / (f2 * f2 * slope);
    let stderr = lambda * fit.stderr[0] / slope;
    let mut covariance = Matrix::zeros(1);
    covariance.set(0, 0, stderr * stderr);
    Ok(FitReport {
        names: vec!["lambda_eq".into()],
        params: vec![lambda],
        stderr: vec![stderr],
        covariance,
        ..fit
    })
}

/// Fits `V_max tri((x - center) / (l_c / 2))` to `(position, V, sigma)`,
/// keeping the best of three starts around the peak.
pub fn fit_triangle_envelope<T: Real>(scan: &[DataPoint<T>]) -> Result<FitReport<T>> {
    if scan.len() < 5 {
        return Err(Error::InsufficientData(format!("{} scan points, need at least 5", scan.len())));
    }
    let mut pts = scan.to_vec();
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal));
    let top = pts.iter().copied().fold(pts[0], |m, d| if d.y > m.y { d } else { m });
    if !(top.y > T::zero()) {
        return Err(Error::NoSignal("all visibilities are zero".into()));
    }
    let area: T = pts.windows(2).map(|w| (w[1].x - w[0].x) * (w[0].y + w[1].y) / T::lit(2.0)).sum();
    let span = pts[pts.len() - 1].x - pts[0].x;
    let width = (T::lit(2.0) * area / top.y).max(span / T::lit(100.0));
    let bounds = [
        (pts[0].x - span, pts[pts.len() - 1].x + span),
        (span / T::lit(1000.0), span * T::lit(10.0)),
        (T::zero(), top.y * T::lit(10.0)),
    ];
    let mut best: Option<FitReport<T>> = None;
    for shift in [T::zero(), -width / T::lit(8.0), width / T::lit(8.0)] {
        let start = [top.x + shift, width, top.y];
        let fit = nls_fit(&Triangle, &pts, &start, Some(&bounds), &NlsOptions::default())?;
        if best.as_ref().is_none_or(|b| fit.chi2 < b.chi2) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Fits `offset + amplitude cos(2 pi x / period + phase)` to `(x, y)`
/// samples. The period is seeded from a periodogram over 256 trial
/// frequencies, log-spaced from half a cycle per scan to the Nyquist rate.
pub fn fit_sine_scan<T: Real>(scan: &[(T, T)]) -> Result<FitReport<T>> {
    if scan.len() < 8 {
        return Err(Error::InsufficientData(format!("{} scan points, need at least 8", scan.len())));
    }
    let n = T::lit(scan.len() as f64);
    let mean = scan.iter().map(|p| p.1).sum::<T>() / n;
    let var = scan.iter().map(|p| (p.1 - mean).powi(2)).sum::<T>() / n;
    let scale = scan.iter().fold(T::zero(), |m, p| m.max(p.1.abs()));
    if !(var > (T::epsilon() * T::lit(1e3) * scale).powi(2)) {
        return Err(Error::NoOscillation("scan is flat".into()));
    }
    let (xmin, xmax) = scan.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let span = xmax - xmin;
    let nyquist = (n - T::one()) / (T::lit(2.0) * span);
    let lowest = T::lit(0.5) / span;
    let ratio = (nyquist / lowest).powf(T::one() / T::lit(255.0));

    let mut best = (0usize, T::zero(), T::zero(), T::zero(), T::zero());
    let mut f = lowest;
    for k in 0..256 {
        let (a, b, power) = harmonic_fit(scan, mean, f);
        if power > best.4 {
            best = (k, f, a, b, power);
        }
        f = f * ratio;
    }
    let (k, f, a, b, _) = best;
    if k == 0 {
        return Err(Error::NoOscillation(format!(
            "periodogram peaks at the lowest trial frequency ({} cycles over the scan)",
            f * span
        )));
    }
    let amplitude = (a * a + b * b).sqrt();
    let phase = (-b).atan2(a);
    let data: Vec<_> = scan.iter().map(|&(x, y)| DataPoint::new(x, y, T::one())).collect();
    let mut fit = nls_fit(&Sine, &data, &[T::one() / f, phase, amplitude, mean], None, &relative_fit_options())?;
    if fit.params[2] < T::zero() {
        fit.params[2] = -fit.params[2];
        fit.params[1] = fit.params[1] + T::PI();
    }
    let p = fit.params[1] % T::TAU();
    fit.params[1] = if p > T::PI() {
        p - T::TAU()
    } else if p <= -T::PI() {
        p + T::TAU()
    } else {
        p
    };
    Ok(fit)
}

/// Least-squares `a cos(2 pi f x) + b sin(2 pi f x)` to the mean-removed
/// data and the variance it explains.
fn harmonic_fit<T: Real>(scan: &[(T, T)], mean: T, f: T) -> (T, T, T) {
    let (mut cc, mut ss, mut cs, mut yc, mut ys) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for &(x, y) in scan {
        let (s, c) = (T::TAU() * f * x).sin_cos();
        let y = y - mean;
        cc = cc + c * c;
        ss = ss + s * s;
        cs = cs + c * s;
        yc = yc + y * c;
        ys = ys + y * s;
    }
    let det = cc * ss - cs * cs;
    if !(det > T::epsilon() * (cc * ss)) {
        return (T::zero(), T::zero(), T::zero());
    }
    let a = (yc * ss - ys * cs) / det;
    let b = (ys * cc - yc * cs) / det;
    (a, b, a * yc + b * ys)
}

/// `n = 1 + d_b / h`, with linear error propagation.
pub fn measure_refractive_index<T: Real>(d_b: T, d_b_err: T, h: T, h_err: T) -> Result<Measurement<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidConfig(format!("sample thickness {h} must be positive")));
    }
    let value = T::one() + d_b / h;
    let stderr = ((d_b_err / h).powi(2) + (d_b * h_err / (h * h)).powi(2)).sqrt();
    Ok(Measurement { value, stderr })
}

/// Wedge angle (rad) from the bright-to-dark fringe spacing on the detector:
/// the spacing is mapped onto M2 and `tan(alpha) = lambda_i / (4 (n - 1) s)`.
pub fn measure_wedge_angle<T: Real>(spacing: T, index: T, lambda_i: T, f1: T, f2: T, lambda_s: T) -> Result<T> {
    if !(spacing > T::zero()) || !(index > T::one()) {
        return Err(Error::InvalidConfig(format!("need spacing > 0 and n > 1 (got {spacing}, {index})")));
    }
    let on_mirror = spacing * f1 * lambda_i / (f2 * lambda_s);
    Ok((lambda_i / (T::lit(4.0) * (index - T::one()) * on_mirror)).atan())
}

/// `(max - min) / (max + min)` of the bin means within `r_max`, after
/// removing `dark` from every bin.
pub fn profile_visibility<T: Real>(profile: &[RadialBin<T>], r_max: T, dark: T) -> Result<T> {
    let (lo, hi) = profile
        .iter()
        .filter(|b| b.radius <= r_max)
        .fold((T::infinity(), T::neg_infinity()), |(a, b), bin| (a.min(bin.mean - dark), b.max(bin.mean - dark)));
    if !(hi > T::zero()) {
        return Err(Error::NoSignal(format!("no positive counts within radius {r_max}")));
    }
    Ok(((hi - lo) / (hi + lo)).max(T::zero()).min(T::one()))
}

/// `(max - min) / (max + min)` over all pixels after removing `dark`.
pub fn pattern_visibility<T: Real>(pattern: &FringePattern<T>, dark: T) -> Result<T> {
    let (lo, hi) = (pattern.min_value() - dark, pattern.max_value() - dark);
    if !(hi > T::zero()) {
        return Err(Error::NoSignal("pattern has no counts above the dark level".into()));
    }
    Ok(((hi - lo) / (hi + lo)).max(T::zero()).min(T::one()))
}

/// Sine fit to the column profile of a band of rows centred on the optical
/// axis; positions in metres from the axis. The fitted period is the
/// bright-to-bright spacing of straight fringes along x.
pub fn fit_fringe_profile<T: Real>(pattern: &FringePattern<T>, band_rows: usize) -> Result<FitReport<T>> {
    let centre = pattern.center[1].round().to_usize().unwrap_or(0).min(pattern.height - 1);
    let half = band_rows / 2;
    let rows = centre.saturating_sub(half)..(centre + half + 1).min(pattern.height);
    let nrows = T::lit(rows.len() as f64);
    let spec = pattern.grid_spec();
    let profile: Vec<(T, T)> = (0..pattern.width)
        .map(|col| {
            let sum: T = rows.clone().map(|r| pattern.get(r, col)).sum();
            (spec.position(centre, col)[0], sum / nrows)
        })
        .collect();
    fit_sine_scan(&profile)
}
