//! Ring maxima and minima in a radial profile.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::synth::RadialBin;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingExtremum<T> {
    pub radius: T,
    /// Integer for maxima, half-integer for minima.
    pub order: T,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, Copy)]
pub struct ExtremaOptions<T> {
    /// Order given to a dark centre. A bright centre is order 0.
    pub dark_center_order: T,
    /// Minimum swing between neighbouring extrema, as a fraction of the
    /// profile's range.
    pub relative_prominence: T,
    /// Swing floor in units of the bin standard errors: the median over the
    /// profile, and the local errors of the two bins being compared.
    pub noise_prominence: T,
    /// Swing floor as a fraction of the largest bin mean.
    pub contrast_floor: T,
}

impl<T: Real> Default for ExtremaOptions<T> {
    fn default() -> Self {
        Self {
            dark_center_order: T::lit(0.5),
            relative_prominence: T::lit(0.1),
            noise_prominence: T::lit(3.0),
            contrast_floor: T::lit(1e-3),
        }
    }
}

pub fn extract_ring_extrema<T: Real>(profile: &[RadialBin<T>]) -> Result<Vec<RingExtremum<T>>> {
    extract_ring_extrema_with(profile, &ExtremaOptions::default())
}

/// Extrema of a lightly smoothed profile by hysteresis: a maximum is
/// confirmed once the profile falls the prominence threshold below it, and
/// vice versa. The first confirmed extremum fixes the state of the centre;
/// orders then step by one half outward. Extrema in the first and last bins
/// are not reported. Positions are refined by a three-point parabola.
pub fn extract_ring_extrema_with<T: Real>(
    profile: &[RadialBin<T>],
    opts: &ExtremaOptions<T>,
) -> Result<Vec<RingExtremum<T>>> {
    let n = profile.len();
    if n < 16 {
        return Err(Error::InsufficientData(format!("ring extraction needs at least 16 bins, got {n}")));
    }
    let raw: Vec<T> = profile.iter().map(|b| b.mean).collect();
    let mut s = raw.clone();
    for i in 1..n - 1 {
        s[i] = (raw[i - 1] + raw[i] + raw[i] + raw[i + 1]) / T::lit(4.0);
    }
    let (lo, hi) = s.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
    let mut errs: Vec<T> = profile.iter().map(|b| b.stderr).collect();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let median_err = errs[n / 2];
    let peak = raw.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let delta = (opts.relative_prominence * (hi - lo))
        .max(opts.noise_prominence * median_err)
        .max(opts.contrast_floor * peak);
    if !(hi - lo > delta) {
        return Ok(Vec::new());
    }
    let local: Vec<T> = (0..n)
        .map(|i| {
            let a = profile[i.saturating_sub(1)].stderr;
            let b = profile[(i + 1).min(n - 1)].stderr;
            profile[i].stderr.max(a).max(b)
        })
        .collect();
    let swing = |a: usize, b: usize| delta.max(opts.noise_prominence * local[a].hypot(local[b]));

    let mut found: Vec<(usize, ExtremumKind)> = Vec::new();
    let (mut imax, mut imin) = (0usize, 0usize);
    let mut seeking: Option<ExtremumKind> = None;
    for i in 1..n {
        let v = s[i];
        if v > s[imax] {
            imax = i;
        }
        if v < s[imin] {
            imin = i;
        }
        match seeking {
            None => {
                if v < s[imax] - swing(imax, i) {
                    found.push((imax, ExtremumKind::Max));
                    seeking = Some(ExtremumKind::Min);
                    imin = i;
                } else if v > s[imin] + swing(imin, i) {
                    found.push((imin, ExtremumKind::Min));
                    seeking = Some(ExtremumKind::Max);
                    imax = i;
                }
            }
            Some(ExtremumKind::Max) => {
                if v < s[imax] - swing(imax, i) {
                    found.push((imax, ExtremumKind::Max));
                    seeking = Some(ExtremumKind::Min);
                    imin = i;
                }
            }
            Some(ExtremumKind::Min) => {
                if v > s[imin] + swing(imin, i) {
                    found.push((imin, ExtremumKind::Min));
                    seeking = Some(ExtremumKind::Max);
                    imax = i;
                }
            }
        }
    }

    let Some(&(_, first_kind)) = found.first() else {
        return Ok(Vec::new());
    };
    let start = match first_kind {
        ExtremumKind::Max => T::zero(),
        ExtremumKind::Min => opts.dark_center_order,
    };
    let half = T::lit(0.5);
    Ok(found
        .iter()
        .enumerate()
        .filter(|(_, &(i, _))| i > 0 && i < n - 1)
        .map(|(k, &(i, kind))| {
            let (l, m, r) = (s[i - 1], s[i], s[i + 1]);
            let curv = l - m - m + r;
            let shift = if curv != T::zero() { (half * (l - r) / curv).max(-half).min(half) } else { T::zero() };
            let radius = if shift >= T::zero() {
                profile[i].radius + shift * (profile[i + 1].radius - profile[i].radius)
            } else {
                profile[i].radius + shift * (profile[i].radius - profile[i - 1].radius)
            };
            RingExtremum { radius, order: start + half * T::lit(k as f64), kind }
        })
        .collect())
}
