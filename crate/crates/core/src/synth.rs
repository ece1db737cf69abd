//! Detection-plane images: rendering, band-pass filter, shot noise and
//! radial profiles.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interferometer::{mean_count_incoherent, mean_count_integral, Scenario};
use crate::real::Real;
use crate::units;

/// Below `exp(-SUPPORT_EXPONENT)` the filter is treated as opaque.
pub const SUPPORT_EXPONENT: f64 = 40.0;

/// Super-Gaussian band-pass, `T = exp[-((lambda - center) / width)^order]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterModel<T> {
    /// Centre wavelength, m.
    pub center: T,
    /// Width parameter, m.
    pub width: T,
    pub order: u32,
}

impl<T: Real> FilterModel<T> {
    /// 800 nm centre, 5.6 nm width parameter, sixth order.
    pub fn bandpass_800_10() -> Self {
        Self { center: units::nm(T::lit(800.0)), width: units::nm(T::lit(5.6)), order: 6 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("filter order {} must be even and positive", self.order)));
        }
        if !(self.width > T::zero() && self.center > T::zero()) {
            return Err(Error::InvalidConfig("filter centre and width must be positive".into()));
        }
        Ok(())
    }

    pub fn transmission(&self, lambda: T) -> T {
        let x = (lambda - self.center) / self.width;
        (-x.powi(self.order as i32)).exp()
    }

    /// Wavelength interval outside which the transmission is below
    /// `exp(-SUPPORT_EXPONENT)`.
    pub fn support(&self) -> (T, T) {
        let reach = self.width * T::lit(SUPPORT_EXPONENT).powf(T::one() / T::lit(self.order as f64));
        (self.center - reach, self.center + reach)
    }
}

/// Pixel grid of the detector. Pixel `(row, col)` sits at
/// `x = (col - center[0]) pitch`, `y = (row - center[1]) pitch`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub width: usize,
    pub height: usize,
    /// Metres per pixel.
    pub pixel_pitch: T,
    /// Optical axis in pixel coordinates `[col, row]`.
    pub center: [T; 2],
}

impl<T: Real> GridSpec<T> {
    /// Grid with the axis at its geometric centre.
    pub fn centered(width: usize, height: usize, pixel_pitch: T) -> Self {
        let center = [T::lit((width as f64 - 1.0) / 2.0), T::lit((height as f64 - 1.0) / 2.0)];
        Self { width, height, pixel_pitch, center }
    }

    /// 512 x 512 at 13 um.
    pub fn default_camera() -> Self {
        Self::centered(512, 512, units::um(T::lit(13.0)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.pixel_pitch > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "grid {}x{} with pitch {} is empty",
                self.width, self.height, self.pixel_pitch
            )));
        }
        Ok(())
    }

    pub fn position(&self, row: usize, col: usize) -> [T; 2] {
        [
            (T::lit(col as f64) - self.center[0]) * self.pixel_pitch,
            (T::lit(row as f64) - self.center[1]) * self.pixel_pitch,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringePattern<T> {
    /// Row-major counts.
    pub grid: Vec<T>,
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: T,
    pub center: [T; 2],
    /// Multiplier applied to the mean counts before noise; 1 for a noiseless render.
    pub exposure_scale: T,
    /// Seed of the noise realisation, if any.
    pub seed: Option<u64>,
}

impl<T: Real> FringePattern<T> {
    pub fn get(&self, row: usize, col: usize) -> T {
        self.grid[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.grid[row * self.width..(row + 1) * self.width]
    }

    pub fn grid_spec(&self) -> GridSpec<T> {
        GridSpec { width: self.width, height: self.height, pixel_pitch: self.pixel_pitch, center: self.center }
    }

    pub fn max_value(&self) -> T {
        self.grid.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_value(&self) -> T {
        self.grid.iter().copied().fold(T::infinity(), T::min)
    }

    /// Same geometry, counts multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self { grid: self.grid.iter().map(|&v| v * s).collect(), ..self.clone() }
    }
}

/// Evaluates `f` at every pixel, once per distinct radius when `symmetric`.
fn evaluate<T, F>(grid: &GridSpec<T>, symmetric: bool, f: F) -> Result<Vec<T>>
where
    T: Real,
    F: Fn([T; 2]) -> Result<T> + Sync,
{
    grid.validate()?;
    let positions: Vec<[T; 2]> =
        (0..grid.height).flat_map(|r| (0..grid.width).map(move |c| grid.position(r, c))).collect();
    if !symmetric {
        return positions.par_iter().map(|&p| f(p)).collect();
    }
    let key = |p: [T; 2]| (p[0] * p[0] + p[1] * p[1]).as_f64().to_bits();
    let mut radii: Vec<(u64, T)> =
        positions.iter().map(|&p| (key(p), (p[0] * p[0] + p[1] * p[1]).sqrt())).collect();
    radii.sort_unstable_by_key(|r| r.0);
    radii.dedup_by_key(|r| r.0);
    let values: Vec<T> = radii.par_iter().map(|&(_, r)| f([r, T::zero()])).collect::<Result<_>>()?;
    let lookup: HashMap<u64, T> = radii.iter().map(|r| r.0).zip(values).collect();
    Ok(positions.iter().map(|&p| lookup[&key(p)]).collect())
}

/// Mean counts of `scenario` on `grid`, from the spectral integral at each
/// pixel centre.
pub fn render_pattern<T: Real>(scenario: &Scenario<T>, grid: &GridSpec<T>) -> Result<FringePattern<T>> {
    scenario.validate()?;
    let values = evaluate(grid, scenario.is_rotationally_symmetric(), |p| mean_count_integral(scenario, p))?;
    Ok(pattern_from(grid, values))
}

/// Out-of-coherence background of `scenario` (no interference term), used as
/// a flat field.
pub fn render_background<T: Real>(scenario: &Scenario<T>, grid: &GridSpec<T>) -> Result<FringePattern<T>> {
    scenario.validate()?;
    let values = evaluate(grid, scenario.is_rotationally_symmetric(), |p| mean_count_incoherent(scenario, p))?;
    Ok(pattern_from(grid, values))
}

fn pattern_from<T: Real>(grid: &GridSpec<T>, values: Vec<T>) -> FringePattern<T> {
    FringePattern {
        grid: values,
        width: grid.width,
        height: grid.height,
        pixel_pitch: grid.pixel_pitch,
        center: grid.center,
        exposure_scale: T::one(),
        seed: None,
    }
}

/// Poisson realisation with mean `exposure * counts` per pixel. Row `r` draws
/// from ChaCha8 stream `r` of `seed`, so the result does not depend on thread
/// scheduling.
pub fn add_shot_noise<T: Real>(pattern: &FringePattern<T>, exposure: T, seed: u64) -> Result<FringePattern<T>> {
    if !(exposure > T::zero()) {
        return Err(Error::InvalidConfig(format!("exposure {exposure} must be positive")));
    }
    let rows: Vec<Vec<T>> = (0..pattern.height)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            pattern
                .row(r)
                .iter()
                .map(|&v| {
                    let mean = (v * exposure).as_f64();
                    if mean > 0.0 {
                        let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(&mut rng);
                        T::lit(draw)
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect();
    Ok(FringePattern {
        grid: rows.into_iter().flatten().collect(),
        exposure_scale: pattern.exposure_scale * exposure,
        seed: Some(seed),
        ..pattern.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBin<T> {
    /// Mean pixel radius in the annulus, m.
    pub radius: T,
    pub mean: T,
    pub stderr: T,
    pub count: usize,
}

/// Azimuthal average in `n_bins` equal annuli out to the largest circle that
/// fits inside the image.
pub fn radial_profile<T: Real>(pattern: &FringePattern<T>, n_bins: usize) -> Result<Vec<RadialBin<T>>> {
    let [cx, cy] = pattern.center;
    let (w, h) = (T::lit(pattern.width as f64 - 1.0), T::lit(pattern.height as f64 - 1.0));
    if !(cx >= T::zero() && cy >= T::zero() && cx <= w && cy <= h) {
        return Err(Error::InvalidConfig(format!("profile centre ({cx}, {cy}) outside the image")));
    }
    let reach = cx.min(cy).min(w - cx).min(h - cy) * pattern.pixel_pitch;
    radial_profile_to(pattern, n_bins, reach)
}

/// Like [`radial_profile`] with an explicit outer radius in metres.
pub fn radial_profile_to<T: Real>(pattern: &FringePattern<T>, n_bins: usize, r_max: T) -> Result<Vec<RadialBin<T>>> {
    if n_bins < 4 {
        return Err(Error::InsufficientData(format!("radial profile needs at least 4 bins, got {n_bins}")));
    }
    if !(r_max > T::zero()) {
        return Err(Error::InvalidConfig(format!("profile radius {r_max} must be positive")));
    }
    let spec = pattern.grid_spec();
    let mut acc = vec![(0.0f64, 0.0f64, 0.0f64, 0usize); n_bins];
    let scale = T::lit(n_bins as f64) / r_max;
    for row in 0..pattern.height {
        for col in 0..pattern.width {
            let p = spec.position(row, col);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if r > r_max {
                continue;
            }
            let bin = (r * scale).to_usize().unwrap_or(0).min(n_bins - 1);
            let v = pattern.get(row, col).as_f64();
            let a = &mut acc[bin];
            a.0 += r.as_f64();
            a.1 += v;
            a.2 += v * v;
            a.3 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .filter(|a| a.3 > 0)
        .map(|(sr, sv, svv, n)| {
            let nf = n as f64;
            let mean = sv / nf;
            let stderr = if n > 1 { ((svv - nf * mean * mean).max(0.0) / (nf - 1.0) / nf).sqrt() } else { 0.0 };
            RadialBin { radius: T::lit(sr / nf), mean: T::lit(mean), stderr: T::lit(stderr), count: n }
        })
        .collect())
}
