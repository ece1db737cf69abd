//! Phase difference and detection-plane mean photon number of the folded
//! two-pass interferometer.
//!
//! Lengths are metres and angles radians throughout; detector and mirror
//! coordinates are `[x, y]` pairs in metres.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate_chunked, QuadOptions};
use crate::numeric::special::{sinc2_cos_tail, tri};
use crate::phasematch::{spectral_density, SpdcConfig, SpectralModel, CORE_HALF_WIDTH};
use crate::real::Real;
use crate::synth::FilterModel;
use crate::units;

/// Absolute error target for the spectral integral, whose value is at most 2.
pub const INTEGRAL_ABS_TOL: f64 = 1e-7;
/// Filtered integrals are taken over at most this many full widths either side
/// of the spectral centre.
pub const FILTERED_SPAN: f64 = 200.0;

/// Thickness profile of a sample on mirror M2, metres.
#[derive(Clone)]
pub enum Thickness<T> {
    Uniform(T),
    /// `h = h0 + x tan(angle)`, clipped at zero.
    Wedge { angle: T, h0: T },
    /// Stripes along y: `height` where `frac(x / period) < duty`, else 0.
    Bars { period: T, height: T, duty: T },
    Custom(Arc<dyn Fn(T, T) -> T + Send + Sync>),
}

impl<T: Real> Thickness<T> {
    pub fn at(&self, x: T, y: T) -> T {
        match self {
            Thickness::Uniform(h) => *h,
            Thickness::Wedge { angle, h0 } => (*h0 + x * angle.tan()).max(T::zero()),
            Thickness::Bars { period, height, duty } => {
                let f = (x / *period).fract();
                let f = if f < T::zero() { f + T::one() } else { f };
                if f < *duty {
                    *height
                } else {
                    T::zero()
                }
            }
            Thickness::Custom(f) => f(x, y).max(T::zero()),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Thickness<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Thickness::Uniform(h) => f.debug_tuple("Uniform").field(h).finish(),
            Thickness::Wedge { angle, h0 } => {
                f.debug_struct("Wedge").field("angle", angle).field("h0", h0).finish()
            }
            Thickness::Bars { period, height, duty } => f
                .debug_struct("Bars")
                .field("period", period)
                .field("height", height)
                .field("duty", duty)
                .finish(),
            Thickness::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Transparent sample of index `index` and thickness profile `thickness`
/// placed on M2. It adds `2 (n - 1) h` of idler path.
#[derive(Debug, Clone)]
pub struct PhaseMask<T> {
    pub thickness: Thickness<T>,
    pub index: T,
}

impl<T: Real> PhaseMask<T> {
    pub fn uniform(h: T, index: T) -> Self {
        Self { thickness: Thickness::Uniform(h), index }
    }

    pub fn wedge(angle: T, h0: T, index: T) -> Self {
        Self { thickness: Thickness::Wedge { angle, h0 }, index }
    }

    /// Extra idler optical path at a point of the M2 plane.
    pub fn opd(&self, mirror: [T; 2]) -> T {
        T::lit(2.0) * (self.index - T::one()) * self.thickness.at(mirror[0], mirror[1])
    }

    /// True when the mask cannot break rotational symmetry.
    pub fn is_uniform(&self) -> bool {
        matches!(self.thickness, Thickness::Uniform(_))
    }
}

#[derive(Debug, Clone)]
pub struct Scenario<T> {
    /// Focal length of the lens between crystal and M2.
    pub f1: T,
    /// Focal length of the lens imaging onto the detector.
    pub f2: T,
    /// Arm length difference, signed.
    pub delta_l: T,
    /// Crystal displacement `d` from the imaging condition.
    pub crystal_shift: T,
    /// Lumped pump/signal dispersion phase.
    pub phi1: T,
    /// Lumped signal/idler dispersion length; adds `2 l'` to the path difference.
    pub l_prime: T,
    /// Mean dark counts per pixel, in the same units as the mean count.
    pub dark_counts: T,
    pub phase_mask: Option<PhaseMask<T>>,
    pub filter: Option<FilterModel<T>>,
    /// Permits a crystal shift together with a phase mask.
    pub allow_combined: bool,
    pub spectral: SpectralModel<T>,
    pub spdc: SpdcConfig<T>,
}

impl<T: Real> Scenario<T> {
    /// Equal-arm imaging configuration with 75 mm and 200 mm lenses.
    pub fn new(spdc: SpdcConfig<T>, spectral: SpectralModel<T>) -> Self {
        Self {
            f1: units::mm(T::lit(75.0)),
            f2: units::mm(T::lit(200.0)),
            delta_l: T::zero(),
            crystal_shift: T::zero(),
            phi1: T::zero(),
            l_prime: T::zero(),
            dark_counts: T::zero(),
            phase_mask: None,
            filter: None,
            allow_combined: false,
            spectral,
            spdc,
        }
    }

    pub fn from_config(spdc: SpdcConfig<T>) -> Result<Self> {
        let spectral = SpectralModel::from_config(&spdc)?;
        Ok(Self::new(spdc, spectral))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f1 > T::zero() && self.f2 > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "focal lengths must be positive (f1 = {}, f2 = {})",
                self.f1, self.f2
            )));
        }
        let limit = T::lit(10.0) * coherence_length(&self.spectral);
        if !(self.delta_l.abs() <= limit) {
            return Err(Error::InvalidConfig(format!(
                "|delta_l| = {} m exceeds ten coherence lengths ({} m)",
                self.delta_l, limit
            )));
        }
        if self.crystal_shift != T::zero() && self.phase_mask.is_some() && !self.allow_combined {
            return Err(Error::InvalidConfig(
                "crystal shift and phase mask both active; set allow_combined to mix regimes".into(),
            ));
        }
        if let Some(mask) = &self.phase_mask {
            if !(mask.index >= T::one()) {
                return Err(Error::InvalidConfig(format!("mask index {} below 1", mask.index)));
            }
        }
        if !(self.dark_counts >= T::zero()) {
            return Err(Error::InvalidConfig("dark counts must be non-negative".into()));
        }
        if let Some(filter) = &self.filter {
            filter.validate()?;
        }
        self.spdc.validate()
    }

    /// True when counts depend on the detector position only through its radius.
    pub fn is_rotationally_symmetric(&self) -> bool {
        self.phase_mask.as_ref().is_none_or(|m| m.is_uniform())
    }

    pub fn summary(&self) -> String {
        format!(
            "f1 = {} m, f2 = {} m, delta_l = {} m, d = {} m, phi1 = {}, l' = {} m, mask = {:?}, filter = {:?}",
            self.f1, self.f2, self.delta_l, self.crystal_shift, self.phi1, self.l_prime, self.phase_mask, self.filter
        )
    }
}

/// `lambda_s lambda_p / lambda_i`.
pub fn equivalent_wavelength<T: Real>(lambda_p: T, lambda_s: T, lambda_i: T) -> T {
    lambda_s * lambda_p / lambda_i
}

/// Detector-plane signal position to M2-plane idler position,
/// `rho_i = rho_s f1 lambda_i / (f2 lambda_s)`.
pub fn map_detector_to_mirror<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2]) -> [T; 2] {
    let s = scenario.f1 * scenario.spdc.idler_wavelength() / (scenario.f2 * scenario.spdc.signal_wavelength);
    [rho_s[0] * s, rho_s[1] * s]
}

fn radius_sq<T: Real>(rho: [T; 2]) -> T {
    rho[0] * rho[0] + rho[1] * rho[1]
}

/// Signal transverse wavevector for a detector position, `|rho| k_s0 / f2`.
pub fn kappa_at<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2]) -> T {
    radius_sq(rho_s).sqrt() * scenario.spectral.omega_s0 / (units::c::<T>() * scenario.f2)
}

/// Idler path difference seen at a detector position: `delta_l + 2 l'` plus
/// the sample contribution.
pub fn effective_opd<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2]) -> T {
    let mut l = scenario.delta_l + T::lit(2.0) * scenario.l_prime;
    if let Some(mask) = &scenario.phase_mask {
        l = l + mask.opd(map_detector_to_mirror(scenario, rho_s));
    }
    l
}

/// Equal-inclination phase `2 pi d theta^2 / lambda_eq` with `theta = rho / f2`.
pub fn inclination_phase<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2]) -> T {
    if scenario.crystal_shift == T::zero() {
        return T::zero();
    }
    let theta2 = radius_sq(rho_s) / (scenario.f2 * scenario.f2);
    T::TAU() * scenario.crystal_shift * theta2 / scenario.spdc.equivalent_wavelength()
}

/// Total interferometer phase at a detector position for idler frequency `omega_i`.
pub fn phase_total<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2], omega_i: T) -> T {
    omega_i / units::c::<T>() * effective_opd(scenario, rho_s) + scenario.phi1 + inclination_phase(scenario, rho_s)
}

/// ASD phase `b kappa^2 L / c`, with `L` the effective path difference.
pub fn asd_phase<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2]) -> T {
    let kappa = kappa_at(scenario, rho_s);
    scenario.spectral.b * kappa * kappa * effective_opd(scenario, rho_s) / units::c::<T>()
}

/// Visibility envelope `tri(L dw / (4 pi c))`.
pub fn visibility_envelope<T: Real>(spectral: &SpectralModel<T>, delta_l: T) -> T {
    tri(delta_l * spectral.delta_omega / (T::lit(4.0) * T::PI() * units::c::<T>()))
}

/// `8 pi c / dw`.
pub fn coherence_length<T: Real>(spectral: &SpectralModel<T>) -> T {
    spectral.coherence_length()
}

/// `(4 lambda_i^2 / d lambda_i, 4 lambda_s^2 / d lambda_s)` with the
/// wavelength widths taken between the exact band edges.
pub fn coherence_length_wavelength_forms<T: Real>(spectral: &SpectralModel<T>) -> (T, T) {
    let half = spectral.delta_omega / T::lit(2.0);
    let four = T::lit(4.0);
    let form = |w0: T| {
        let dl = units::wavelength_from_omega(w0 - half) - units::wavelength_from_omega(w0 + half);
        let l0 = units::wavelength_from_omega(w0);
        four * l0 * l0 / dl
    };
    (form(spectral.omega_i0()), form(spectral.omega_s0))
}

/// Closed-form mean count
/// `2|eps|^2 [1 + tri(L dw / 4 pi c) cos(w_i0 L / c - b kappa^2 L / c + phi1 + phi_d)] + dark`.
///
/// `L` includes any sample path. The filter is ignored.
pub fn mean_count_closed<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2]) -> T {
    let l = effective_opd(scenario, rho_s);
    let phase = scenario.spectral.omega_i0() * l / units::c::<T>() - asd_phase(scenario, rho_s)
        + scenario.phi1
        + inclination_phase(scenario, rho_s);
    let v = visibility_envelope(&scenario.spectral, l);
    T::lit(2.0) * scenario.spdc.pair_gen_scale * (T::one() + v * phase.cos()) + scenario.dark_counts
}

/// Mean count by direct integration over the signal spectrum,
/// `2|eps|^2 \int [1 + cos phi] P T_filter d omega_s + dark`.
///
/// Without a filter the central `+-3 dw` is integrated numerically and the
/// sinc^2 tails beyond it are added in closed form. With a filter the
/// integral runs over the filter's support.
pub fn mean_count_integral<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2]) -> Result<T> {
    let value = spectral_integral(scenario, rho_s, true).map_err(|e| attach(e, scenario, rho_s))?;
    Ok(T::lit(2.0) * scenario.spdc.pair_gen_scale * value + scenario.dark_counts)
}

/// Mean count with the interference term dropped: the out-of-coherence
/// background `2|eps|^2 \int P T_filter d omega_s + dark`.
pub fn mean_count_incoherent<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2]) -> Result<T> {
    let value = spectral_integral(scenario, rho_s, false).map_err(|e| attach(e, scenario, rho_s))?;
    Ok(T::lit(2.0) * scenario.spdc.pair_gen_scale * value + scenario.dark_counts)
}

fn attach<T: Real>(e: Error, scenario: &Scenario<T>, rho_s: [T; 2]) -> Error {
    match e {
        Error::Quadrature { lo, hi, err, .. } => Error::Quadrature {
            lo,
            hi,
            err,
            context: format!("rho_s = ({}, {}) m; {}", rho_s[0], rho_s[1], scenario.summary()),
        },
        other => other,
    }
}

fn spectral_integral<T: Real>(scenario: &Scenario<T>, rho_s: [T; 2], coherent: bool) -> Result<T> {
    let m = &scenario.spectral;
    let c = units::c::<T>();
    let kappa = kappa_at(scenario, rho_s);
    let centre = m.center_at(kappa);
    let l = effective_opd(scenario, rho_s);
    let fixed = scenario.phi1 + inclination_phase(scenario, rho_s);
    let omega_p = m.omega_p;
    let weight = |w: T| {
        let fringe = if coherent { T::one() + ((omega_p - w) * l / c + fixed).cos() } else { T::one() };
        fringe * spectral_density(m, w, kappa)
    };
    let opts = QuadOptions { abs_tol: T::lit(INTEGRAL_ABS_TOL), rel_tol: T::lit(1e-7), ..QuadOptions::default() };
    let chunk = m.delta_omega / T::lit(2.0);

    match &scenario.filter {
        None => {
            let half = T::lit(CORE_HALF_WIDTH) * m.delta_omega;
            let core = integrate_chunked(weight, centre - half, centre + half, chunk, opts)?.value;
            let a = T::TAU() / m.delta_omega;
            let x0 = a * half;
            let mut tails = sinc2_cos_tail(T::zero(), x0);
            if coherent {
                let phase_at_centre = (omega_p - centre) * l / c + fixed;
                let tau = l / (c * a);
                tails = tails + phase_at_centre.cos() * sinc2_cos_tail(tau, x0);
            }
            Ok(core + T::lit(2.0) * m.norm / a * tails)
        }
        Some(filter) => {
            let (lam_lo, lam_hi) = filter.support();
            let span = T::lit(FILTERED_SPAN) * m.delta_omega;
            let lo = units::omega_from_wavelength(lam_hi).max(centre - span).max(T::zero());
            let hi = if lam_lo > T::zero() { units::omega_from_wavelength(lam_lo) } else { omega_p };
            let hi = hi.min(centre + span).min(omega_p);
            if !(hi > lo) {
                return Ok(T::zero());
            }
            let f = |w: T| weight(w) * filter.transmission(units::wavelength_from_omega(w));
            Ok(integrate_chunked(f, lo, hi, chunk, opts)?.value)
        }
    }
}
