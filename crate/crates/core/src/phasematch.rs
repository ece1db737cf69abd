//! Quasi-phase-matching, the down-converted spectrum and its angular
//! dependence.

use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::numeric::quad::{integrate_chunked, QuadOptions};
use crate::numeric::roots::{bisect, bracket_outward};
use crate::numeric::special::{sinc, sinc2_cos_tail};
use crate::real::Real;
use crate::units;

/// Tolerance on `1/lambda_p = 1/lambda_s + 1/lambda_i` for externally supplied
/// wavelength triples.
pub const ENERGY_TOLERANCE: f64 = 1e-4;

/// Source configuration. The idler is never stored: it follows from energy
/// conservation with the pump and signal.
#[derive(Debug, Clone)]
pub struct SpdcConfig<T> {
    /// Pump vacuum wavelength, m.
    pub pump_wavelength: T,
    /// Collinear signal centre wavelength, m.
    pub signal_wavelength: T,
    /// Crystal length, m.
    pub crystal_length: T,
    /// Poling period, m.
    pub poling_period: T,
    /// Pair-generation probability per crystal pass, `|epsilon|^2`.
    pub pair_gen_scale: T,
    pub pump_material: DispersionModel<T>,
    pub signal_material: DispersionModel<T>,
    pub idler_material: DispersionModel<T>,
}

impl<T: Real> SpdcConfig<T> {
    /// Builds a configuration for a single crystal material and solves the
    /// poling period so that the centre wavelengths are exactly phase matched.
    pub fn new(
        pump_wavelength: T,
        signal_wavelength: T,
        crystal_length: T,
        pair_gen_scale: T,
        crystal: DispersionModel<T>,
    ) -> Result<Self> {
        Self::with_materials(
            pump_wavelength,
            signal_wavelength,
            crystal_length,
            pair_gen_scale,
            [crystal.clone(), crystal.clone(), crystal],
        )
    }

    /// Like [`SpdcConfig::new`] with separate pump, signal and idler models.
    pub fn with_materials(
        pump_wavelength: T,
        signal_wavelength: T,
        crystal_length: T,
        pair_gen_scale: T,
        [pump_material, signal_material, idler_material]: [DispersionModel<T>; 3],
    ) -> Result<Self> {
        if !(pump_wavelength > T::zero() && signal_wavelength > pump_wavelength) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < pump wavelength ({pump_wavelength}) < signal wavelength ({signal_wavelength})"
            )));
        }
        let mut cfg = Self {
            pump_wavelength,
            signal_wavelength,
            crystal_length,
            poling_period: T::one(),
            pair_gen_scale,
            pump_material,
            signal_material,
            idler_material,
        };
        cfg.poling_period = solve_poling_period(
            pump_wavelength,
            signal_wavelength,
            cfg.idler_wavelength(),
            [&cfg.pump_material, &cfg.signal_material, &cfg.idler_material],
        )?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.crystal_length > T::zero()) {
            return Err(Error::InvalidConfig("crystal length must be positive".into()));
        }
        if !(self.poling_period > T::zero()) {
            return Err(Error::InvalidConfig("poling period must be positive".into()));
        }
        if !(self.pair_gen_scale > T::zero() && self.pair_gen_scale < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "pair generation scale {} outside (0, 1)",
                self.pair_gen_scale
            )));
        }
        Ok(())
    }

    /// Idler centre wavelength from `1/lambda_i = 1/lambda_p - 1/lambda_s`.
    pub fn idler_wavelength(&self) -> T {
        units::wavelength_from_omega(self.omega_i0())
    }

    pub fn omega_p(&self) -> T {
        units::omega_from_wavelength(self.pump_wavelength)
    }

    pub fn omega_s0(&self) -> T {
        units::omega_from_wavelength(self.signal_wavelength)
    }

    pub fn omega_i0(&self) -> T {
        self.omega_p() - self.omega_s0()
    }

    /// Equivalent wavelength `lambda_s lambda_p / lambda_i` of the centres.
    pub fn equivalent_wavelength(&self) -> T {
        self.signal_wavelength * self.pump_wavelength / self.idler_wavelength()
    }
}

/// Relative mismatch of `1/lambda_p` against `1/lambda_s + 1/lambda_i`.
pub fn energy_mismatch<T: Real>(lambda_p: T, lambda_s: T, lambda_i: T) -> T {
    let lhs = T::one() / lambda_p;
    ((lhs - T::one() / lambda_s - T::one() / lambda_i) / lhs).abs()
}

/// First-order poling period `2 pi / (k_p - k_s - k_i)` for collinear
/// propagation at the given wavelengths (m).
pub fn solve_poling_period<T: Real>(
    lambda_p: T,
    lambda_s: T,
    lambda_i: T,
    [pump, signal, idler]: [&DispersionModel<T>; 3],
) -> Result<T> {
    let mismatch = energy_mismatch(lambda_p, lambda_s, lambda_i);
    if mismatch > T::lit(ENERGY_TOLERANCE) {
        return Err(Error::InvalidConfig(format!(
            "wavelengths violate energy conservation (relative mismatch {mismatch})"
        )));
    }
    let kp = pump.wavevector(lambda_p)?;
    let dk = kp - signal.wavevector(lambda_s)? - idler.wavevector(lambda_i)?;
    if !(dk > T::lit(1e-9) * kp) {
        return Err(Error::NoQpmSolution { mismatch: dk.as_f64() });
    }
    Ok(T::TAU() / dk)
}

/// Longitudinal wavevector mismatch `k_p - k_sz - k_iz - 2 pi / Lambda` with
/// `kappa_i = -kappa_s` and `k_jz = sqrt(k_j^2 - kappa^2)`.
pub fn qpm_mismatch<T: Real>(config: &SpdcConfig<T>, omega_s: T, kappa_s: T) -> Result<T> {
    let omega_p = config.omega_p();
    if !(omega_s > T::zero() && omega_s < omega_p) {
        return Err(Error::InvalidConfig(format!(
            "signal frequency {omega_s} outside (0, omega_p = {omega_p})"
        )));
    }
    let omega_i = omega_p - omega_s;
    let kp = config.pump_material.k_at_omega(omega_p)?;
    let ks = config.signal_material.k_at_omega(omega_s)?;
    let ki = config.idler_material.k_at_omega(omega_i)?;
    let kappa = kappa_s.abs();
    for k in [ks, ki] {
        if kappa >= k {
            return Err(Error::Evanescent { kappa: kappa.as_f64(), k: k.as_f64() });
        }
    }
    let ksz = (ks * ks - kappa * kappa).sqrt();
    let kiz = (ki * ki - kappa * kappa).sqrt();
    Ok(kp - ksz - kiz - T::TAU() / config.poling_period)
}

/// Full spectral width between the first zeros of `sinc^2(dk L / 2)` around
/// the collinear signal centre, rad/s.
pub fn bandwidth<T: Real>(config: &SpdcConfig<T>) -> Result<T> {
    let w0 = config.omega_s0();
    let half_l = config.crystal_length / T::lit(2.0);
    let g = |w: T| match qpm_mismatch(config, w, T::zero()) {
        Ok(dk) => (dk * half_l).abs() - T::PI(),
        Err(_) => T::nan(),
    };
    let step = w0 * T::lit(1e-5);
    let limit = w0 * T::lit(0.2);
    let mut edges = [T::zero(); 2];
    for (slot, dir) in edges.iter_mut().zip([T::one(), -T::one()]) {
        let (a, b) = bracket_outward(g, w0, step * dir, w0 + limit * dir).map_err(|_| {
            Error::RootNotBracketed(format!(
                "first spectral zero not found within 20% of omega_s0 = {w0} rad/s"
            ))
        })?;
        *slot = bisect(g, a, b, T::lit(1e-12))?;
    }
    Ok(edges[0] - edges[1])
}

/// Refractive indices and `dn/domega` of signal and idler at their centres.
struct CentreOptics<T> {
    ws: T,
    wi: T,
    ns: T,
    ni: T,
    beta_s: T,
    beta_i: T,
}

impl<T: Real> CentreOptics<T> {
    fn of(config: &SpdcConfig<T>) -> Result<Self> {
        let ls = config.signal_wavelength;
        let li = config.idler_wavelength();
        Ok(Self {
            ws: config.omega_s0(),
            wi: config.omega_i0(),
            ns: config.signal_material.refractive_index(ls)?,
            ni: config.idler_material.refractive_index(li)?,
            beta_s: config.signal_material.dn_domega(ls)?,
            beta_i: config.idler_material.dn_domega(li)?,
        })
    }

    /// `beta_s w_s + n_s - beta_i w_i - n_i`: group-index difference.
    fn group_difference(&self) -> Result<T> {
        let d = self.beta_s * self.ws + self.ns - self.beta_i * self.wi - self.ni;
        if d.abs() <= T::lit(1e-12) * self.ns {
            return Err(Error::Singular(
                "signal and idler group indices coincide; the parabola coefficient diverges".into(),
            ));
        }
        Ok(d)
    }
}

/// Paraxial closed form of the parabola coefficient `b` in
/// `omega_s0(kappa) = omega_s0 + b kappa^2`:
///
/// `b = (n_s w_s + n_i w_i) c^2 / (2 n_s n_i w_s w_i (beta_s w_s + n_s - beta_i w_i - n_i))`
///
/// obtained by expanding `k_z = sqrt(k^2 - kappa^2)` to second order for both
/// down-converted fields.
pub fn parabola_b_closed<T: Real>(config: &SpdcConfig<T>) -> Result<T> {
    let o = CentreOptics::of(config)?;
    let d = o.group_difference()?;
    let c = units::c::<T>();
    Ok((o.ns * o.ws + o.ni * o.wi) * c * c / (T::lit(2.0) * o.ns * o.ni * o.ws * o.wi * d))
}

/// The parabola coefficient as printed in the literature this model follows,
/// `w_s0 (w_s0 n_s + w_i0 n_i) c^2 / (2 n_s w_s^3 D)` with `w_s = w_s0`.
///
/// Kept for comparison only: it differs from [`parabola_b_closed`] (and from
/// the numerical phase-matching solution) by the factor `n_s k_i / k_s`.
pub fn parabola_b_published<T: Real>(config: &SpdcConfig<T>) -> Result<T> {
    let o = CentreOptics::of(config)?;
    let d = o.group_difference()?;
    let c = units::c::<T>();
    Ok(o.ws * (o.ws * o.ns + o.wi * o.ni) * c * c / (T::lit(2.0) * o.ns * o.ws.powi(3) * d))
}

#[derive(Debug, Clone)]
pub struct ParabolaFit<T> {
    pub b: T,
    /// Phase-matched signal frequency for each transverse wavevector.
    pub samples: Vec<(T, T)>,
    /// RMS of `omega(kappa) - omega(0) - b kappa^2`, rad/s.
    pub residual_rms: T,
    /// `residual_rms / (b kappa_max^2)`.
    pub relative_residual: T,
    /// False when the relative residual exceeds [`PARABOLA_RESIDUAL_WARN`].
    pub paraxial_ok: bool,
}

pub const PARABOLA_RESIDUAL_WARN: f64 = 1e-2;

/// Default transverse-wavevector reach for the numerical parabola fit:
/// 15 mrad of external signal angle.
pub fn default_kappa_max<T: Real>(config: &SpdcConfig<T>) -> T {
    T::lit(0.015) * config.omega_s0() / units::c::<T>()
}

/// Solves `dk(omega_s, kappa) = 0` on `n_points` evenly spaced
/// `kappa in [0, kappa_max]` and least-squares fits `omega - omega(0) = b kappa^2`.
pub fn parabola_b_numeric<T: Real>(
    config: &SpdcConfig<T>,
    kappa_max: T,
    n_points: usize,
) -> Result<ParabolaFit<T>> {
    if n_points < 9 {
        return Err(Error::InsufficientData(format!(
            "parabola fit needs at least 9 transverse samples, got {n_points}"
        )));
    }
    let w0 = config.omega_s0();
    let step = w0 * T::lit(1e-5);
    let mut samples = Vec::with_capacity(n_points);
    for j in 0..n_points {
        let kappa = kappa_max * T::lit(j as f64 / (n_points - 1) as f64);
        let f = |w: T| qpm_mismatch(config, w, kappa).unwrap_or(T::nan());
        let f0 = f(w0);
        let omega = if f0 == T::zero() {
            w0
        } else {
            let slope = (f(w0 + step) - f(w0 - step)) / (step + step);
            let dir = if (f0 > T::zero()) == (slope < T::zero()) { T::one() } else { -T::one() };
            let (a, b) = bracket_outward(f, w0, step * dir, w0 + w0 * T::lit(0.2) * dir)?;
            bisect(f, a, b, T::lit(1e-15))?
        };
        samples.push((kappa, omega));
    }
    let anchor = samples[0].1;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for &(k, w) in &samples {
        let k2 = k * k;
        sxy = sxy + k2 * (w - anchor);
        sxx = sxx + k2 * k2;
    }
    let b = sxy / sxx;
    let ss: T = samples
        .iter()
        .map(|&(k, w)| {
            let r = w - anchor - b * k * k;
            r * r
        })
        .sum();
    let residual_rms = (ss / T::lit(n_points as f64)).sqrt();
    let relative_residual = residual_rms / (b * kappa_max * kappa_max).abs();
    let paraxial_ok = relative_residual <= T::lit(PARABOLA_RESIDUAL_WARN);
    if !paraxial_ok {
        log::warn!(
            "parabolic spectrum approximation breaking down: relative residual {relative_residual} at kappa_max = {kappa_max} rad/m"
        );
    }
    Ok(ParabolaFit { b, samples, residual_rms, relative_residual, paraxial_ok })
}

/// Half-width, in units of the full spectral width, of the window integrated
/// numerically. Tails beyond it are added in closed form where possible.
pub const CORE_HALF_WIDTH: f64 = 3.0;

/// Parabolic sinc^2 model of the down-converted spectrum.
#[derive(Debug, Clone, Copy)]
pub struct SpectralModel<T> {
    pub omega_s0: T,
    pub omega_p: T,
    /// Full width between the first zeros, rad/s.
    pub delta_omega: T,
    /// Parabola coefficient, rad s^-1 m^2.
    pub b: T,
    /// Prefactor making `\int P d omega_s = 1` over the real line.
    pub norm: T,
}

impl<T: Real> SpectralModel<T> {
    pub fn new(omega_s0: T, omega_p: T, delta_omega: T, b: T) -> Result<Self> {
        if !(delta_omega > T::zero()) || !b.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "spectral width {delta_omega} must be positive and b = {b} finite"
            )));
        }
        let mut m = Self { omega_s0, omega_p, delta_omega, b, norm: T::one() };
        m.norm = T::one() / m.unnormalised_area()?;
        Ok(m)
    }

    /// Bandwidth from the phase-matching root search, `b` from the paraxial
    /// closed form.
    pub fn from_config(config: &SpdcConfig<T>) -> Result<Self> {
        Self::new(config.omega_s0(), config.omega_p(), bandwidth(config)?, parabola_b_closed(config)?)
    }

    /// `\int sinc^2(2 pi u / dw) du`: core window by quadrature, the rest in
    /// closed form.
    fn unnormalised_area(&self) -> Result<T> {
        let a = T::TAU() / self.delta_omega;
        let half = T::lit(CORE_HALF_WIDTH) * self.delta_omega;
        let opts = QuadOptions { abs_tol: T::lit(1e-13) * self.delta_omega, ..QuadOptions::default() };
        let core = integrate_chunked(|u| sinc(a * u).powi(2), -half, half, self.delta_omega / T::lit(4.0), opts)?;
        let tails = T::lit(2.0) * sinc2_cos_tail(T::zero(), a * half) / a;
        Ok(core.value + tails)
    }

    pub fn omega_i0(&self) -> T {
        self.omega_p - self.omega_s0
    }

    /// `omega_s0(kappa) = omega_s0 + b kappa^2`.
    pub fn center_at(&self, kappa: T) -> T {
        self.omega_s0 + self.b * kappa * kappa
    }

    /// Coherence length `8 pi c / dw`.
    pub fn coherence_length(&self) -> T {
        T::lit(8.0) * T::PI() * units::c::<T>() / self.delta_omega
    }
}

/// `P(omega_s, kappa_s) = N0 sinc^2[2 pi (omega_s - omega_s0(kappa_s)) / dw]`, 1/(rad/s).
pub fn spectral_density<T: Real>(model: &SpectralModel<T>, omega_s: T, kappa_s: T) -> T {
    let x = T::TAU() * (omega_s - model.center_at(kappa_s)) / model.delta_omega;
    model.norm * sinc(x).powi(2)
}

/// Spectral density from the exact noncollinear mismatch,
/// `N0 sinc^2(dk(omega_s, kappa) L / 2)`, on the same normalisation as `model`.
pub fn phase_matching_density<T: Real>(
    config: &SpdcConfig<T>,
    model: &SpectralModel<T>,
    omega_s: T,
    kappa_s: T,
) -> Result<T> {
    let dk = qpm_mismatch(config, omega_s, kappa_s)?;
    Ok(model.norm * sinc(dk * config.crystal_length / T::lit(2.0)).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::MaterialLibrary;

    fn paper(length_mm: f64) -> SpdcConfig<f64> {
        let ktp = MaterialLibrary::builtin().get("KTP-z").unwrap();
        SpdcConfig::new(525.2e-9, 797e-9, length_mm * 1e-3, 1e-6, ktp).unwrap()
    }

    #[test]
    fn idler_follows_energy_conservation() {
        let cfg = paper(10.0);
        assert!((cfg.idler_wavelength() - 1540.0456e-9).abs() < 1e-13);
        assert_eq!(cfg.omega_i0(), cfg.omega_p() - cfg.omega_s0());
        assert!(energy_mismatch(cfg.pump_wavelength, cfg.signal_wavelength, cfg.idler_wavelength()) < 1e-12);
    }

    #[test]
    fn poling_period_near_quoted_grating() {
        let ktp = MaterialLibrary::builtin().get::<f64>("KTP-z").unwrap();
        let p = solve_poling_period(525.2e-9, 797e-9, 1540e-9, [&ktp, &ktp, &ktp]).unwrap();
        assert!(((p - 9.34e-6) / 9.34e-6).abs() < 0.05, "period {p}");
    }

    #[test]
    fn vacuum_has_no_qpm_solution() {
        let v = DispersionModel::<f64>::vacuum();
        let li = 1.0 / (1.0 / 525.2e-9 - 1.0 / 797e-9);
        assert!(matches!(
            solve_poling_period(525.2e-9, 797e-9, li, [&v, &v, &v]),
            Err(Error::NoQpmSolution { .. })
        ));
    }

    #[test]
    fn inconsistent_wavelengths_rejected() {
        let ktp = MaterialLibrary::builtin().get::<f64>("KTP-z").unwrap();
        assert!(solve_poling_period(525.2e-9, 797e-9, 1600e-9, [&ktp, &ktp, &ktp]).is_err());
    }

    #[test]
    fn design_point_is_phase_matched() {
        let cfg = paper(10.0);
        let kp = cfg.pump_material.wavevector(cfg.pump_wavelength).unwrap();
        let dk = qpm_mismatch(&cfg, cfg.omega_s0(), 0.0).unwrap();
        assert!(dk.abs() < 1e-6 * kp, "dk = {dk}");
    }

    #[test]
    fn evanescent_and_out_of_band_inputs_error() {
        let cfg = paper(10.0);
        assert!(matches!(qpm_mismatch(&cfg, cfg.omega_s0(), 1e8), Err(Error::Evanescent { .. })));
        assert!(qpm_mismatch(&cfg, cfg.omega_p() * 1.01, 0.0).is_err());
        assert!(qpm_mismatch(&cfg, -1.0, 0.0).is_err());
    }

    #[test]
    fn first_zero_at_band_edge() {
        let cfg = paper(10.0);
        let dw = bandwidth(&cfg).unwrap();
        for sign in [1.0, -1.0] {
            let dk = qpm_mismatch(&cfg, cfg.omega_s0() + sign * dw / 2.0, 0.0).unwrap();
            let arg = (dk * cfg.crystal_length / 2.0).abs();
            assert!((arg - std::f64::consts::PI).abs() < 0.01 * std::f64::consts::PI, "arg {arg}");
        }
    }

    #[test]
    fn mismatch_slope_matches_group_velocity_difference() {
        let cfg = paper(10.0);
        let w = cfg.omega_s0();
        let h = w * 1e-7;
        let fd = (qpm_mismatch(&cfg, w + h, 0.0).unwrap() - qpm_mismatch(&cfg, w - h, 0.0).unwrap()) / (2.0 * h);
        let ng_s = cfg.signal_material.group_index(cfg.signal_wavelength).unwrap();
        let ng_i = cfg.idler_material.group_index(cfg.idler_wavelength()).unwrap();
        let analytic = (ng_i - ng_s) / units::SPEED_OF_LIGHT;
        assert!(fd != 0.0);
        assert!(((fd - analytic) / analytic).abs() < 1e-4, "{fd} vs {analytic}");
    }

    #[test]
    fn bandwidth_gives_quoted_coherence_length() {
        let cfg = paper(10.0);
        let dw = bandwidth(&cfg).unwrap();
        let lc = 8.0 * std::f64::consts::PI * units::SPEED_OF_LIGHT / dw;
        assert!(((lc - 1.20e-3) / 1.20e-3).abs() < 0.05, "lc = {lc}");
    }

    #[test]
    fn bandwidth_scales_inversely_with_length() {
        let r = bandwidth(&paper(20.0)).unwrap() / bandwidth(&paper(10.0)).unwrap();
        assert!((0.48..=0.52).contains(&r), "ratio {r}");
    }

    #[test]
    fn bandwidth_matches_first_order_expansion() {
        let cfg = paper(10.0);
        let ng_s = cfg.signal_material.group_index(cfg.signal_wavelength).unwrap();
        let ng_i = cfg.idler_material.group_index(cfg.idler_wavelength()).unwrap();
        let first_order = 4.0 * std::f64::consts::PI * units::SPEED_OF_LIGHT / (cfg.crystal_length * (ng_s - ng_i).abs());
        let dw = bandwidth(&cfg).unwrap();
        assert!(((dw - first_order) / first_order).abs() < 0.1);
    }

    #[test]
    fn closed_b_matches_numeric() {
        let cfg = paper(10.0);
        let closed = parabola_b_closed(&cfg).unwrap();
        let fit = parabola_b_numeric(&cfg, default_kappa_max(&cfg), 13).unwrap();
        assert!(closed > 0.0 && closed.is_finite());
        assert!(((closed - fit.b) / fit.b).abs() < 1e-2, "closed {closed} numeric {}", fit.b);
        assert!(fit.paraxial_ok);
        // kappa = 0 reproduces the collinear centre
        assert!(((fit.samples[0].1 - cfg.omega_s0()) / cfg.omega_s0()).abs() < 1e-9);
    }

    #[test]
    fn published_b_differs_by_index_ratio() {
        let cfg = paper(10.0);
        let closed = parabola_b_closed(&cfg).unwrap();
        let published = parabola_b_published(&cfg).unwrap();
        let ns = cfg.signal_material.refractive_index(cfg.signal_wavelength).unwrap();
        let ks = cfg.signal_material.wavevector(cfg.signal_wavelength).unwrap();
        let ki = cfg.idler_material.wavevector(cfg.idler_wavelength()).unwrap();
        assert!((published / closed - ns * ki / ks).abs() < 1e-12);
    }

    #[test]
    fn parabola_residual_grows_with_reach() {
        let cfg = paper(10.0);
        let k0 = default_kappa_max(&cfg);
        let r: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|s| parabola_b_numeric(&cfg, k0 * s, 13).unwrap().residual_rms)
            .collect();
        assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");
        assert!(parabola_b_numeric(&cfg, k0, 5).is_err());
    }

    #[test]
    fn degenerate_group_indices_are_singular() {
        let ktp = MaterialLibrary::builtin().get::<f64>("KTP-z").unwrap();
        let cfg = SpdcConfig::new(0.8e-6, 1.6e-6, 1e-2, 1e-6, ktp).unwrap();
        assert!(matches!(parabola_b_closed(&cfg), Err(Error::Singular(_))));
        assert!(matches!(parabola_b_published(&cfg), Err(Error::Singular(_))));
    }

    #[test]
    fn spectral_density_shape() {
        let cfg = paper(10.0);
        let m = SpectralModel::from_config(&cfg).unwrap();
        let kappa = 3e4;
        let peak = spectral_density(&m, m.center_at(kappa), kappa);
        for off in [-0.3, -0.01, 0.01, 0.2] {
            assert!(spectral_density(&m, m.center_at(kappa) + off * m.delta_omega, kappa) < peak);
        }
        for sign in [1.0, -1.0] {
            let v = spectral_density(&m, m.omega_s0 + sign * m.delta_omega / 2.0, 0.0);
            assert!(v < 1e-20 * peak);
        }
        assert_eq!(spectral_density(&m, m.omega_s0, kappa), spectral_density(&m, m.omega_s0, -kappa));
        // literal 1/dw prefactor would integrate to one half
        assert!((m.norm * m.delta_omega - 2.0).abs() < 1e-9, "N0 dw = {}", m.norm * m.delta_omega);
    }

    #[test]
    fn spectral_density_integrates_to_one() {
        // Brute-force composite Simpson over +-2000 dw, independent of the
        // tail formula used for the normalisation. Truncation beyond that is
        // 1/(2 pi^2 2000) ~ 2.5e-5.
        let m = SpectralModel::from_config(&paper(10.0)).unwrap();
        let half = 2000.0 * m.delta_omega;
        let n = 4_000_000usize;
        let h = 2.0 * half / n as f64;
        let f = |u: f64| spectral_density(&m, m.omega_s0 + u, 0.0);
        let mut s = f(-half) + f(half);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(-half + h * i as f64);
        }
        let total = s * h / 3.0;
        assert!((total - 1.0).abs() < 1e-3, "integral {total}");
    }

    #[test]
    fn exact_ridge_moves_to_shorter_wavelength_off_axis() {
        let cfg = paper(10.0);
        let m = SpectralModel::from_config(&cfg).unwrap();
        let mut last = 0.0;
        for kappa in [0.0, 4e4, 8e4, 1.2e5] {
            // locate the maximum of the exact density along omega
            let mut best = (0.0, f64::MIN);
            for i in -400..=4000 {
                let w = m.omega_s0 + i as f64 * m.delta_omega / 200.0;
                let p = phase_matching_density(&cfg, &m, w, kappa).unwrap();
                if p > best.1 {
                    best = (w, p);
                }
            }
            let lambda = units::wavelength_from_omega(best.0);
            if kappa > 0.0 {
                assert!(lambda < last, "ridge wavelength {lambda} not decreasing");
            }
            last = lambda;
        }
    }
}
