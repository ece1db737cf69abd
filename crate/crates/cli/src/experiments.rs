//! The measurement pipelines, each a forward simulation followed by the
//! matching estimator.

use qni_core::analysis::{
    extract_ring_extrema_with, fit_fringe_profile, fit_lambda_eq, fit_quadratic_coefficient, fit_sine_scan,
    fit_triangle_envelope, measure_refractive_index, measure_wedge_angle, models::Linear, nls_fit,
    profile_visibility, DataPoint, ExtremaOptions, Measurement, NlsOptions,
};
use qni_core::interferometer::{coherence_length, mean_count_integral};
use qni_core::phasematch::{phase_matching_density, SpectralModel};
use qni_core::synth::{add_shot_noise, radial_profile, radial_profile_to, render_background, render_pattern, RadialBin};
use qni_core::units::{arcmin, mm, nm, omega_from_wavelength, to_arcmin, um, wavelength_from_omega, SPEED_OF_LIGHT};
use qni_core::{FilterModel, FitReport, FringePattern, GridSpec, PhaseMask, RingExtremum, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::config::Config;
use crate::error::CliError;

/// Renders `scenario` and, when noise is on, replaces it with a Poisson
/// frame in detector counts. Noiseless frames are scaled to the same units.
pub fn acquire(cfg: &Config, scenario: &Scenario, grid: &GridSpec, seed: u64) -> Result<FringePattern, CliError> {
    let clean = render_pattern(scenario, grid)?;
    let exposure = cfg.exposure(cfg.noise.peak_counts);
    Ok(if cfg.noise.enabled {
        add_shot_noise(&clean, exposure, seed)?
    } else {
        FringePattern { exposure_scale: exposure, ..clean.scaled(exposure) }
    })
}

/// Divides a frame by the out-of-coherence background of the same scenario,
/// after removing dark counts from both. Pixels with no background are set
/// to 1.
pub fn flat_field(frame: &FringePattern, background: &FringePattern, dark: f64) -> FringePattern {
    let floor = background.max_value() * 1e-12;
    let grid = frame
        .grid
        .iter()
        .zip(&background.grid)
        .map(|(&v, &b)| if b - dark > floor { (v - dark) / (b - dark) } else { 1.0 })
        .collect();
    FringePattern { grid, ..frame.clone() }
}

fn extrema_options(cfg: &Config) -> ExtremaOptions<f64> {
    ExtremaOptions { dark_center_order: cfg.fit.dark_center_order, ..ExtremaOptions::default() }
}

pub struct CrystalRun {
    pub d_mm: f64,
    pub pattern: FringePattern,
    pub profile: Vec<RadialBin<f64>>,
    pub extrema: Vec<RingExtremum>,
    /// `a` in inverse square metres.
    pub fit: FitReport,
}

pub struct ScanCrystal {
    pub runs: Vec<CrystalRun>,
    pub lambda_fit: FitReport,
    /// `a = slope d + intercept`.
    pub line: FitReport,
    pub lambda_eq_predicted: f64,
}

impl ScanCrystal {
    pub fn lambda_eq(&self) -> f64 {
        self.lambda_fit.params[0]
    }
}

/// Equal-inclination rings for each crystal shift, their quadratic
/// coefficients and the equivalent wavelength from `a` against `d`.
pub fn scan_crystal(cfg: &Config) -> Result<ScanCrystal, CliError> {
    let base = cfg.scenario()?;
    let grid = cfg.grid();
    let mut runs = Vec::new();
    for (i, &d) in cfg.scan_crystal.d_mm.iter().enumerate() {
        let mut sc = base.clone();
        sc.crystal_shift = mm(d);
        let pattern = acquire(cfg, &sc, &grid, cfg.noise.seed.wrapping_add(i as u64))?;
        let profile = radial_profile(&pattern, cfg.fit.ring_bins)?;
        let extrema = extract_ring_extrema_with(&profile, &extrema_options(cfg))?;
        let fit = fit_quadratic_coefficient(&extrema)?;
        log::info!("d = {d} mm: {} extrema, a = {:.5} mm^-2", extrema.len(), fit.params[0] * 1e-6);
        runs.push(CrystalRun { d_mm: d, pattern, profile, extrema, fit });
    }
    let pairs: Vec<(f64, f64)> = runs.iter().map(|r| (mm(r.d_mm), r.fit.params[0])).collect();
    let lambda_fit = fit_lambda_eq(&pairs, base.f2)?;
    let line = if pairs.len() >= 2 {
        let data: Vec<_> = pairs.iter().map(|&(d, a)| DataPoint::new(d, a, 1.0)).collect();
        let start = [pairs[0].1 / pairs[0].0, 0.0];
        let opts = NlsOptions { absolute_sigma: false, ..NlsOptions::default() };
        nls_fit(&Linear { slope: "slope", offset: "intercept" }, &data, &start, None, &opts)?
    } else {
        lambda_fit.clone()
    };
    Ok(ScanCrystal { runs, lambda_fit, line, lambda_eq_predicted: base.spdc.equivalent_wavelength() })
}

pub struct OpdSeries {
    /// Arm difference of each frame, m.
    pub positions: Vec<f64>,
    pub visibility: Vec<f64>,
    pub sigma: Vec<f64>,
    pub fit: FitReport,
}

pub struct ScanOpd {
    pub reference: OpdSeries,
    pub sample: OpdSeries,
    /// Envelope shift over two, m.
    pub d_b: Measurement<f64>,
    pub index: Measurement<f64>,
    pub index_predicted: f64,
    pub coherence_length_predicted: f64,
    pub thickness: f64,
}

fn opd_series(cfg: &Config, base: &Scenario, grid: &GridSpec, stream: u64) -> Result<OpdSeries, CliError> {
    let s = &cfg.scan_opd;
    let exposure = cfg.exposure(cfg.noise.peak_counts);
    let dark = base.dark_counts * exposure;
    let background = render_background(base, grid)?.scaled(exposure);
    let a = base.crystal_shift / (base.f2 * base.f2 * base.spdc.equivalent_wavelength());
    let reach = (s.visibility_orders / a).sqrt();
    let bins = ((reach / grid.pixel_pitch) / 2.0).round().max(16.0) as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise.seed);
    rng.set_stream(stream);
    let jitter = (s.visibility_noise > 0.0).then(|| Normal::new(0.0, s.visibility_noise).expect("finite sigma"));
    let sigma = s.visibility_noise.max(1e-3);

    let step = (s.stop_mm - s.start_mm) / (s.points - 1) as f64;
    let mut series = OpdSeries { positions: Vec::new(), visibility: Vec::new(), sigma: Vec::new(), fit: empty_fit() };
    for i in 0..s.points {
        let mut sc = base.clone();
        sc.delta_l = mm(s.start_mm + step * i as f64);
        let seed = cfg.noise.seed.wrapping_add(1000 * stream + i as u64);
        let frame = acquire(cfg, &sc, grid, seed)?;
        let normalised = flat_field(&frame, &background, dark);
        let profile = radial_profile_to(&normalised, bins, reach)?;
        let mut v = profile_visibility(&profile, reach, 0.0)?;
        if let Some(n) = &jitter {
            v += n.sample(&mut rng);
        }
        series.positions.push(sc.delta_l);
        series.visibility.push(v);
        series.sigma.push(sigma);
    }
    let data: Vec<_> = (0..s.points)
        .map(|i| DataPoint::new(series.positions[i], series.visibility[i], series.sigma[i]))
        .collect();
    series.fit = fit_triangle_envelope(&data)?;
    Ok(series)
}

fn empty_fit() -> FitReport {
    FitReport {
        names: Vec::new(),
        params: Vec::new(),
        stderr: Vec::new(),
        covariance: qni_core::numeric::linalg::Matrix::zeros(0),
        residual_rms: 0.0,
        chi2: 0.0,
        dof: 0,
        n_iter: 0,
        converged: false,
        gradient: 0.0,
        chi2_history: Vec::new(),
    }
}

/// Visibility against arm difference with and without a uniform sample on
/// M2. Each frame is flat-fielded by the incoherent background and its
/// visibility taken over the first `visibility_orders` rings. The envelope
/// shift gives `2 (n - 1) h`.
pub fn scan_opd(cfg: &Config) -> Result<ScanOpd, CliError> {
    let s = &cfg.scan_opd;
    let mut base = cfg.scenario()?;
    base.crystal_shift = mm(s.crystal_shift_mm);
    base.phase_mask = None;
    let grid = GridSpec::centered(s.grid_width, s.grid_height, um(s.pixel_pitch_um));
    let idler = base.spdc.idler_wavelength();
    let index = s.sample_index.resolve(idler)?;
    let thickness = um(s.sample_thickness_um);

    let reference = opd_series(cfg, &base, &grid, 1)?;
    let mut with_sample = base.clone();
    with_sample.phase_mask = Some(PhaseMask::uniform(thickness, index));
    with_sample.allow_combined = true;
    let sample = opd_series(cfg, &with_sample, &grid, 2)?;

    let shift = reference.fit.params[0] - sample.fit.params[0];
    let shift_err = reference.fit.stderr[0].hypot(sample.fit.stderr[0]);
    let d_b = Measurement { value: shift / 2.0, stderr: shift_err / 2.0 };
    let measured = measure_refractive_index(d_b.value, d_b.stderr, thickness, 0.0)?;
    Ok(ScanOpd {
        reference,
        sample,
        d_b,
        index: measured,
        index_predicted: index,
        coherence_length_predicted: coherence_length(&base.spectral),
        thickness,
    })
}

pub struct ScanPzt {
    /// Arm difference, nm.
    pub positions_nm: Vec<f64>,
    pub counts: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Period in nm.
    pub fit: FitReport,
    pub period_predicted_nm: f64,
}

/// On-axis counts while the mirror steps through `periods` idler
/// wavelengths of path difference, fitted with a sine.
pub fn scan_pzt(cfg: &Config) -> Result<ScanPzt, CliError> {
    let s = &cfg.scan_pzt;
    let base = cfg.scenario()?;
    let li = base.spdc.idler_wavelength();
    let exposure = cfg.exposure(s.peak_counts);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise.seed);
    let step = s.periods * li / (s.points - 1) as f64;
    let mut out = ScanPzt {
        positions_nm: Vec::new(),
        counts: Vec::new(),
        sigma: Vec::new(),
        fit: empty_fit(),
        period_predicted_nm: li * 1e9,
    };
    for i in 0..s.points {
        let mut sc = base.clone();
        sc.delta_l = nm(s.start_nm) + step * i as f64;
        let mean = mean_count_integral(&sc, [0.0, 0.0])? * exposure;
        let counts = if cfg.noise.enabled && mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(&mut rng)
        } else {
            mean
        };
        out.positions_nm.push(sc.delta_l * 1e9);
        out.counts.push(counts);
        out.sigma.push(counts.max(1.0).sqrt());
    }
    let scan: Vec<(f64, f64)> = out.positions_nm.iter().copied().zip(out.counts.iter().copied()).collect();
    out.fit = fit_sine_scan(&scan)?;
    Ok(out)
}

pub struct Wedge {
    pub pattern: FringePattern,
    pub normalised: FringePattern,
    /// Sine fit along x of the flat-fielded central band, positions in m.
    pub fit: FitReport,
    /// Bright-to-dark spacing on the detector, m.
    pub spacing: f64,
    pub spacing_predicted: f64,
    pub angle: f64,
    pub angle_true: f64,
    pub index: f64,
}

/// Straight fringes from a wedged plate on M2. The plate's mean thickness is
/// compensated by the arm difference so the fringes sit inside the
/// coherence length.
pub fn wedge(cfg: &Config) -> Result<Wedge, CliError> {
    let w = &cfg.wedge;
    let mut sc = cfg.scenario()?;
    let (li, ls) = (sc.spdc.idler_wavelength(), sc.spdc.signal_wavelength);
    let index = w.index.resolve(li)?;
    let angle_true = arcmin(w.angle_arcmin);
    sc.crystal_shift = 0.0;
    sc.phase_mask = Some(PhaseMask::wedge(angle_true, um(w.base_um), index));
    sc.delta_l = -2.0 * (index - 1.0) * um(w.base_um);
    let grid = cfg.grid();
    let pattern = acquire(cfg, &sc, &grid, cfg.noise.seed)?;

    let exposure = cfg.exposure(cfg.noise.peak_counts);
    let mut plain = sc.clone();
    plain.phase_mask = None;
    let background = render_background(&plain, &grid)?.scaled(exposure);
    let normalised = flat_field(&pattern, &background, sc.dark_counts * exposure);
    let fit = fit_fringe_profile(&normalised, cfg.fit.band_rows.max(1))?;
    let spacing = fit.params[0] / 2.0;
    let angle = measure_wedge_angle(spacing, index, li, sc.f1, sc.f2, ls)?;
    let on_mirror = li / (4.0 * (index - 1.0) * angle_true.tan());
    Ok(Wedge {
        pattern,
        normalised,
        fit,
        spacing,
        spacing_predicted: on_mirror * sc.f2 * ls / (sc.f1 * li),
        angle,
        angle_true,
        index,
    })
}

impl Wedge {
    pub fn angle_arcmin(&self) -> f64 {
        to_arcmin(self.angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsdSeries {
    Filtered,
    Open,
    ShortFiltered,
}

impl AsdSeries {
    pub fn label(self) -> &'static str {
        match self {
            AsdSeries::Filtered => "filter_on",
            AsdSeries::Open => "filter_off",
            AsdSeries::ShortFiltered => "short_filter_on",
        }
    }
}

pub struct AsdFrame {
    pub series: AsdSeries,
    pub crystal_length: f64,
    pub filtered: bool,
    pub delta_l: f64,
    pub pattern: FringePattern,
    pub profile: Vec<RadialBin<f64>>,
    pub extrema: usize,
    /// Visibility of the flat-fielded profile where the background exceeds
    /// 5% of its peak.
    pub fringe_visibility: f64,
}

pub struct Asd {
    pub frames: Vec<AsdFrame>,
}

impl Asd {
    pub fn counts(&self, series: AsdSeries) -> Vec<usize> {
        self.frames.iter().filter(|f| f.series == series).map(|f| f.extrema).collect()
    }

    pub fn visibilities(&self, series: AsdSeries) -> Vec<f64> {
        self.frames.iter().filter(|f| f.series == series).map(|f| f.fringe_visibility).collect()
    }
}

/// Angular-spectrum rings over the configured arm differences: through the
/// band-pass filter, without it, and through the filter with a short crystal.
/// Profiles reach the image corners.
pub fn asd(cfg: &Config) -> Result<Asd, CliError> {
    let filter = FilterModel {
        center: nm(cfg.filter.center_nm),
        width: nm(cfg.filter.width_nm),
        order: cfg.filter.order,
    };
    let grid = cfg.grid();
    let reach = {
        let c = grid.center;
        let far_x = c[0].max(grid.width as f64 - 1.0 - c[0]);
        let far_y = c[1].max(grid.height as f64 - 1.0 - c[1]);
        far_x.hypot(far_y) * grid.pixel_pitch
    };
    let exposure = cfg.exposure(cfg.noise.peak_counts);
    let mut frames = Vec::new();
    let plans = [
        (AsdSeries::Filtered, cfg.spdc.crystal_length_mm, true),
        (AsdSeries::Open, cfg.spdc.crystal_length_mm, false),
        (AsdSeries::ShortFiltered, cfg.asd.short_crystal_mm, true),
    ];
    for (k, (series, length_mm, filtered)) in plans.into_iter().enumerate() {
        let mut base = cfg.scenario_for(cfg.spdc_config_with_length(length_mm)?)?;
        base.crystal_shift = 0.0;
        base.phase_mask = None;
        base.filter = filtered.then_some(filter);
        let dark = base.dark_counts * exposure;
        let background = render_background(&base, &grid)?.scaled(exposure);
        let bg_profile = radial_profile_to(&background, cfg.asd.bins, reach)?;
        let bg_peak = bg_profile.iter().map(|b| b.mean - dark).fold(0.0, f64::max);
        for (i, &dl) in cfg.asd.delta_l_um.iter().enumerate() {
            let mut sc = base.clone();
            sc.delta_l = um(dl);
            let seed = cfg.noise.seed.wrapping_add(100 * k as u64 + i as u64);
            let pattern = acquire(cfg, &sc, &grid, seed)?;
            let profile = radial_profile_to(&pattern, cfg.asd.bins, reach)?;
            let extrema = extract_ring_extrema_with(&profile, &extrema_options(cfg))?.len();
            let normalised: Vec<RadialBin<f64>> = profile
                .iter()
                .zip(&bg_profile)
                .filter(|(_, b)| b.mean - dark >= 0.05 * bg_peak)
                .map(|(p, b)| RadialBin { mean: (p.mean - dark) / (b.mean - dark), ..*p })
                .collect();
            let fringe_visibility = profile_visibility(&normalised, f64::INFINITY, 0.0)?;
            log::info!("{} dl = {dl} um: {extrema} extrema, visibility {fringe_visibility:.4}", series.label());
            frames.push(AsdFrame {
                series,
                crystal_length: mm(length_mm),
                filtered,
                delta_l: um(dl),
                pattern,
                profile,
                extrema,
                fringe_visibility,
            });
        }
    }
    Ok(Asd { frames })
}

pub struct SpectrumPoint {
    pub lambda: f64,
    pub theta: f64,
    pub density: f64,
}

/// Frequency-angular emission density from the exact noncollinear mismatch,
/// over signal wavelength and external angle.
pub fn spectrum(cfg: &Config) -> Result<Vec<SpectrumPoint>, CliError> {
    let s = &cfg.spectrum;
    let spdc = cfg.spdc_config()?;
    let model = SpectralModel::from_config(&spdc)?;
    let l0 = spdc.signal_wavelength;
    let span = nm(s.lambda_span_nm);
    let mut out = Vec::with_capacity(s.lambda_points * s.theta_points);
    for i in 0..s.lambda_points {
        let lambda = l0 - span / 2.0 + span * i as f64 / (s.lambda_points - 1) as f64;
        let omega = omega_from_wavelength(lambda);
        for j in 0..s.theta_points {
            let theta = -s.theta_max_rad + 2.0 * s.theta_max_rad * j as f64 / (s.theta_points - 1) as f64;
            let kappa = omega / SPEED_OF_LIGHT * theta.sin();
            let density = phase_matching_density(&spdc, &model, omega, kappa).unwrap_or(0.0);
            out.push(SpectrumPoint { lambda: wavelength_from_omega(omega), theta, density });
        }
    }
    Ok(out)
}
