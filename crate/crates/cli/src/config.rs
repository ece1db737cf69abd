//! Run configuration: a TOML file with one table per concern.

use std::path::Path;

use qni_core::dispersion::MaterialLibrary;
use qni_core::interferometer::Thickness;
use qni_core::phasematch::{energy_mismatch, ENERGY_TOLERANCE};
use qni_core::units::{arcmin, mm, nm, um};
use qni_core::{FilterModel, GridSpec, PhaseMask, Scenario, SpdcConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const PAPER_DEFAULT: &str = include_str!("../configs/paper-default.toml");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub spdc: SpdcSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub scan_crystal: ScanCrystalSection,
    #[serde(default)]
    pub scan_opd: ScanOpdSection,
    #[serde(default)]
    pub scan_pzt: ScanPztSection,
    #[serde(default)]
    pub wedge: WedgeSection,
    #[serde(default)]
    pub asd: AsdSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdcSection {
    pub pump_nm: f64,
    pub signal_nm: f64,
    /// Checked against energy conservation when present, never used directly.
    pub idler_nm: Option<f64>,
    pub crystal: String,
    pub crystal_length_mm: f64,
    pub pair_gen_scale: f64,
    /// Overrides the solved poling period.
    pub poling_period_um: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub f1_mm: f64,
    pub f2_mm: f64,
    pub delta_l_um: f64,
    pub crystal_shift_mm: f64,
    pub phi1_rad: f64,
    pub l_prime_um: f64,
    pub allow_combined: bool,
    pub mask: Option<MaskSection>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            f1_mm: 75.0,
            f2_mm: 200.0,
            delta_l_um: 0.0,
            crystal_shift_mm: 0.0,
            phi1_rad: 0.0,
            l_prime_um: 0.0,
            allow_combined: false,
            mask: None,
        }
    }
}

/// A refractive index given directly or as a material evaluated at the idler.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexSpec {
    Value(f64),
    Material(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MaskSection {
    Uniform { thickness_um: f64, index: IndexSpec },
    Wedge { angle_arcmin: f64, base_um: f64, index: IndexSpec },
    Bars { period_um: f64, height_um: f64, duty: f64, index: IndexSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub enabled: bool,
    pub center_nm: f64,
    pub width_nm: f64,
    pub order: u32,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self { enabled: true, center_nm: 800.0, width_nm: 5.6, order: 6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch_um: f64,
    /// Optical axis in pixel coordinates `[col, row]`; the grid centre if absent.
    pub center_px: Option<[f64; 2]>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { width: 512, height: 512, pixel_pitch_um: 13.0, center_px: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub enabled: bool,
    /// Expected counts at a fully constructive pixel; sets the exposure.
    pub peak_counts: f64,
    /// Mean dark counts per pixel per frame.
    pub dark_counts: f64,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { enabled: true, peak_counts: 5000.0, dark_counts: 0.0, seed: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub ring_bins: usize,
    pub dark_center_order: f64,
    /// Rows averaged for the straight-fringe profile.
    pub band_rows: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { ring_bins: 200, dark_center_order: 0.5, band_rows: 9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanCrystalSection {
    pub d_mm: Vec<f64>,
}

impl Default for ScanCrystalSection {
    fn default() -> Self {
        Self { d_mm: vec![3.0, 4.0, 5.0, 6.0, 7.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOpdSection {
    pub start_mm: f64,
    pub stop_mm: f64,
    pub points: usize,
    pub crystal_shift_mm: f64,
    pub sample_thickness_um: f64,
    pub sample_index: IndexSpec,
    pub grid_width: usize,
    pub grid_height: usize,
    pub pixel_pitch_um: f64,
    /// Standard deviation of the additive noise on each measured visibility.
    pub visibility_noise: f64,
    /// Ring orders covered by the visibility measurement.
    pub visibility_orders: f64,
}

impl Default for ScanOpdSection {
    fn default() -> Self {
        Self {
            start_mm: -1.4,
            stop_mm: 0.8,
            points: 45,
            crystal_shift_mm: 6.0,
            sample_thickness_um: 500.0,
            sample_index: IndexSpec::Material("BBO-ordinary".into()),
            grid_width: 128,
            grid_height: 128,
            pixel_pitch_um: 26.0,
            visibility_noise: 0.05,
            visibility_orders: 1.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanPztSection {
    pub start_nm: f64,
    pub periods: f64,
    pub points: usize,
    pub peak_counts: f64,
}

impl Default for ScanPztSection {
    fn default() -> Self {
        Self { start_nm: 0.0, periods: 3.0, points: 60, peak_counts: 2500.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WedgeSection {
    pub angle_arcmin: f64,
    /// Thickness on the axis; its path is compensated by the arm difference.
    pub base_um: f64,
    pub index: IndexSpec,
}

impl Default for WedgeSection {
    fn default() -> Self {
        Self { angle_arcmin: 1.3, base_um: 100.0, index: IndexSpec::Value(1.647) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsdSection {
    pub delta_l_um: Vec<f64>,
    pub short_crystal_mm: f64,
    pub bins: usize,
}

impl Default for AsdSection {
    fn default() -> Self {
        Self { delta_l_um: vec![0.0, 80.0, 160.0, 240.0, 320.0], short_crystal_mm: 2.0, bins: 280 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub lambda_span_nm: f64,
    pub lambda_points: usize,
    pub theta_max_rad: f64,
    pub theta_points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { lambda_span_nm: 30.0, lambda_points: 241, theta_max_rad: 0.03, theta_points: 121 }
    }
}

impl Config {
    pub fn paper_default() -> Self {
        Self::from_toml_str(PAPER_DEFAULT).expect("shipped default config parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::paper_default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml_str(&text).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every value that the core would reject later, reporting all
    /// offending keys at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad = Vec::new();
        let mut positive = |key: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{key} = {v} must be positive"));
            }
        };
        positive("spdc.pump_nm", self.spdc.pump_nm);
        positive("spdc.signal_nm", self.spdc.signal_nm);
        positive("spdc.crystal_length_mm", self.spdc.crystal_length_mm);
        positive("scenario.f1_mm", self.scenario.f1_mm);
        positive("scenario.f2_mm", self.scenario.f2_mm);
        positive("grid.pixel_pitch_um", self.grid.pixel_pitch_um);
        positive("noise.peak_counts", self.noise.peak_counts);
        positive("scan_opd.pixel_pitch_um", self.scan_opd.pixel_pitch_um);
        positive("scan_opd.sample_thickness_um", self.scan_opd.sample_thickness_um);
        positive("scan_opd.visibility_orders", self.scan_opd.visibility_orders);
        positive("scan_pzt.periods", self.scan_pzt.periods);
        positive("scan_pzt.peak_counts", self.scan_pzt.peak_counts);
        positive("asd.short_crystal_mm", self.asd.short_crystal_mm);
        positive("spectrum.lambda_span_nm", self.spectrum.lambda_span_nm);
        positive("spectrum.theta_max_rad", self.spectrum.theta_max_rad);
        if let Some(p) = self.spdc.poling_period_um {
            positive("spdc.poling_period_um", p);
        }
        if self.filter.enabled {
            positive("filter.width_nm", self.filter.width_nm);
            positive("filter.center_nm", self.filter.center_nm);
        }
        if !(self.spdc.signal_nm > self.spdc.pump_nm) {
            bad.push("spdc.signal_nm must exceed spdc.pump_nm".into());
        }
        if !(self.spdc.pair_gen_scale > 0.0 && self.spdc.pair_gen_scale < 1.0) {
            bad.push(format!("spdc.pair_gen_scale = {} must lie in (0, 1)", self.spdc.pair_gen_scale));
        }
        if let Some(li) = self.spdc.idler_nm {
            let m = energy_mismatch(self.spdc.pump_nm, self.spdc.signal_nm, li);
            if !(m <= ENERGY_TOLERANCE) {
                bad.push(format!("spdc.idler_nm = {li} violates energy conservation (relative mismatch {m:.2e})"));
            }
        }
        if MaterialLibrary::builtin().get::<f64>(&self.spdc.crystal).is_err() {
            bad.push(format!("spdc.crystal = {:?} is not a known material", self.spdc.crystal));
        }
        if self.filter.enabled && (self.filter.order == 0 || !self.filter.order.is_multiple_of(2)) {
            bad.push(format!("filter.order = {} must be even and positive", self.filter.order));
        }
        if self.noise.dark_counts < 0.0 {
            bad.push("noise.dark_counts must be non-negative".into());
        }
        for (key, w, h) in [
            ("grid", self.grid.width, self.grid.height),
            ("scan_opd.grid", self.scan_opd.grid_width, self.scan_opd.grid_height),
        ] {
            if w < 8 || h < 8 {
                bad.push(format!("{key} {w}x{h} must be at least 8x8"));
            }
        }
        if self.fit.ring_bins < 16 {
            bad.push("fit.ring_bins must be at least 16".into());
        }
        if self.asd.bins < 16 {
            bad.push("asd.bins must be at least 16".into());
        }
        if self.scan_opd.points < 5 || !(self.scan_opd.stop_mm > self.scan_opd.start_mm) {
            bad.push("scan_opd needs start_mm < stop_mm and at least 5 points".into());
        }
        if self.scan_pzt.points < 8 {
            bad.push("scan_pzt.points must be at least 8".into());
        }
        if self.scan_opd.visibility_noise < 0.0 {
            bad.push("scan_opd.visibility_noise must be non-negative".into());
        }
        if self.spectrum.lambda_points < 2 || self.spectrum.theta_points < 2 {
            bad.push("spectrum needs at least 2 points per axis".into());
        }
        if self.scan_crystal.d_mm.is_empty() {
            bad.push("scan_crystal.d_mm is empty".into());
        }
        if self.asd.delta_l_um.is_empty() {
            bad.push("asd.delta_l_um is empty".into());
        }
        for (key, spec) in [
            ("scan_opd.sample_index", Some(&self.scan_opd.sample_index)),
            ("wedge.index", Some(&self.wedge.index)),
            ("scenario.mask.index", self.scenario.mask.as_ref().map(MaskSection::index)),
        ] {
            if let Some(IndexSpec::Material(name)) = spec {
                if MaterialLibrary::builtin().get::<f64>(name).is_err() {
                    bad.push(format!("{key} = {name:?} is not a known material"));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(bad.join("; ")))
        }
    }

    /// Source model with the poling period solved (or overridden).
    pub fn spdc_config(&self) -> Result<SpdcConfig, CliError> {
        self.spdc_config_with_length(self.spdc.crystal_length_mm)
    }

    pub fn spdc_config_with_length(&self, length_mm: f64) -> Result<SpdcConfig, CliError> {
        let crystal = MaterialLibrary::builtin().get(&self.spdc.crystal)?;
        let mut cfg = SpdcConfig::new(
            nm(self.spdc.pump_nm),
            nm(self.spdc.signal_nm),
            mm(length_mm),
            self.spdc.pair_gen_scale,
            crystal,
        )?;
        if let Some(p) = self.spdc.poling_period_um {
            cfg.poling_period = um(p);
        }
        Ok(cfg)
    }

    pub fn filter_model(&self) -> Option<FilterModel> {
        self.filter.enabled.then(|| FilterModel {
            center: nm(self.filter.center_nm),
            width: nm(self.filter.width_nm),
            order: self.filter.order,
        })
    }

    /// Ratio of detector counts to mean photon number.
    pub fn exposure(&self, peak_counts: f64) -> f64 {
        peak_counts / (4.0 * self.spdc.pair_gen_scale)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        self.scenario_for(self.spdc_config()?)
    }

    pub fn scenario_for(&self, spdc: SpdcConfig) -> Result<Scenario, CliError> {
        let idler = spdc.idler_wavelength();
        let s = &self.scenario;
        let mut sc = Scenario::from_config(spdc)?;
        sc.f1 = mm(s.f1_mm);
        sc.f2 = mm(s.f2_mm);
        sc.delta_l = um(s.delta_l_um);
        sc.crystal_shift = mm(s.crystal_shift_mm);
        sc.phi1 = s.phi1_rad;
        sc.l_prime = um(s.l_prime_um);
        sc.allow_combined = s.allow_combined;
        sc.filter = self.filter_model();
        sc.dark_counts = self.noise.dark_counts / self.exposure(self.noise.peak_counts);
        sc.phase_mask = s.mask.as_ref().map(|m| m.build(idler)).transpose()?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn grid(&self) -> GridSpec {
        let g = &self.grid;
        let mut spec = GridSpec::centered(g.width, g.height, um(g.pixel_pitch_um));
        if let Some(c) = g.center_px {
            spec.center = c;
        }
        spec
    }
}

impl IndexSpec {
    pub fn resolve(&self, lambda: f64) -> Result<f64, CliError> {
        match self {
            IndexSpec::Value(n) => Ok(*n),
            IndexSpec::Material(name) => Ok(MaterialLibrary::builtin().get::<f64>(name)?.refractive_index(lambda)?),
        }
    }
}

impl MaskSection {
    fn index(&self) -> &IndexSpec {
        match self {
            MaskSection::Uniform { index, .. } | MaskSection::Wedge { index, .. } | MaskSection::Bars { index, .. } => {
                index
            }
        }
    }

    pub fn build(&self, idler: f64) -> Result<PhaseMask, CliError> {
        let index = self.index().resolve(idler)?;
        let thickness = match *self {
            MaskSection::Uniform { thickness_um, .. } => Thickness::Uniform(um(thickness_um)),
            MaskSection::Wedge { angle_arcmin, base_um, .. } => {
                Thickness::Wedge { angle: arcmin(angle_arcmin), h0: um(base_um) }
            }
            MaskSection::Bars { period_um, height_um, duty, .. } => {
                Thickness::Bars { period: um(period_um), height: um(height_um), duty }
            }
        };
        Ok(PhaseMask { thickness, index })
    }
}
