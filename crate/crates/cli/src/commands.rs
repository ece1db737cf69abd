//! Argument parsing and the subcommand runners.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qni_core::interferometer::{effective_opd, visibility_envelope};
use qni_core::phasematch::{bandwidth, default_kappa_max, parabola_b_closed, parabola_b_numeric, parabola_b_published};
use qni_core::synth::radial_profile;
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;
use crate::experiments::{self, AsdSeries};
use crate::output::{FitRecord, ManifestInputs, OutputDir};
use crate::verify;

#[derive(Debug, Parser)]
#[command(name = "qni", version, about = "Simulate and analyse a nonlinear interferometer with undetected photons")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML configuration; the shipped default when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "qni-out")]
    pub out: PathBuf,

    /// Noise seed, overriding `noise.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Camera size, e.g. 256x256.
    #[arg(long, global = true, value_name = "WxH", value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,

    /// Noiseless frames and scans.
    #[arg(long, global = true)]
    pub no_noise: bool,

    /// Band-pass filter in front of the camera.
    #[arg(long, global = true, value_name = "on|off")]
    pub filter: Option<Switch>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency-angular emission map.
    Spectrum,
    /// One fringe pattern for the configured scenario.
    Pattern {
        /// Arm difference in micrometres.
        #[arg(long, allow_hyphen_values = true)]
        delta_l_um: Option<f64>,
        /// Crystal displacement in millimetres.
        #[arg(long, allow_hyphen_values = true)]
        d_mm: Option<f64>,
    },
    /// Rings for a list of crystal displacements and the equivalent wavelength.
    ScanCrystal {
        /// Crystal displacements in millimetres, comma separated.
        #[arg(long, value_delimiter = ',', value_name = "MM,..")]
        d_list: Option<Vec<f64>>,
    },
    /// Visibility against arm difference, with and without the sample.
    ScanOpd {
        /// `START,STOP,POINTS` with positions in millimetres.
        #[arg(long, value_name = "START,STOP,N", allow_hyphen_values = true, value_parser = parse_range)]
        opd_range: Option<(f64, f64, usize)>,
    },
    /// On-axis counts over a few idler wavelengths of mirror travel.
    ScanPzt,
    /// Straight fringes from a wedged plate and the recovered angle.
    Wedge {
        /// Wedge angle in arcminutes.
        #[arg(long)]
        wedge_arcmin: Option<f64>,
    },
    /// Angular-spectrum rings over the configured arm differences.
    Asd,
    /// Oracle table: closed forms against numerics.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Pattern { .. } => "pattern",
            Command::ScanCrystal { .. } => "scan-crystal",
            Command::ScanOpd { .. } => "scan-opd",
            Command::ScanPzt => "scan-pzt",
            Command::Wedge { .. } => "wedge",
            Command::Asd => "asd",
            Command::Verify => "verify",
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    Ok((w, h))
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected START,STOP,N, got `{s}`"));
    }
    let start = parts[0].parse().map_err(|e| format!("start: {e}"))?;
    let stop = parts[1].parse().map_err(|e| format!("stop: {e}"))?;
    let n = parts[2].parse().map_err(|e| format!("points: {e}"))?;
    Ok((start, stop, n))
}

/// Loads the configuration and applies the global and subcommand overrides.
pub fn resolve_config(global: &GlobalArgs, command: &Command) -> Result<Config, CliError> {
    let mut cfg = Config::load(global.config.as_deref())?;
    if let Some(seed) = global.seed {
        cfg.noise.seed = seed;
    }
    if let Some((w, h)) = global.grid {
        cfg.grid.width = w;
        cfg.grid.height = h;
    }
    if global.no_noise {
        cfg.noise.enabled = false;
        cfg.scan_opd.visibility_noise = 0.0;
    }
    if let Some(f) = global.filter {
        cfg.filter.enabled = f == Switch::On;
    }
    match command {
        Command::Pattern { delta_l_um, d_mm } => {
            if let Some(v) = delta_l_um {
                cfg.scenario.delta_l_um = *v;
            }
            if let Some(v) = d_mm {
                cfg.scenario.crystal_shift_mm = *v;
            }
        }
        Command::ScanCrystal { d_list: Some(d) } => cfg.scan_crystal.d_mm = d.clone(),
        Command::ScanOpd { opd_range: Some((start, stop, n)) } => {
            cfg.scan_opd.start_mm = *start;
            cfg.scan_opd.stop_mm = *stop;
            cfg.scan_opd.points = *n;
        }
        Command::Wedge { wedge_arcmin: Some(a) } => cfg.wedge.angle_arcmin = *a,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// What a run wrote and the lines it printed.
pub struct RunOutcome {
    pub files: Vec<String>,
    pub summary: Vec<String>,
    /// False when `verify` found a failing check.
    pub ok: bool,
}

pub fn run(cli: &Cli) -> Result<RunOutcome, CliError> {
    let cfg = resolve_config(&cli.global, &cli.command)?;
    let mut out = OutputDir::create(&cli.global.out)?;
    let mut summary = Vec::new();
    let mut scenarios = vec![cfg.scenario()?.summary()];
    let mut ok = true;
    match &cli.command {
        Command::Spectrum => spectrum(&cfg, &mut out, &mut summary)?,
        Command::Pattern { .. } => pattern(&cfg, &mut out, &mut summary)?,
        Command::ScanCrystal { .. } => scan_crystal(&cfg, &mut out, &mut summary)?,
        Command::ScanOpd { .. } => scan_opd(&cfg, &mut out, &mut summary)?,
        Command::ScanPzt => scan_pzt(&cfg, &mut out, &mut summary)?,
        Command::Wedge { .. } => wedge(&cfg, &mut out, &mut summary)?,
        Command::Asd => asd(&cfg, &mut out, &mut summary, &mut scenarios)?,
        Command::Verify => {
            let report = verify::run(&cfg)?;
            ok = report.all_pass();
            summary.push(report.table());
            summary.push(format!("verify: {}", if ok { "all checks pass" } else { "FAILED" }));
            out.write_report("verify.toml", &report)?;
        }
    }
    let files = out.finish(ManifestInputs {
        subcommand: cli.command.name().into(),
        seed: cfg.noise.seed,
        config_path: cli.global.config.as_ref().map_or_else(|| "<paper-default>".into(), |p| p.display().to_string()),
        scenarios,
        config: cfg,
    })?;
    Ok(RunOutcome { files, summary, ok })
}

#[derive(Serialize)]
struct SpectrumReport {
    bandwidth_rad_per_s: f64,
    coherence_length_mm: f64,
    parabola_b_closed: f64,
    parabola_b_published: f64,
    parabola_b_numeric: f64,
    parabola_relative_residual: f64,
    poling_period_um: f64,
    idler_nm: f64,
}

fn spectrum(cfg: &Config, out: &mut OutputDir, summary: &mut Vec<String>) -> Result<(), CliError> {
    let points = experiments::spectrum(cfg)?;
    let rows: Vec<Vec<f64>> = points.iter().map(|p| vec![p.lambda * 1e6, p.theta, p.density]).collect();
    out.write_csv("spectrum.csv", &["lambda_um", "theta_rad", "density"], &rows)?;
    let spdc = cfg.spdc_config()?;
    let dw = bandwidth(&spdc)?;
    let fit = parabola_b_numeric(&spdc, default_kappa_max(&spdc), 13)?;
    let report = SpectrumReport {
        bandwidth_rad_per_s: dw,
        coherence_length_mm: 8.0 * std::f64::consts::PI * qni_core::units::SPEED_OF_LIGHT / dw * 1e3,
        parabola_b_closed: parabola_b_closed(&spdc)?,
        parabola_b_published: parabola_b_published(&spdc)?,
        parabola_b_numeric: fit.b,
        parabola_relative_residual: fit.relative_residual,
        poling_period_um: spdc.poling_period * 1e6,
        idler_nm: spdc.idler_wavelength() * 1e9,
    };
    summary.push(format!(
        "spectrum: {} points, bandwidth {:.4e} rad/s, b = {:.2} (closed) / {:.2} (numeric)",
        rows.len(),
        dw,
        report.parabola_b_closed,
        report.parabola_b_numeric
    ));
    out.write_report("report.toml", &report)
}

#[derive(Serialize)]
struct PatternReport {
    delta_l_um: f64,
    crystal_shift_mm: f64,
    /// Coherence envelope at the optical axis.
    envelope_visibility: f64,
    /// `(max - min) / (max + min)` of the frame after removing dark counts.
    image_contrast: f64,
    mean_counts: f64,
    seed: Option<u64>,
}

fn pattern(cfg: &Config, out: &mut OutputDir, summary: &mut Vec<String>) -> Result<(), CliError> {
    let sc = cfg.scenario()?;
    let grid = cfg.grid();
    let frame = experiments::acquire(cfg, &sc, &grid, cfg.noise.seed)?;
    out.write_pattern("pattern", &frame)?;
    out.write_profile("profile.csv", &radial_profile(&frame, cfg.fit.ring_bins)?)?;
    let dark = cfg.noise.dark_counts;
    let (hi, lo) = (frame.max_value() - dark, frame.min_value() - dark);
    let report = PatternReport {
        delta_l_um: sc.delta_l * 1e6,
        crystal_shift_mm: sc.crystal_shift * 1e3,
        envelope_visibility: visibility_envelope(&sc.spectral, effective_opd(&sc, [0.0, 0.0])),
        image_contrast: if hi + lo > 0.0 { (hi - lo) / (hi + lo) } else { 0.0 },
        mean_counts: frame.grid.iter().sum::<f64>() / frame.grid.len() as f64,
        seed: frame.seed,
    };
    summary.push(format!(
        "pattern: {}x{}, visibility = {:.3}, image contrast = {:.3}",
        frame.width, frame.height, report.envelope_visibility, report.image_contrast
    ));
    out.write_report("report.toml", &report)
}

#[derive(Serialize)]
struct CrystalEntry {
    d_mm: f64,
    extrema: usize,
    a_per_mm2: f64,
    a_stderr_per_mm2: f64,
    fit: FitRecord,
}

#[derive(Serialize)]
struct ScanCrystalReport {
    lambda_eq_nm: f64,
    lambda_eq_stderr_nm: f64,
    lambda_eq_predicted_nm: f64,
    relative_error: f64,
    intercept_per_mm2: f64,
    intercept_stderr_per_mm2: f64,
    lambda_fit: FitRecord,
    runs: Vec<CrystalEntry>,
}

fn scan_crystal(cfg: &Config, out: &mut OutputDir, summary: &mut Vec<String>) -> Result<(), CliError> {
    let res = experiments::scan_crystal(cfg)?;
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for r in &res.runs {
        let tag = format!("d{}mm", r.d_mm);
        out.write_pattern(&format!("pattern_{tag}"), &r.pattern)?;
        out.write_profile(&format!("profile_{tag}.csv"), &r.profile)?;
        let ext: Vec<Vec<f64>> = r
            .extrema
            .iter()
            .map(|e| {
                let bright = matches!(e.kind, qni_core::analysis::ExtremumKind::Max);
                vec![e.radius * 1e3, e.order, if bright { 1.0 } else { 0.0 }]
            })
            .collect();
        out.write_csv(&format!("extrema_{tag}.csv"), &["radius_mm", "order", "bright"], &ext)?;
        rows.push(vec![r.d_mm, r.fit.params[0] * 1e-6, r.fit.stderr[0] * 1e-6]);
        runs.push(CrystalEntry {
            d_mm: r.d_mm,
            extrema: r.extrema.len(),
            a_per_mm2: r.fit.params[0] * 1e-6,
            a_stderr_per_mm2: r.fit.stderr[0] * 1e-6,
            fit: FitRecord::from(&r.fit),
        });
    }
    out.write_csv("a_vs_d.csv", &["x", "value", "sigma"], &rows)?;
    let lambda = res.lambda_eq();
    let report = ScanCrystalReport {
        lambda_eq_nm: lambda * 1e9,
        lambda_eq_stderr_nm: res.lambda_fit.stderr[0] * 1e9,
        lambda_eq_predicted_nm: res.lambda_eq_predicted * 1e9,
        relative_error: (lambda - res.lambda_eq_predicted) / res.lambda_eq_predicted,
        intercept_per_mm2: res.line.param("intercept").unwrap_or(0.0) * 1e-6,
        intercept_stderr_per_mm2: res.line.stderr_of("intercept").unwrap_or(0.0) * 1e-6,
        lambda_fit: FitRecord::from(&res.lambda_fit),
        runs,
    };
    summary.push(format!(
        "scan-crystal: lambda_eq = {:.2} +/- {:.2} nm (predicted {:.2} nm)",
        report.lambda_eq_nm, report.lambda_eq_stderr_nm, report.lambda_eq_predicted_nm
    ));
    out.write_report("report.toml", &report)
}

#[derive(Serialize)]
struct ScanOpdReport {
    coherence_length_mm: f64,
    coherence_length_stderr_mm: f64,
    coherence_length_predicted_mm: f64,
    envelope_shift_um: f64,
    d_b_um: f64,
    d_b_stderr_um: f64,
    sample_thickness_um: f64,
    index: f64,
    index_stderr: f64,
    index_predicted: f64,
    reference: FitRecord,
    sample: FitRecord,
}

fn scan_opd(cfg: &Config, out: &mut OutputDir, summary: &mut Vec<String>) -> Result<(), CliError> {
    let res = experiments::scan_opd(cfg)?;
    for (name, s) in [("scan_reference.csv", &res.reference), ("scan_sample.csv", &res.sample)] {
        let x: Vec<f64> = s.positions.iter().map(|p| p * 1e3).collect();
        out.write_scan(name, &x, &s.visibility, &s.sigma)?;
    }
    let r = &res.reference.fit;
    let report = ScanOpdReport {
        coherence_length_mm: r.params[1] * 1e3,
        coherence_length_stderr_mm: r.stderr[1] * 1e3,
        coherence_length_predicted_mm: res.coherence_length_predicted * 1e3,
        envelope_shift_um: 2.0 * res.d_b.value * 1e6,
        d_b_um: res.d_b.value * 1e6,
        d_b_stderr_um: res.d_b.stderr * 1e6,
        sample_thickness_um: res.thickness * 1e6,
        index: res.index.value,
        index_stderr: res.index.stderr,
        index_predicted: res.index_predicted,
        reference: FitRecord::from(r),
        sample: FitRecord::from(&res.sample.fit),
    };
    summary.push(format!(
        "scan-opd: l_c = {:.4} +/- {:.4} mm (predicted {:.4} mm), n = {:.4} +/- {:.4} (true {:.4})",
        report.coherence_length_mm,
        report.coherence_length_stderr_mm,
        report.coherence_length_predicted_mm,
        report.index,
        report.index_stderr,
        report.index_predicted
    ));
    out.write_report("report.toml", &report)
}

#[derive(Serialize)]
struct ScanPztReport {
    period_nm: f64,
    period_stderr_nm: f64,
    period_predicted_nm: f64,
    relative_error: f64,
    fit: FitRecord,
}

fn scan_pzt(cfg: &Config, out: &mut OutputDir, summary: &mut Vec<String>) -> Result<(), CliError> {
    let res = experiments::scan_pzt(cfg)?;
    out.write_scan("scan.csv", &res.positions_nm, &res.counts, &res.sigma)?;
    let report = ScanPztReport {
        period_nm: res.fit.params[0],
        period_stderr_nm: res.fit.stderr[0],
        period_predicted_nm: res.period_predicted_nm,
        relative_error: (res.fit.params[0] - res.period_predicted_nm) / res.period_predicted_nm,
        fit: FitRecord::from(&res.fit),
    };
    summary.push(format!(
        "scan-pzt: period = {:.2} +/- {:.2} nm (idler {:.2} nm)",
        report.period_nm, report.period_stderr_nm, report.period_predicted_nm
    ));
    out.write_report("report.toml", &report)
}

#[derive(Serialize)]
struct WedgeReport {
    angle_arcmin: f64,
    angle_true_arcmin: f64,
    relative_error: f64,
    fringe_spacing_um: f64,
    fringe_spacing_predicted_um: f64,
    index: f64,
    fit: FitRecord,
}

fn wedge(cfg: &Config, out: &mut OutputDir, summary: &mut Vec<String>) -> Result<(), CliError> {
    let res = experiments::wedge(cfg)?;
    out.write_pattern("pattern", &res.pattern)?;
    let report = WedgeReport {
        angle_arcmin: res.angle_arcmin(),
        angle_true_arcmin: qni_core::units::to_arcmin(res.angle_true),
        relative_error: (res.angle - res.angle_true) / res.angle_true,
        fringe_spacing_um: res.spacing * 1e6,
        fringe_spacing_predicted_um: res.spacing_predicted * 1e6,
        index: res.index,
        fit: FitRecord::from(&res.fit),
    };
    summary.push(format!(
        "wedge: angle = {:.3}' (true {:.3}'), fringe spacing {:.1} um",
        report.angle_arcmin, report.angle_true_arcmin, report.fringe_spacing_um
    ));
    out.write_report("report.toml", &report)
}

#[derive(Serialize)]
struct AsdEntry {
    series: String,
    crystal_length_mm: f64,
    filter: bool,
    delta_l_um: f64,
    extrema: usize,
    fringe_visibility: f64,
}

#[derive(Serialize)]
struct AsdReport {
    filter_on_counts: Vec<usize>,
    filter_off_counts: Vec<usize>,
    short_crystal_counts: Vec<usize>,
    filter_on_strictly_increasing: bool,
    frames: Vec<AsdEntry>,
}

fn asd(
    cfg: &Config,
    out: &mut OutputDir,
    summary: &mut Vec<String>,
    scenarios: &mut Vec<String>,
) -> Result<(), CliError> {
    let res = experiments::asd(cfg)?;
    let mut frames = Vec::new();
    for f in &res.frames {
        let tag = format!("{}_dl{}um", f.series.label(), f.delta_l * 1e6);
        out.write_pattern(&format!("pattern_{tag}"), &f.pattern)?;
        out.write_profile(&format!("profile_{tag}.csv"), &f.profile)?;
        frames.push(AsdEntry {
            series: f.series.label().into(),
            crystal_length_mm: f.crystal_length * 1e3,
            filter: f.filtered,
            delta_l_um: f.delta_l * 1e6,
            extrema: f.extrema,
            fringe_visibility: f.fringe_visibility,
        });
    }
    let on = res.counts(AsdSeries::Filtered);
    let off = res.counts(AsdSeries::Open);
    let short = res.counts(AsdSeries::ShortFiltered);
    let rows: Vec<Vec<f64>> = cfg
        .asd
        .delta_l_um
        .iter()
        .enumerate()
        .map(|(i, &dl)| {
            vec![
                dl,
                on[i] as f64,
                off[i] as f64,
                short[i] as f64,
                res.visibilities(AsdSeries::Filtered)[i],
                res.visibilities(AsdSeries::ShortFiltered)[i],
            ]
        })
        .collect();
    out.write_csv(
        "counts.csv",
        &["delta_l_um", "filter_on", "filter_off", "short_filter_on", "visibility_on", "visibility_short"],
        &rows,
    )?;
    scenarios.push(format!("short crystal: {} mm", cfg.asd.short_crystal_mm));
    let report = AsdReport {
        filter_on_strictly_increasing: on.windows(2).all(|w| w[1] > w[0]),
        filter_on_counts: on,
        filter_off_counts: off,
        short_crystal_counts: short,
        frames,
    };
    summary.push(format!(
        "asd: extrema filter on {:?}, filter off {:?}, short crystal {:?}",
        report.filter_on_counts, report.filter_off_counts, report.short_crystal_counts
    ));
    out.write_report("report.toml", &report)
}
