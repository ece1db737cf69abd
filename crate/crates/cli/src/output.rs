//! File emission: CSV tables, 16-bit PGM images, TOML reports and the run
//! manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qni_core::synth::RadialBin;
use qni_core::{FitReport, FringePattern};
use serde::Serialize;

use crate::error::CliError;

/// Collects every file written during a run so the manifest can list them.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn claim(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.root.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.claim(name);
        fs::write(path, text)?;
        Ok(())
    }

    /// Table with the given header; every row must have the same length.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let path = self.claim(name);
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `x, value, sigma`.
    pub fn write_scan(&mut self, name: &str, x: &[f64], value: &[f64], sigma: &[f64]) -> Result<(), CliError> {
        let rows: Vec<Vec<f64>> = (0..x.len()).map(|i| vec![x[i], value[i], sigma[i]]).collect();
        self.write_csv(name, &["x", "value", "sigma"], &rows)
    }

    /// `radius_mm, mean, stderr`.
    pub fn write_profile(&mut self, name: &str, profile: &[RadialBin<f64>]) -> Result<(), CliError> {
        let rows: Vec<Vec<f64>> = profile.iter().map(|b| vec![b.radius * 1e3, b.mean, b.stderr]).collect();
        self.write_csv(name, &["radius_mm", "mean", "stderr"], &rows)
    }

    /// Writes `<stem>.pgm`, `<stem>.toml` (image metadata) and `<stem>.csv`
    /// (one row of counts per image row, with a `#` header).
    pub fn write_pattern(&mut self, stem: &str, pattern: &FringePattern) -> Result<(), CliError> {
        let peak = pattern.max_value().max(0.0);
        let scale = if peak > 0.0 { 65535.0 / peak } else { 1.0 };
        let mut pgm = format!("P5\n{} {}\n65535\n", pattern.width, pattern.height).into_bytes();
        for &v in &pattern.grid {
            let level = (v.max(0.0) * scale).round().min(65535.0) as u16;
            pgm.extend_from_slice(&level.to_be_bytes());
        }
        fs::write(self.claim(&format!("{stem}.pgm")), pgm)?;

        let meta = ImageMeta {
            width: pattern.width,
            height: pattern.height,
            pixel_pitch_um: pattern.pixel_pitch * 1e6,
            center_px: pattern.center,
            counts_per_level: 1.0 / scale,
            exposure_scale: pattern.exposure_scale,
            seed: pattern.seed,
        };
        self.write_text(&format!("{stem}.toml"), &toml::to_string(&meta).expect("metadata serializes"))?;

        let mut text = format!(
            "# width={} height={} pixel_pitch_um={} center_px={},{} seed={}\n",
            pattern.width,
            pattern.height,
            pattern.pixel_pitch * 1e6,
            pattern.center[0],
            pattern.center[1],
            pattern.seed.map_or_else(|| "none".to_string(), |s| s.to_string()),
        );
        for r in 0..pattern.height {
            let line: Vec<String> = pattern.row(r).iter().map(|v| format_value(*v)).collect();
            text.push_str(&line.join(","));
            text.push('\n');
        }
        let path = self.claim(&format!("{stem}.csv"));
        fs::File::create(path)?.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn write_report<R: Serialize>(&mut self, name: &str, report: &R) -> Result<(), CliError> {
        let text = toml::to_string(report).map_err(|e| CliError::Config(format!("report serialization: {e}")))?;
        self.write_text(name, &text)
    }

    /// Writes `manifest.toml` listing everything written so far.
    pub fn finish(mut self, manifest: ManifestInputs) -> Result<Vec<String>, CliError> {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut files = self.files.clone();
        files.push("manifest.toml".into());
        let m = Manifest {
            tool: "qni".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: manifest.subcommand,
            timestamp_unix: timestamp,
            seed: manifest.seed,
            config_path: manifest.config_path,
            output_dir: self.root.display().to_string(),
            files: files.clone(),
            scenarios: manifest.scenarios,
            config: manifest.config,
        };
        let text = toml::to_string(&m).expect("manifest serializes");
        fs::write(self.claim("manifest.toml"), text)?;
        Ok(files)
    }
}

/// Shortest round-tripping representation, so reruns are byte-identical.
fn format_value(v: f64) -> String {
    format!("{v}")
}

#[derive(Serialize)]
struct ImageMeta {
    width: usize,
    height: usize,
    pixel_pitch_um: f64,
    center_px: [f64; 2],
    /// Counts represented by one grey level.
    counts_per_level: f64,
    exposure_scale: f64,
    seed: Option<u64>,
}

pub struct ManifestInputs {
    pub subcommand: String,
    pub seed: u64,
    pub config_path: String,
    pub scenarios: Vec<String>,
    pub config: crate::config::Config,
}

#[derive(Serialize)]
struct Manifest {
    tool: String,
    version: String,
    subcommand: String,
    timestamp_unix: u64,
    seed: u64,
    config_path: String,
    output_dir: String,
    files: Vec<String>,
    scenarios: Vec<String>,
    config: crate::config::Config,
}

/// One fitted parameter with its uncertainty.
#[derive(Debug, Clone, Serialize)]
pub struct ParamRecord {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub params: Vec<ParamRecord>,
    pub residual_rms: f64,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub n_iter: usize,
}

impl From<&FitReport> for FitRecord {
    fn from(r: &FitReport) -> Self {
        let ci = r.ci95();
        Self {
            params: (0..r.params.len())
                .map(|i| ParamRecord { name: r.names[i].clone(), value: r.params[i], stderr: r.stderr[i], ci95: ci[i] })
                .collect(),
            residual_rms: r.residual_rms,
            chi2: r.chi2,
            dof: r.dof,
            converged: r.converged,
            n_iter: r.n_iter,
        }
    }
}
