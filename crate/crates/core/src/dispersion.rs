//! Refractive-index models for the nonlinear crystal, samples in the arms and
//! the propagation medium.
//!
//! Coefficient sets live in `data/materials.toml`; the file is compiled in and
//! can be replaced at runtime with [`MaterialLibrary::from_toml_str`].

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::units;

const BUILTIN_MATERIALS: &str = include_str!("../data/materials.toml");

#[derive(Debug, Clone, PartialEq)]
pub enum SellmeierForm<T> {
    Vacuum,
    /// `n^2 = a + sum b/(L - c) - ir * L` with `L = lambda^2` in um^2.
    Pole { a: T, poles: Vec<(T, T)>, ir: T },
}

/// A named refractive-index model with its validity window.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionModel<T> {
    pub name: String,
    pub form: SellmeierForm<T>,
    /// Valid wavelength window in um.
    pub range_um: (T, T),
    pub source: String,
}

impl<T: Real> DispersionModel<T> {
    pub fn vacuum() -> Self {
        Self {
            name: "vacuum".into(),
            form: SellmeierForm::Vacuum,
            range_um: (T::zero(), T::lit(1e6)),
            source: "definition".into(),
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self.form, SellmeierForm::Vacuum)
    }

    fn check_range(&self, lambda_um: T) -> Result<()> {
        let (lo, hi) = self.range_um;
        if !(lambda_um >= lo && lambda_um <= hi) || !lambda_um.is_finite() {
            return Err(Error::WavelengthOutOfRange {
                material: self.name.clone(),
                wavelength_um: lambda_um.as_f64(),
                min_um: lo.as_f64(),
                max_um: hi.as_f64(),
            });
        }
        Ok(())
    }

    /// `n^2` and `d(n^2)/dL` at `L = lambda_um^2`.
    fn n2_and_slope(&self, lambda_um: T) -> (T, T) {
        match &self.form {
            SellmeierForm::Vacuum => (T::one(), T::zero()),
            SellmeierForm::Pole { a, poles, ir } => {
                let l2 = lambda_um * lambda_um;
                let mut n2 = *a - *ir * l2;
                let mut slope = -*ir;
                for &(b, c) in poles {
                    let den = l2 - c;
                    n2 = n2 + b / den;
                    slope = slope - b / (den * den);
                }
                (n2, slope)
            }
        }
    }

    /// Refractive index at vacuum wavelength `lambda` (m).
    pub fn refractive_index(&self, lambda: T) -> Result<T> {
        let lambda_um = lambda * T::lit(1e6);
        self.check_range(lambda_um)?;
        let (n2, _) = self.n2_and_slope(lambda_um);
        Ok(n2.sqrt())
    }

    /// `dn/domega` in s/rad at vacuum wavelength `lambda` (m).
    pub fn dn_domega(&self, lambda: T) -> Result<T> {
        let lambda_um = lambda * T::lit(1e6);
        self.check_range(lambda_um)?;
        if self.is_vacuum() {
            return Ok(T::zero());
        }
        let (n2, slope) = self.n2_and_slope(lambda_um);
        let n = n2.sqrt();
        // dn/dlambda_um = slope * lambda_um / n; dlambda_um/domega = -lambda^2/(2 pi c) * 1e6
        let dn_dlambda_um = slope * lambda_um / n;
        let dlambda_um_domega = -lambda * lambda * T::lit(1e6) / (T::TAU() * units::c::<T>());
        Ok(dn_dlambda_um * dlambda_um_domega)
    }

    /// Wavevector magnitude `n * 2 pi / lambda` (rad/m).
    pub fn wavevector(&self, lambda: T) -> Result<T> {
        Ok(self.refractive_index(lambda)? * T::TAU() / lambda)
    }

    pub fn index_at_omega(&self, omega: T) -> Result<T> {
        self.refractive_index(units::wavelength_from_omega(omega))
    }

    /// `k(omega) = n(omega) omega / c`.
    pub fn k_at_omega(&self, omega: T) -> Result<T> {
        Ok(self.index_at_omega(omega)? * omega / units::c::<T>())
    }

    /// Group index `n + omega dn/domega`.
    pub fn group_index(&self, lambda: T) -> Result<T> {
        let omega = units::omega_from_wavelength(lambda);
        Ok(self.refractive_index(lambda)? + omega * self.dn_domega(lambda)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    version: u32,
    material: Vec<MaterialRecord>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialRecord {
    name: String,
    form: String,
    #[serde(default)]
    a: f64,
    #[serde(default)]
    poles: Vec<[f64; 2]>,
    #[serde(default)]
    ir: f64,
    range_um: [f64; 2],
    source: String,
}

/// Collection of named material models.
#[derive(Debug, Clone)]
pub struct MaterialLibrary {
    pub version: u32,
    records: Vec<MaterialRecord>,
}

impl MaterialLibrary {
    /// The compiled-in material table.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_MATERIALS).expect("builtin material table is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: MaterialFile = toml::from_str(text).map_err(|e| Error::MaterialData(e.to_string()))?;
        for r in &file.material {
            match r.form.as_str() {
                "vacuum" => {}
                "pole" => {
                    if r.poles.is_empty() && r.ir == 0.0 {
                        return Err(Error::MaterialData(format!("{}: pole form without terms", r.name)));
                    }
                }
                other => {
                    return Err(Error::MaterialData(format!("{}: unknown form `{other}`", r.name)));
                }
            }
            if !(r.range_um[0] < r.range_um[1]) {
                return Err(Error::MaterialData(format!("{}: empty range", r.name)));
            }
        }
        Ok(Self { version: file.version, records: file.material })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.name.as_str())
    }

    pub fn get<T: Real>(&self, name: &str) -> Result<DispersionModel<T>> {
        let r = self
            .records
            .iter()
            .find(|r| r.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))?;
        let form = match r.form.as_str() {
            "vacuum" => SellmeierForm::Vacuum,
            _ => SellmeierForm::Pole {
                a: T::lit(r.a),
                poles: r.poles.iter().map(|p| (T::lit(p[0]), T::lit(p[1]))).collect(),
                ir: T::lit(r.ir),
            },
        };
        Ok(DispersionModel {
            name: r.name.clone(),
            form,
            range_um: (T::lit(r.range_um[0]), T::lit(r.range_um[1])),
            source: r.source.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lib() -> MaterialLibrary {
        MaterialLibrary::builtin()
    }

    #[test]
    fn bbo_ordinary_at_idler() {
        let bbo = lib().get::<f64>("BBO-ordinary").unwrap();
        let n = bbo.refractive_index(1.540e-6).unwrap();
        assert!((n - 1.647).abs() < 1e-3, "n = {n}");
    }

    #[test]
    fn ktp_z_hand_evaluated() {
        // Independent evaluation of the Sellmeier polynomial at 0.797 um:
        // 4.59423 + 0.06206/(0.635209 - 0.04763) + 110.80672/(0.635209 - 86.12171)
        let l2 = 0.797_f64 * 0.797;
        let want = (4.59423 + 0.06206 / (l2 - 0.04763) + 110.80672 / (l2 - 86.12171)).sqrt();
        assert!((want - 1.844_901_125_927_395).abs() < 1e-12);
        let ktp = lib().get::<f64>("KTP-z").unwrap();
        assert!((ktp.refractive_index(0.797e-6).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn vacuum_is_exact() {
        let v = lib().get::<f64>("vacuum").unwrap();
        for l in [0.3e-6, 1.54e-6, 10e-6] {
            assert_eq!(v.refractive_index(l).unwrap(), 1.0);
            assert_eq!(v.dn_domega(l).unwrap(), 0.0);
        }
        let k = v.wavevector(1.540e-6).unwrap();
        assert!((k - 4.079_990_459e6).abs() < 1.0);
    }

    #[test]
    fn out_of_range_names_material() {
        let bbo = lib().get::<f64>("BBO-ordinary").unwrap();
        let err = bbo.refractive_index(5e-6).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("BBO-ordinary") && msg.contains("2.6"), "{msg}");
        assert!(bbo.dn_domega(0.1e-6).is_err());
        assert!(bbo.wavevector(3e-6).is_err());
    }

    #[test]
    fn bbo_normal_dispersion_in_visible() {
        let bbo = lib().get::<f64>("BBO-ordinary").unwrap();
        assert!(bbo.dn_domega(0.797e-6).unwrap() > 0.0);
    }

    fn fd_dn_domega(m: &DispersionModel<f64>, lambda: f64) -> f64 {
        let w = units::omega_from_wavelength(lambda);
        let h = w * 1e-6;
        (m.index_at_omega(w + h).unwrap() - m.index_at_omega(w - h).unwrap()) / (2.0 * h)
    }

    #[test]
    fn ktp_analytic_derivative_matches_central_difference() {
        let ktp = lib().get::<f64>("KTP-z").unwrap();
        let a = ktp.dn_domega(1.540e-6).unwrap();
        let fd = fd_dn_domega(&ktp, 1.540e-6);
        assert!(((a - fd) / fd).abs() < 1e-4, "{a} vs {fd}");
    }

    #[test]
    fn derivative_sweep_all_crystals() {
        let lib = lib();
        for name in ["KTP-z", "BBO-ordinary"] {
            let m = lib.get::<f64>(name).unwrap();
            let (lo, hi) = m.range_um;
            for i in 0..50 {
                // strictly inside so the finite-difference stencil stays valid
                let l_um = lo + (hi - lo) * (0.01 + 0.98 * i as f64 / 49.0);
                let a = m.dn_domega(l_um * 1e-6).unwrap();
                let fd = fd_dn_domega(&m, l_um * 1e-6);
                assert!(((a - fd) / fd).abs() < 1e-4, "{name} at {l_um} um: {a} vs {fd}");
            }
        }
    }

    #[test]
    fn index_continuous_and_finite_over_window() {
        let lib = lib();
        for name in ["KTP-z", "BBO-ordinary"] {
            let m = lib.get::<f64>(name).unwrap();
            let mut prev = m.refractive_index(0.5e-6).unwrap();
            for i in 1..=1100 {
                let n = m.refractive_index((0.5 + i as f64 * 1e-3) * 1e-6).unwrap();
                assert!(n.is_finite() && n > 1.0);
                assert!((n - prev).abs() < 1e-3, "{name} jumps at step {i}");
                prev = n;
            }
        }
    }

    #[test]
    fn f32_model_tracks_f64() {
        let l = lib();
        let a = l.get::<f32>("KTP-z").unwrap().refractive_index(0.797e-6).unwrap();
        let b = l.get::<f64>("KTP-z").unwrap().refractive_index(0.797e-6).unwrap();
        assert!((a as f64 - b).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(MaterialLibrary::from_toml_str("version = 1\n[[material]]\nname='x'\nform='cubic'\nrange_um=[0.1,1.0]\nsource=''").is_err());
        assert!(MaterialLibrary::from_toml_str("version = 1\n[[material]]\nname='x'\nform='vacuum'\nrange_um=[1.0,0.1]\nsource=''").is_err());
        assert!(matches!(lib().get::<f64>("unobtainium"), Err(Error::UnknownMaterial(_))));
    }
}
