#![allow(dead_code)]

use qni_core::dispersion::MaterialLibrary;
use qni_core::{Scenario, SpdcConfig};

pub const MM: f64 = 1e-3;
pub const UM: f64 = 1e-6;
pub const NM: f64 = 1e-9;

pub fn spdc(length_mm: f64) -> SpdcConfig {
    let ktp = MaterialLibrary::builtin().get("KTP-z").unwrap();
    SpdcConfig::new(525.2 * NM, 797.0 * NM, length_mm * MM, 1e-6, ktp).unwrap()
}

pub fn scenario() -> Scenario {
    Scenario::from_config(spdc(10.0)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
