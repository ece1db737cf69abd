//! Simulation and analysis of induced-coherence (nonlinear) interferometry
//! with undetected photons.
//!
//! Everything is generic over the floating-point type through [`Real`]; the
//! aliases at the crate root fix it to `f64`.

pub mod analysis;
pub mod dispersion;
pub mod error;
pub mod interferometer;
pub mod numeric;
pub mod phasematch;
pub mod real;
pub mod synth;
pub mod units;

pub use error::{Error, Result};
pub use real::Real;

pub type DispersionModel = dispersion::DispersionModel<f64>;
pub type SpdcConfig = phasematch::SpdcConfig<f64>;
pub type SpectralModel = phasematch::SpectralModel<f64>;
pub type Scenario = interferometer::Scenario<f64>;
pub type PhaseMask = interferometer::PhaseMask<f64>;
pub type FilterModel = synth::FilterModel<f64>;
pub type GridSpec = synth::GridSpec<f64>;
pub type FringePattern = synth::FringePattern<f64>;
pub type FitReport = analysis::FitReport<f64>;
pub type RingExtremum = analysis::RingExtremum<f64>;
