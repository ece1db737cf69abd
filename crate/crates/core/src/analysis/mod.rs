//! Inverse pipeline: least squares and the fringe-data estimators.

pub mod estimators;
pub mod extrema;
pub mod models;
pub mod nls;

pub use estimators::*;
pub use extrema::{extract_ring_extrema, extract_ring_extrema_with, ExtremaOptions, ExtremumKind, RingExtremum};
pub use nls::{nls_fit, DataPoint, FitReport, FnModel, Model, NlsOptions};
