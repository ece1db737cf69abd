use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{material}: wavelength {wavelength_um} um outside valid range [{min_um}, {max_um}] um")]
    WavelengthOutOfRange {
        material: String,
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("malformed material data: {0}")]
    MaterialData(String),

    #[error("evanescent transverse wavevector: |kappa| = {kappa} rad/m >= k = {k} rad/m")]
    Evanescent { kappa: f64, k: f64 },

    #[error("no first-order quasi-phase-matching solution: k_p - k_s - k_i = {mismatch} rad/m")]
    NoQpmSolution { mismatch: f64 },

    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    #[error("singular closed form: {0}")]
    Singular(String),

    #[error("quadrature did not converge on [{lo}, {hi}] (estimated error {err:e}): {context}")]
    Quadrature {
        lo: f64,
        hi: f64,
        err: f64,
        context: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("rank-deficient normal matrix (parameter `{param}` is not constrained by the data)")]
    RankDeficient { param: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no oscillation found in scan: {0}")]
    NoOscillation(String),

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("physically inconsistent result: {0}")]
    Inconsistent(String),
}
