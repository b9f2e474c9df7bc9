use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The window/hop pair cannot reconstruct: some sample inside the window
    /// is never observed with nonzero total weight.
    #[error("window/hop pair cannot reconstruct: dual-window denominator {denominator:e} at sample {sample}")]
    ReconstructionInfeasible { sample: usize, denominator: f64 },

    #[error("signal too short: {len} samples, analysis needs at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative magnitude value in {0}")]
    NegativeMagnitude(&'static str),

    #[error("reference signal is identically zero")]
    ZeroReference,
}

pub type Result<T> = std::result::Result<T, Error>;
