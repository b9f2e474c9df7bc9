//! Spectrogram inversion for audio source separation.
//!
//! Given per-source STFT magnitude estimates and the mixture they come from,
//! this crate recovers time-domain sources whose short-time spectra match the
//! target magnitudes while summing exactly to the mixture. An offline solver
//! ([`inversion::misi`]) and a fixed-latency streaming variant
//! ([`streaming::OnlineSeparator`]) are provided, together with sinusoidal
//! phase initialization, an amplitude-mask baseline and SI-SDR evaluation
//! helpers.

pub mod inversion;
pub mod mask;
pub mod metrics;
pub mod phase_init;
pub mod stft;
pub mod streaming;
pub mod synth;

mod error;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
pub use inversion::{
    magnitude_projection, misi, mix_error_distribute, spectral_loss, InversionResult,
    MagnitudeMatrix, MagnitudeSet, PhaseInit,
};
pub use mask::{amplitude_mask, oracle_magnitudes};
pub use metrics::{si_sdr, si_sdr_improvement, SeparationReport};
pub use stft::{
    istft, make_analysis_window, make_synthesis_window, stft, Spectrogram, StftConfig, TimeSignal,
    Window, WindowKind,
};
pub use streaming::{latency_samples, OnlineSeparator, StreamConfig};
