//! Windows, framing, and the forward/inverse short-time Fourier transform.
//!
//! Analysis is uncentered: frame `t` covers samples `[t*hop, t*hop + win_len)`,
//! the first frame starts at sample 0 and a trailing partial frame is dropped.
//! Synthesis overlap-adds windowed inverse DFTs and normalizes each output
//! sample by the summed window products of the frames that actually exist, so
//! `istft(stft(x))` reproduces `x` exactly at every sample the analysis
//! observes with nonzero weight (for Hann-family windows that is every sample
//! except the very first one, whose window weight is identically zero).

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// Samples with accumulated window weight below this are treated as unobserved.
pub(crate) const COVERAGE_EPS: f64 = 1e-12;

/// Shape of the analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Periodic Hann, `w(n) = 0.5 - 0.5 cos(2 pi n / N)`.
    HannPeriodic,
    /// Square root of the periodic Hann; self-dual at 50% overlap.
    SqrtHannPeriodic,
}

/// Analysis/synthesis geometry shared by every operation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StftConfig {
    /// Window length in samples.
    pub win_len: usize,
    /// Hop between consecutive frames in samples. Must divide `win_len`.
    pub hop: usize,
    /// DFT length; frames are zero-padded from `win_len` to this size.
    pub dft_size: usize,
    pub sample_rate: u32,
    pub window_kind: WindowKind,
}

impl StftConfig {
    pub fn new(
        win_len: usize,
        hop: usize,
        dft_size: usize,
        sample_rate: u32,
        window_kind: WindowKind,
    ) -> Result<Self> {
        if hop == 0 || hop > win_len || win_len > dft_size {
            return Err(Error::InvalidConfig(format!(
                "need 0 < hop <= win_len <= dft_size, got hop={hop}, win_len={win_len}, dft_size={dft_size}"
            )));
        }
        if win_len % hop != 0 {
            return Err(Error::InvalidConfig(format!(
                "win_len {win_len} must be a multiple of hop {hop}"
            )));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample_rate must be positive".into()));
        }
        Ok(Self {
            win_len,
            hop,
            dft_size,
            sample_rate,
            window_kind,
        })
    }

    /// 16 ms Hann window, 50% overlap, zero-padding factor 2 at 16 kHz:
    /// `win_len = 256`, `hop = 128`, `dft_size = 512`.
    pub fn default_16khz() -> Self {
        Self::new(256, 128, 512, 16_000, WindowKind::HannPeriodic).expect("valid constants")
    }

    /// Number of one-sided frequency bins, `dft_size / 2 + 1`.
    pub fn bin_count(&self) -> usize {
        self.dft_size / 2 + 1
    }

    /// Frames obtainable from a signal of `len` samples, or `None` if the
    /// signal is shorter than one window.
    pub fn num_frames(&self, len: usize) -> Option<usize> {
        if len < self.win_len {
            None
        } else {
            Some((len - self.win_len) / self.hop + 1)
        }
    }

    /// Length of the signal reconstructed from `frames` frames.
    pub fn signal_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.win_len
        }
    }
}

/// A real-valued, finite audio signal.
#[derive(Debug, Clone)]
pub struct TimeSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("time signal"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Window coefficients of length `win_len`.
#[derive(Debug, Clone)]
pub struct Window {
    pub coefficients: Vec<f64>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// One-sided complex time-frequency matrix, `bin_count` rows by `frames`
/// columns, stored frame-major (one contiguous column per frame).
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub config: StftConfig,
    pub frames: usize,
    bins: Vec<Complex64>,
}

impl Spectrogram {
    pub fn zeros(config: StftConfig, frames: usize) -> Self {
        let f = config.bin_count();
        Self {
            config,
            frames,
            bins: vec![Complex64::new(0.0, 0.0); f * frames],
        }
    }

    pub fn from_bins(config: StftConfig, frames: usize, bins: Vec<Complex64>) -> Result<Self> {
        if bins.len() != config.bin_count() * frames {
            return Err(Error::ShapeMismatch(format!(
                "expected {} bins, got {}",
                config.bin_count() * frames,
                bins.len()
            )));
        }
        if bins.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("spectrogram"));
        }
        Ok(Self {
            config,
            frames,
            bins,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.config.bin_count()
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let f = self.bin_count();
        &self.bins[t * f..(t + 1) * f]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex64] {
        let f = self.bin_count();
        &mut self.bins[t * f..(t + 1) * f]
    }

    pub fn value(&self, bin: usize, t: usize) -> Complex64 {
        self.bins[t * self.bin_count() + bin]
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    pub fn same_shape(&self, other: &Spectrogram) -> bool {
        self.frames == other.frames && self.bin_count() == other.bin_count()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Periodic Hann (or its square root) of length `config.win_len`.
pub fn make_analysis_window(config: &StftConfig) -> Window {
    let n = config.win_len;
    let coefficients = (0..n)
        .map(|k| {
            let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos();
            match config.window_kind {
                WindowKind::HannPeriodic => hann,
                // Guard against tiny negative round-off before the sqrt.
                WindowKind::SqrtHannPeriodic => hann.max(0.0).sqrt(),
            }
        })
        .collect();
    Window { coefficients }
}

/// Canonical dual of `analysis` at the given hop:
/// `w_s(n) = w(n) / sum_k w(n mod hop + k*hop)^2`.
///
/// The denominator is the total analysis weight any interior sample receives,
/// so overlap-adding `w_s`-weighted analysis frames reproduces interior
/// samples exactly. Fails when some sample inside the window is never
/// observed, e.g. a Hann window with `hop == win_len`.
pub fn make_synthesis_window(analysis: &Window, hop: usize) -> Result<Window> {
    let w = &analysis.coefficients;
    let n = w.len();
    if hop == 0 || n % hop != 0 {
        return Err(Error::InvalidConfig(format!(
            "window length {n} must be a positive multiple of hop {hop}"
        )));
    }
    let mut residue_sums = vec![0.0; hop];
    for (m, &wm) in w.iter().enumerate() {
        residue_sums[m % hop] += wm * wm;
    }
    let mut coefficients = Vec::with_capacity(n);
    for (m, &wm) in w.iter().enumerate() {
        let denom = residue_sums[m % hop];
        if denom < COVERAGE_EPS {
            return Err(Error::ReconstructionInfeasible {
                sample: m,
                denominator: denom,
            });
        }
        coefficients.push(wm / denom);
    }
    Ok(Window { coefficients })
}

/// Forward STFT: window each frame, zero-pad to `dft_size`, keep the one-sided
/// spectrum. Frame `t` starts at sample `t*hop`; trailing samples that do not
/// fill a whole window are dropped.
pub fn stft(signal: &TimeSignal, config: &StftConfig, analysis: &Window) -> Result<Spectrogram> {
    if analysis.len() != config.win_len {
        return Err(Error::ShapeMismatch(format!(
            "analysis window has {} coefficients, config needs {}",
            analysis.len(),
            config.win_len
        )));
    }
    let frames = config.num_frames(signal.len()).ok_or(Error::SignalTooShort {
        len: signal.len(),
        min: config.win_len,
    })?;
    let f = config.bin_count();
    let fft = forward_plan(config.dft_size);
    let mut buf = vec![Complex64::new(0.0, 0.0); config.dft_size];
    let mut bins = Vec::with_capacity(f * frames);
    for t in 0..frames {
        let start = t * config.hop;
        for (k, slot) in buf.iter_mut().enumerate() {
            let x = if k < config.win_len {
                signal.samples[start + k] * analysis.coefficients[k]
            } else {
                0.0
            };
            *slot = Complex64::new(x, 0.0);
        }
        fft.process(&mut buf);
        bins.extend_from_slice(&buf[..f]);
    }
    Ok(Spectrogram {
        config: *config,
        frames,
        bins,
    })
}

fn fill_hermitian(frame: &[Complex64], full: &mut [Complex64]) {
    let dft = full.len();
    full[0] = frame[0];
    for (f, &v) in frame.iter().enumerate().skip(1) {
        full[f] = v;
        let mirror = dft - f;
        if mirror > f {
            full[mirror] = v.conj();
        }
    }
}

/// Inverse DFT of a single one-sided frame: rebuild the Hermitian spectrum,
/// invert, keep the first `win_len` samples (for consistent frames the
/// zero-padding tail is exactly zero) and weight by the synthesis window.
pub fn frame_idft(frame: &[Complex64], config: &StftConfig, synthesis: &Window) -> Result<Vec<f64>> {
    if frame.len() != config.bin_count() {
        return Err(Error::ShapeMismatch(format!(
            "frame has {} bins, config needs {}",
            frame.len(),
            config.bin_count()
        )));
    }
    if synthesis.len() != config.win_len {
        return Err(Error::ShapeMismatch(format!(
            "synthesis window has {} coefficients, config needs {}",
            synthesis.len(),
            config.win_len
        )));
    }
    let mut full = vec![Complex64::new(0.0, 0.0); config.dft_size];
    fill_hermitian(frame, &mut full);
    inverse_plan(config.dft_size).process(&mut full);
    let scale = 1.0 / config.dft_size as f64;
    Ok((0..config.win_len)
        .map(|n| full[n].re * scale * synthesis.coefficients[n])
        .collect())
}

/// Plain overlap-add of [`frame_idft`] outputs at stride `hop`, without the
/// per-sample normalization of [`istft`]. Inside iterative inversion this is
/// what the analysis frames read back; the missing normalization only shows
/// at the outer `win_len - hop` samples, where the analysis window is small.
pub(crate) fn overlap_add(spec: &Spectrogram, synthesis: &Window) -> Result<Vec<f64>> {
    let config = &spec.config;
    if spec.frames == 0 {
        return Err(Error::ShapeMismatch("empty spectrogram".into()));
    }
    let mut out = vec![0.0; config.signal_len(spec.frames)];
    let inv = inverse_plan(config.dft_size);
    let scale = 1.0 / config.dft_size as f64;
    let mut full = vec![Complex64::new(0.0, 0.0); config.dft_size];
    for t in 0..spec.frames {
        fill_hermitian(spec.frame(t), &mut full);
        inv.process(&mut full);
        let start = t * config.hop;
        for n in 0..config.win_len {
            out[start + n] += full[n].re * scale * synthesis.coefficients[n];
        }
        full.fill(Complex64::new(0.0, 0.0));
    }
    Ok(out)
}

/// Inverse STFT by overlap-add of [`frame_idft`] outputs at stride `hop`,
/// normalized per sample by the summed analysis/synthesis window products of
/// the frames that exist there. Output length is `(frames-1)*hop + win_len`.
pub fn istft(spec: &Spectrogram, synthesis: &Window) -> Result<TimeSignal> {
    let config = &spec.config;
    if spec.frames == 0 {
        return Err(Error::ShapeMismatch("empty spectrogram".into()));
    }
    if synthesis.len() != config.win_len {
        return Err(Error::ShapeMismatch(format!(
            "synthesis window has {} coefficients, config needs {}",
            synthesis.len(),
            config.win_len
        )));
    }
    let analysis = make_analysis_window(config);
    let products: Vec<f64> = analysis
        .coefficients
        .iter()
        .zip(&synthesis.coefficients)
        .map(|(a, s)| a * s)
        .collect();

    let out_len = config.signal_len(spec.frames);
    let mut numer = vec![0.0; out_len];
    let mut weight = vec![0.0; out_len];
    let inv = inverse_plan(config.dft_size);
    let scale = 1.0 / config.dft_size as f64;
    let mut full = vec![Complex64::new(0.0, 0.0); config.dft_size];
    for t in 0..spec.frames {
        fill_hermitian(spec.frame(t), &mut full);
        inv.process(&mut full);
        let start = t * config.hop;
        for n in 0..config.win_len {
            numer[start + n] += full[n].re * scale * synthesis.coefficients[n];
            weight[start + n] += products[n];
        }
        full.fill(Complex64::new(0.0, 0.0));
    }
    let samples = numer
        .iter()
        .zip(&weight)
        .map(|(&num, &den)| if den > COVERAGE_EPS { num / den } else { 0.0 })
        .collect();
    Ok(TimeSignal {
        samples,
        sample_rate: config.sample_rate,
    })
}
