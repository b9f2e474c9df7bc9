//! Frame-synchronous online spectrogram inversion with a fixed algorithmic
//! latency of `win_len + lookahead * hop` samples.
//!
//! Each pushed frame carries the mixture spectrum and the per-source target
//! magnitudes for one new analysis position. Once `lookahead + 1` frames are
//! buffered, every push runs a bounded number of projection/distribution
//! iterations over the buffered frames against the fixed past tail, then
//! commits and emits the oldest frame's hop of samples. Committed frames are
//! never revisited.

use std::collections::VecDeque;

use rustfft::num_complex::Complex64;

use crate::inversion::{distribute_column, project_bin, PhaseInit};
use crate::phase_init::{mixture_phase, sinusoidal_phase};
use crate::stft::{
    frame_idft, make_analysis_window, make_synthesis_window, stft, TimeSignal, Window, COVERAGE_EPS,
};
use crate::{Error, Result, StftConfig};

/// Streaming setup: geometry, source count, lookahead and per-frame budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StreamConfig {
    pub stft: StftConfig,
    /// Number of sources `J >= 1`.
    pub sources: usize,
    /// Future frames `K >= 0` buffered beyond the one being committed.
    pub lookahead: usize,
    /// Iterations per push; defaults to `round(15 / (K + 1))`.
    pub iterations_per_frame: usize,
    pub phase_init: PhaseInit,
}

impl StreamConfig {
    pub fn new(
        stft: StftConfig,
        sources: usize,
        lookahead: usize,
        phase_init: PhaseInit,
    ) -> Result<Self> {
        if sources == 0 {
            return Err(Error::InvalidConfig("need at least one source".into()));
        }
        Ok(Self {
            stft,
            sources,
            lookahead,
            iterations_per_frame: default_iterations(lookahead),
            phase_init,
        })
    }

    pub fn with_iterations(mut self, iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidConfig(
                "need at least one iteration per frame".into(),
            ));
        }
        self.iterations_per_frame = iterations;
        Ok(self)
    }
}

/// Per-push iteration budget matching a 15-iteration offline run: every frame
/// is visited `K + 1` times, so `round(15 / (K + 1))`, at least 1.
pub fn default_iterations(lookahead: usize) -> usize {
    ((15.0 / (lookahead as f64 + 1.0)).round() as usize).max(1)
}

/// Algorithmic latency in samples: `win_len + K * hop`.
pub fn latency_samples(config: &StreamConfig) -> usize {
    config.stft.win_len + config.lookahead * config.stft.hop
}

/// Windowed spectral mismatch recorded at the start of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IterationLoss {
    /// Index of the frame committed by the push this iteration belongs to.
    pub frame: usize,
    pub iteration: usize,
    pub loss: f64,
}

/// Sliding-window state of one stream. Single-owner: pushes must be
/// serialized per stream; distinct streams are independent.
#[derive(Debug)]
pub struct OnlineSeparator {
    config: StreamConfig,
    analysis: Window,
    synthesis: Window,
    /// Per-sample analysis*synthesis window products.
    products: Vec<f64>,
    /// Per-source overlap-add tails of committed frames, `win_len - hop`
    /// samples ahead of the next commit position.
    past: Vec<Vec<f64>>,
    /// Per-source in-flight frame spectra, oldest first.
    window_spectra: Vec<VecDeque<Vec<Complex64>>>,
    window_mags: Vec<VecDeque<Vec<f64>>>,
    mixture_window: VecDeque<Vec<Complex64>>,
    /// Frames received so far; the next pushed frame gets this index.
    received: usize,
    /// Frames committed so far; the oldest buffered frame has this index.
    committed: usize,
    loss_log: Vec<IterationLoss>,
}

impl OnlineSeparator {
    /// Open a stream: zeroed past tails, empty frame window.
    pub fn open(config: StreamConfig) -> Result<Self> {
        if config.sources == 0 || config.iterations_per_frame == 0 {
            return Err(Error::InvalidConfig(
                "stream needs sources >= 1 and iterations >= 1".into(),
            ));
        }
        let analysis = make_analysis_window(&config.stft);
        let synthesis = make_synthesis_window(&analysis, config.stft.hop)?;
        let products = analysis
            .coefficients
            .iter()
            .zip(&synthesis.coefficients)
            .map(|(a, s)| a * s)
            .collect();
        let tail_len = config.stft.win_len - config.stft.hop;
        Ok(Self {
            analysis,
            synthesis,
            products,
            past: vec![vec![0.0; tail_len]; config.sources],
            window_spectra: vec![VecDeque::new(); config.sources],
            window_mags: vec![VecDeque::new(); config.sources],
            mixture_window: VecDeque::new(),
            received: 0,
            committed: 0,
            loss_log: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    /// Windowed loss recorded at the start of every iteration, for tracing.
    pub fn loss_log(&self) -> &[IterationLoss] {
        &self.loss_log
    }

    /// Number of frames pushed so far.
    pub fn frames_received(&self) -> usize {
        self.received
    }

    /// Feed one new frame: the mixture spectrum and per-source target
    /// magnitudes at the next analysis position. Returns `hop` samples per
    /// source once the lookahead window is full, `None` while it fills.
    pub fn push(
        &mut self,
        mixture_frame: &[Complex64],
        magnitudes: &[&[f64]],
    ) -> Result<Option<Vec<Vec<f64>>>> {
        let bins = self.config.stft.bin_count();
        if mixture_frame.len() != bins {
            return Err(Error::ShapeMismatch(format!(
                "mixture frame has {} bins, config needs {bins}",
                mixture_frame.len()
            )));
        }
        if magnitudes.len() != self.config.sources {
            return Err(Error::ShapeMismatch(format!(
                "{} magnitude frames for {} sources",
                magnitudes.len(),
                self.config.sources
            )));
        }
        if mixture_frame
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite("mixture frame"));
        }
        for mag in magnitudes {
            if mag.len() != bins {
                return Err(Error::ShapeMismatch(format!(
                    "magnitude frame has {} bins, config needs {bins}",
                    mag.len()
                )));
            }
            if mag.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("magnitude frame"));
            }
            if mag.iter().any(|&v| v < 0.0) {
                return Err(Error::NegativeMagnitude("magnitude frame"));
            }
        }

        // Initialize the new frame's phase per source, distribute the
        // column's mixing residual, and buffer it.
        let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(self.config.sources);
        for (j, mag) in magnitudes.iter().enumerate() {
            let phase = match self.config.phase_init {
                PhaseInit::Mixture => mixture_phase(mixture_frame),
                PhaseInit::Sinusoidal => match self.window_spectra[j].back() {
                    // The freshest buffered frame carries the best available
                    // phase estimate after the previous push's iterations.
                    Some(prev) => {
                        sinusoidal_phase(&mixture_phase(prev), mag, &self.config.stft)
                    }
                    None => mixture_phase(mixture_frame),
                },
            };
            columns.push(
                mag.iter()
                    .zip(&phase.phases)
                    .map(|(&v, &phi)| Complex64::from_polar(v, phi))
                    .collect(),
            );
        }
        distribute_column(&mut columns, mixture_frame);
        for (j, (spectrum, mag)) in columns.into_iter().zip(magnitudes).enumerate() {
            self.window_spectra[j].push_back(spectrum);
            self.window_mags[j].push_back(mag.to_vec());
        }
        self.mixture_window.push_back(mixture_frame.to_vec());
        self.received += 1;

        if self.mixture_window.len() == self.config.lookahead + 1 {
            self.iterate_window()?;
            Ok(Some(self.commit()?))
        } else {
            Ok(None)
        }
    }

    /// Drain the remaining buffered frames and emit the final tail. If the
    /// lookahead window never filled, one iteration pass runs over whatever
    /// was buffered first; otherwise the frames keep the estimates from the
    /// last full-window pass.
    pub fn close(mut self) -> Result<Vec<Vec<f64>>> {
        if self.received == 0 {
            return Ok(vec![Vec::new(); self.config.sources]);
        }
        if self.received <= self.config.lookahead {
            self.iterate_window()?;
        }
        let mut out = vec![Vec::new(); self.config.sources];
        while !self.mixture_window.is_empty() {
            for (trail, block) in out.iter_mut().zip(self.commit()?) {
                trail.extend(block);
            }
        }
        let last = self.received - 1;
        let base = self.committed * self.config.stft.hop;
        let tail_len = self.config.stft.win_len - self.config.stft.hop;
        for (trail, past) in out.iter_mut().zip(&self.past) {
            for (n, &raw) in past.iter().enumerate().take(tail_len) {
                let env = self.coverage(base + n, last);
                trail.push(if env > COVERAGE_EPS { raw / env } else { 0.0 });
            }
        }
        Ok(out)
    }

    /// Total analysis weight sample `n` receives from the frames that exist,
    /// assuming `last_frame` is the final one.
    fn coverage(&self, n: usize, last_frame: usize) -> f64 {
        let hop = self.config.stft.hop;
        let win = self.config.stft.win_len;
        let hi = (n / hop).min(last_frame);
        let lo = if n + 1 > win {
            (n + 1 - win).div_ceil(hop)
        } else {
            0
        };
        let mut acc = 0.0;
        for t in lo..=hi {
            acc += self.products[n - t * hop];
        }
        acc
    }

    /// Run the per-push iteration budget on the buffered frames: synthesize
    /// the local segment over the fixed past tail, re-analyze exactly the
    /// buffered frame positions, project magnitudes and distribute the
    /// mixing error.
    fn iterate_window(&mut self) -> Result<()> {
        let stft_cfg = self.config.stft;
        let hop = stft_cfg.hop;
        let win = stft_cfg.win_len;
        let bins = stft_cfg.bin_count();
        let sources = self.config.sources;
        let frames = self.mixture_window.len();
        let seg_len = (frames - 1) * hop + win;

        for iteration in 0..self.config.iterations_per_frame {
            let mut projected: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(sources);
            let mut loss = 0.0;
            for j in 0..sources {
                // Plain overlap-add of the past tail and the buffered frames;
                // the analysis window tapers exactly where the sum is still
                // missing future contributions.
                let mut segment = vec![0.0; seg_len];
                for (m, &v) in self.past[j].iter().enumerate() {
                    segment[m] += v;
                }
                for (k, spectrum) in self.window_spectra[j].iter().enumerate() {
                    let frame = frame_idft(spectrum, &stft_cfg, &self.synthesis)?;
                    for (n, &v) in frame.iter().enumerate() {
                        segment[k * hop + n] += v;
                    }
                }

                let local = stft(
                    &TimeSignal {
                        samples: segment,
                        sample_rate: stft_cfg.sample_rate,
                    },
                    &stft_cfg,
                    &self.analysis,
                )?;
                debug_assert_eq!(local.frames, frames);

                let mut frames_out = Vec::with_capacity(frames);
                for k in 0..frames {
                    let target = &self.window_mags[j][k];
                    let projected_frame: Vec<Complex64> = local
                        .frame(k)
                        .iter()
                        .zip(target.iter())
                        .map(|(&c, &v)| {
                            let d = c.norm() - v;
                            loss += d * d;
                            project_bin(c, v)
                        })
                        .collect();
                    frames_out.push(projected_frame);
                }
                projected.push(frames_out);
            }

            for k in 0..frames {
                let mixture = &self.mixture_window[k];
                for f in 0..bins {
                    let total: Complex64 = projected.iter().map(|p| p[k][f]).sum();
                    let residual = (mixture[f] - total) / sources as f64;
                    for (j, p) in projected.iter().enumerate() {
                        self.window_spectra[j][k][f] = p[k][f] + residual;
                    }
                }
            }

            self.loss_log.push(IterationLoss {
                frame: self.committed,
                iteration,
                loss,
            });
        }
        Ok(())
    }

    /// Commit the oldest buffered frame: synthesize it, emit `hop` samples of
    /// overlap-added, coverage-normalized output and roll the past tail
    /// forward. The committed spectrum is never revisited.
    fn commit(&mut self) -> Result<Vec<Vec<f64>>> {
        let hop = self.config.stft.hop;
        let win = self.config.stft.win_len;
        let tail_len = win - hop;
        let c = self.committed;
        let mut blocks = Vec::with_capacity(self.config.sources);
        for j in 0..self.config.sources {
            let spectrum = self.window_spectra[j]
                .pop_front()
                .expect("commit requires a buffered frame");
            self.window_mags[j].pop_front();
            let frame = frame_idft(&spectrum, &self.config.stft, &self.synthesis)?;

            let mut block = Vec::with_capacity(hop);
            for n in 0..hop {
                let mut raw = frame[n];
                if n < tail_len {
                    raw += self.past[j][n];
                }
                let env = self.coverage(c * hop + n, c);
                block.push(if env > COVERAGE_EPS { raw / env } else { 0.0 });
            }

            let mut tail = vec![0.0; tail_len];
            for (n, slot) in tail.iter_mut().enumerate() {
                *slot = frame[n + hop];
                if n + hop < tail_len {
                    *slot += self.past[j][n + hop];
                }
            }
            self.past[j] = tail;
            blocks.push(block);
        }
        self.mixture_window.pop_front();
        self.committed += 1;
        Ok(blocks)
    }
}
