//! Deterministic speech-like test signals: a harmonic stack with vibrato and
//! pitch drift under a syllabic amplitude envelope, plus a low level of
//! colored noise. Signals start and end at exactly zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::TimeSignal;

/// Generate `len` samples of a voiced, speech-like signal around `f0_hz`.
/// The same seed always produces the same samples.
pub fn speech_like(seed: u64, sample_rate: u32, len: usize, f0_hz: f64) -> TimeSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = sample_rate as f64;
    let tau = 2.0 * std::f64::consts::PI;

    let vibrato_rate = rng.random_range(3.0..6.5);
    let vibrato_depth = rng.random_range(0.003..0.012);
    // Intonation: a slow but wide pitch contour, like a spoken phrase.
    let drift_rate = rng.random_range(0.6..1.6);
    let drift_depth = rng.random_range(0.04..0.10);
    let drift_phase = rng.random_range(0.0..tau);
    let vibrato_phase = rng.random_range(0.0..tau);
    let syllable_rate = rng.random_range(2.5..6.0);
    let syllable_phase = rng.random_range(0.0..tau);

    let harmonic_count = 12;
    let gains: Vec<f64> = (0..harmonic_count)
        .map(|h| rng.random_range(0.4..1.0) / (h as f64 + 1.0).powf(0.8))
        .collect();
    let harmonic_phases: Vec<f64> = (0..harmonic_count).map(|_| rng.random_range(0.0..tau)).collect();
    // Formant-like movement: each partial's gain swells and fades on its own
    // slow cycle.
    let formant_rates: Vec<f64> = (0..harmonic_count)
        .map(|_| rng.random_range(0.5..2.5))
        .collect();
    let formant_phases: Vec<f64> = (0..harmonic_count).map(|_| rng.random_range(0.0..tau)).collect();

    let noise_gain = 0.02;
    let mut noise_state = 0.0;
    // Utterances begin and end in silence: a 20 ms margin of exact zeros,
    // then a raised-cosine attack/release.
    let margin = (sample_rate as usize / 50).min(len / 8).max(1);
    let ramp = margin;

    let mut theta = 0.0;
    let mut samples = Vec::with_capacity(len);
    for n in 0..len {
        let t = n as f64 / fs;
        let f0 = f0_hz
            * (1.0
                + vibrato_depth * (tau * vibrato_rate * t + vibrato_phase).sin()
                + drift_depth * (tau * drift_rate * t + drift_phase).sin());
        theta += tau * f0 / fs;

        let mut voiced = 0.0;
        for (h, (&g, &p)) in gains.iter().zip(&harmonic_phases).enumerate() {
            let k = (h + 1) as f64;
            if k * f0 < 0.45 * fs {
                let swell =
                    0.3 + 0.7 * (0.5 - 0.5 * (tau * formant_rates[h] * t + formant_phases[h]).cos());
                voiced += g * swell * (k * theta + p).sin();
            }
        }

        // One-pole lowpassed noise floor.
        noise_state = 0.92 * noise_state + 0.08 * rng.random_range(-1.0..1.0);
        let raw = voiced + noise_gain * noise_state * 20.0;

        // Syllabic gating: voicing nearly vanishes between bumps, the way
        // speech alternates syllables and pauses.
        let bump = 0.5 - 0.5 * (tau * syllable_rate * t + syllable_phase).cos();
        let envelope = 0.02 + 0.98 * bump * bump * bump;
        let gate = if n < margin || n + margin >= len {
            0.0
        } else {
            let fade_in = if n < margin + ramp {
                0.5 - 0.5 * (std::f64::consts::PI * (n - margin) as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            let fade_out = if n + margin + ramp >= len {
                let k = (len - margin - n) as f64;
                0.5 - 0.5 * (std::f64::consts::PI * k / ramp as f64).cos()
            } else {
                1.0
            };
            fade_in * fade_out
        };
        samples.push(raw * envelope * gate);
    }

    // Fixed RMS so mixtures of two voices sit well inside [-1, 1].
    let rms = (samples.iter().map(|s| s * s).sum::<f64>() / len.max(1) as f64).sqrt();
    if rms > 0.0 {
        let scale = 0.08 / rms;
        for s in samples.iter_mut() {
            *s *= scale;
        }
    }
    TimeSignal {
        samples,
        sample_rate,
    }
}

/// A two-voice mixture in different pitch registers, plus its sources.
pub fn speech_like_pair(seed: u64, sample_rate: u32, len: usize) -> (Vec<TimeSignal>, TimeSignal) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let low = rng.random_range(85.0..115.0);
    let high = rng.random_range(195.0..255.0);
    let a = speech_like(seed.wrapping_mul(2).wrapping_add(1), sample_rate, len, low);
    let b = speech_like(seed.wrapping_mul(2).wrapping_add(2), sample_rate, len, high);
    let mixture = TimeSignal {
        samples: a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| x + y)
            .collect(),
        sample_rate,
    };
    (vec![a, b], mixture)
}
