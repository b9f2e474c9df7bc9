//! Amplitude-mask baseline and oracle magnitude computation.

use crate::inversion::{MagnitudeMatrix, MagnitudeSet};
use crate::stft::{make_analysis_window, stft};
use crate::{Error, Result, Spectrogram, StftConfig, TimeSignal};

/// Additive floor in the mask denominator; keeps silent bins at 0/eps = 0
/// without touching audible ones.
const MASK_EPS: f64 = 1e-12;

/// Soft amplitude mask: `S_j = V_j / (sum_p V_p + eps) * X`.
pub fn amplitude_mask(targets: &MagnitudeSet, mixture: &Spectrogram) -> Result<Vec<Spectrogram>> {
    if targets.bins() != mixture.bin_count() || targets.frames() != mixture.frames {
        return Err(Error::ShapeMismatch(format!(
            "magnitudes are {}x{}, mixture is {}x{}",
            targets.bins(),
            targets.frames(),
            mixture.bin_count(),
            mixture.frames
        )));
    }
    let n = mixture.bins().len();
    let mut denom = vec![MASK_EPS; n];
    for source in targets.iter() {
        for (d, &v) in denom.iter_mut().zip(source.values()) {
            *d += v;
        }
    }
    Ok(targets
        .iter()
        .map(|source| {
            let mut masked = mixture.clone();
            for ((c, &v), &d) in masked.bins_mut().iter_mut().zip(source.values()).zip(&denom) {
                *c *= v / d;
            }
            masked
        })
        .collect())
}

/// Ground-truth magnitudes `V_j = |STFT(s_j)|` for equal-length sources.
pub fn oracle_magnitudes(sources: &[TimeSignal], config: &StftConfig) -> Result<MagnitudeSet> {
    let first_len = sources
        .first()
        .ok_or_else(|| Error::InvalidConfig("need at least one source".into()))?
        .len();
    if sources.iter().any(|s| s.len() != first_len) {
        return Err(Error::ShapeMismatch(
            "oracle sources must have equal lengths".into(),
        ));
    }
    let analysis = make_analysis_window(config);
    let matrices = sources
        .iter()
        .map(|s| Ok(MagnitudeMatrix::from_spectrogram(&stft(s, config, &analysis)?)))
        .collect::<Result<Vec<_>>>()?;
    MagnitudeSet::new(matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::spectral_loss;
    use crate::stft::WindowKind;
    use crate::synth::speech_like;
    use rustfft::num_complex::Complex64;

    fn cfg() -> StftConfig {
        StftConfig::new(256, 128, 512, 16_000, WindowKind::HannPeriodic).unwrap()
    }

    #[test]
    fn single_source_mask_passes_the_mixture_through() {
        let config = cfg();
        let src = speech_like(1, 16_000, 2000, 150.0);
        let analysis = make_analysis_window(&config);
        let x = stft(&src, &config, &analysis).unwrap();
        let v = oracle_magnitudes(&[src], &config).unwrap();
        let masked = amplitude_mask(&v, &x).unwrap();
        for (a, b) in masked[0].bins().iter().zip(x.bins()) {
            // |X| eps / (|X| + eps) is bounded by the eps floor itself.
            assert!((a - b).norm() <= 1e-11);
        }
    }

    #[test]
    fn equal_magnitudes_split_the_mixture_in_half() {
        let config = cfg();
        let src = speech_like(2, 16_000, 2000, 150.0);
        let analysis = make_analysis_window(&config);
        let x = stft(&src, &config, &analysis).unwrap();
        let v1 = MagnitudeMatrix::from_spectrogram(&x);
        let v = MagnitudeSet::new(vec![v1.clone(), v1]).unwrap();
        let masked = amplitude_mask(&v, &x).unwrap();
        for (a, b) in masked[0].bins().iter().zip(x.bins()) {
            assert!((a - b * 0.5).norm() <= 1e-11);
        }
    }

    #[test]
    fn mask_splits_proportionally() {
        let config = StftConfig::new(4, 2, 4, 16_000, WindowKind::HannPeriodic).unwrap();
        let bins = config.bin_count();
        let mut x = Spectrogram::zeros(config, 1);
        x.frame_mut(0)[1] = Complex64::new(8.0, 0.0);
        let mut a = vec![0.0; bins];
        a[1] = 3.0;
        let mut b = vec![0.0; bins];
        b[1] = 1.0;
        let v = MagnitudeSet::new(vec![
            MagnitudeMatrix::new(bins, 1, a).unwrap(),
            MagnitudeMatrix::new(bins, 1, b).unwrap(),
        ])
        .unwrap();
        let masked = amplitude_mask(&v, &x).unwrap();
        assert!((masked[0].value(1, 0).re - 6.0).abs() < 1e-9);
        assert!((masked[1].value(1, 0).re - 2.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_magnitudes_of_silence_are_zero() {
        let config = cfg();
        let zero = TimeSignal::new(vec![0.0; 1000], 16_000).unwrap();
        let v = oracle_magnitudes(&[zero], &config).unwrap();
        assert!(v.source(0).values().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn oracle_magnitudes_zero_the_spectral_loss() {
        let config = cfg();
        let sources = vec![
            speech_like(3, 16_000, 3000, 120.0),
            speech_like(4, 16_000, 3000, 210.0),
        ];
        let v = oracle_magnitudes(&sources, &config).unwrap();
        let loss = spectral_loss(&sources, &v, &config).unwrap();
        assert!(loss < 1e-18);
    }

    #[test]
    fn oracle_magnitudes_match_naive_dft() {
        let config = StftConfig::new(32, 16, 64, 16_000, WindowKind::HannPeriodic).unwrap();
        let src = speech_like(5, 16_000, 128, 500.0);
        let v = oracle_magnitudes(std::slice::from_ref(&src), &config).unwrap();
        let analysis = make_analysis_window(&config);
        let frames = config.num_frames(src.len()).unwrap();
        for t in 0..frames {
            for f in 0..config.bin_count() {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..config.win_len {
                    let angle =
                        -2.0 * std::f64::consts::PI * f as f64 * n as f64 / config.dft_size as f64;
                    acc += Complex64::new(angle.cos(), angle.sin())
                        * (src.samples[t * config.hop + n] * analysis.coefficients[n]);
                }
                assert!((v.source(0).value(f, t) - acc.norm()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn oracle_magnitudes_reject_length_mismatch() {
        let config = cfg();
        let a = TimeSignal::new(vec![0.0; 1000], 16_000).unwrap();
        let b = TimeSignal::new(vec![0.0; 999], 16_000).unwrap();
        assert!(matches!(
            oracle_magnitudes(&[a, b], &config),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
