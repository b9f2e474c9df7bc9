//! Offline multiple-input spectrogram inversion: alternate re-analysis,
//! magnitude projection and mixing-error distribution so the per-source
//! estimates stay consistent with both their target magnitudes and the
//! mixture they must sum to. The objective
//! `sum_j || |STFT(s_j)| - V_j ||^2` is non-increasing over iterations.

use rustfft::num_complex::Complex64;

use crate::phase_init::{mixture_phase, sinusoidal_phase, PhaseFrame};
use crate::stft::{istft, make_analysis_window, make_synthesis_window, overlap_add, stft};
use crate::{Error, Result, Spectrogram, StftConfig, TimeSignal};

/// Bins with magnitude below this keep phase 0 in the projection.
const ZERO_MAG_EPS: f64 = 1e-12;

/// How the initial per-frame phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseInit {
    /// Assign the mixture's phase to every source.
    Mixture,
    /// Advance the previous frame's phase by the peak-refined per-bin
    /// frequency; the first frame falls back to the mixture's phase.
    Sinusoidal,
}

/// One nonnegative magnitude matrix, same frame-major layout as
/// [`Spectrogram`].
#[derive(Debug, Clone)]
pub struct MagnitudeMatrix {
    bins: usize,
    frames: usize,
    values: Vec<f64>,
}

impl MagnitudeMatrix {
    pub fn new(bins: usize, frames: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != bins * frames {
            return Err(Error::ShapeMismatch(format!(
                "magnitude matrix needs {} values, got {}",
                bins * frames,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("magnitude matrix"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::NegativeMagnitude("magnitude matrix"));
        }
        Ok(Self {
            bins,
            frames,
            values,
        })
    }

    pub fn from_spectrogram(spec: &Spectrogram) -> Self {
        Self {
            bins: spec.bin_count(),
            frames: spec.frames,
            values: spec.bins().iter().map(|c| c.norm()).collect(),
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn column(&self, t: usize) -> &[f64] {
        &self.values[t * self.bins..(t + 1) * self.bins]
    }

    pub fn value(&self, bin: usize, t: usize) -> f64 {
        self.values[t * self.bins + bin]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn matches(&self, spec: &Spectrogram) -> bool {
        self.bins == spec.bin_count() && self.frames == spec.frames
    }
}

/// Per-source target magnitudes, all sharing one shape.
#[derive(Debug, Clone)]
pub struct MagnitudeSet {
    sources: Vec<MagnitudeMatrix>,
}

impl MagnitudeSet {
    pub fn new(sources: Vec<MagnitudeMatrix>) -> Result<Self> {
        let first = sources
            .first()
            .ok_or_else(|| Error::InvalidConfig("magnitude set needs at least one source".into()))?;
        let (bins, frames) = (first.bins, first.frames);
        if sources
            .iter()
            .any(|m| m.bins != bins || m.frames != frames)
        {
            return Err(Error::ShapeMismatch(
                "all magnitude matrices must share one shape".into(),
            ));
        }
        Ok(Self { sources })
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    pub fn bins(&self) -> usize {
        self.sources[0].bins
    }

    pub fn frames(&self) -> usize {
        self.sources[0].frames
    }

    pub fn source(&self, j: usize) -> &MagnitudeMatrix {
        &self.sources[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &MagnitudeMatrix> {
        self.sources.iter()
    }
}

/// Output of [`misi`].
#[derive(Debug, Clone)]
pub struct InversionResult {
    /// Final per-source spectra.
    pub spectra: Vec<Spectrogram>,
    /// Per-source time signals; they sum exactly to the mixture.
    pub signals: Vec<TimeSignal>,
    /// Objective value per iterate, `n_iter + 1` entries including the
    /// initialization.
    pub loss_trace: Vec<f64>,
}

/// `sum_j || |STFT(s_j)| - V_j ||^2` with unit weight on every one-sided bin.
pub fn spectral_loss(
    sources: &[TimeSignal],
    targets: &MagnitudeSet,
    config: &StftConfig,
) -> Result<f64> {
    if sources.len() != targets.source_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} signals vs {} magnitude matrices",
            sources.len(),
            targets.source_count()
        )));
    }
    let analysis = make_analysis_window(config);
    let mut total = 0.0;
    for (signal, target) in sources.iter().zip(targets.iter()) {
        let spec = stft(signal, config, &analysis)?;
        if !target.matches(&spec) {
            return Err(Error::ShapeMismatch(format!(
                "magnitudes are {}x{}, spectrogram is {}x{}",
                target.bins(),
                target.frames(),
                spec.bin_count(),
                spec.frames
            )));
        }
        total += magnitude_mismatch(&spec, target);
    }
    Ok(total)
}

pub(crate) fn magnitude_mismatch(spec: &Spectrogram, target: &MagnitudeMatrix) -> f64 {
    spec.bins()
        .iter()
        .zip(target.values())
        .map(|(c, &v)| {
            let d = c.norm() - v;
            d * d
        })
        .sum()
}

/// One bin of the magnitude projection: keep the phase of `z`, take magnitude
/// `v`; a vanishing `z` gets phase 0.
pub(crate) fn project_bin(z: Complex64, v: f64) -> Complex64 {
    let m = z.norm();
    if m < ZERO_MAG_EPS {
        Complex64::new(v, 0.0)
    } else {
        z * (v / m)
    }
}

/// Keep the phases of `z`, replace its magnitudes by `target`. Bins where
/// `|z|` vanishes take phase 0, i.e. the target magnitude on the real axis.
pub fn magnitude_projection(z: &Spectrogram, target: &MagnitudeMatrix) -> Result<Spectrogram> {
    if !target.matches(z) {
        return Err(Error::ShapeMismatch(
            "projection target shape differs from spectrogram".into(),
        ));
    }
    let mut out = z.clone();
    for (c, &v) in out.bins_mut().iter_mut().zip(target.values()) {
        *c = project_bin(*c, v);
    }
    Ok(out)
}

/// Add the scaled mixing residual to every source:
/// `S_j = Y_j + (X - sum_p Y_p) / J`, so the results sum to `X` exactly.
pub fn mix_error_distribute(
    estimates: &[Spectrogram],
    mixture: &Spectrogram,
) -> Result<Vec<Spectrogram>> {
    if estimates.is_empty() {
        return Err(Error::InvalidConfig("no sources to distribute to".into()));
    }
    if estimates.iter().any(|y| !y.same_shape(mixture)) {
        return Err(Error::ShapeMismatch(
            "estimate shape differs from mixture".into(),
        ));
    }
    let count = estimates.len() as f64;
    let mut residual: Vec<Complex64> = mixture.bins().to_vec();
    for y in estimates {
        for (r, c) in residual.iter_mut().zip(y.bins()) {
            *r -= c;
        }
    }
    Ok(estimates
        .iter()
        .map(|y| {
            let mut s = y.clone();
            for (c, r) in s.bins_mut().iter_mut().zip(&residual) {
                *c += r / count;
            }
            s
        })
        .collect())
}

/// Build the initial per-source spectra `V_j exp(i phi)` for the requested
/// phase scheme, one column at a time, distributing each column's mixing
/// residual as soon as it is initialized. Starting from a feasible point
/// keeps the objective non-increasing from the very first iteration, and the
/// column-wise order matches the streaming separator exactly. The sinusoidal
/// scheme unwraps from the previous distributed column's phases.
pub(crate) fn initial_spectra(
    mixture: &Spectrogram,
    targets: &MagnitudeSet,
    scheme: PhaseInit,
) -> Vec<Spectrogram> {
    let config = mixture.config;
    let count = targets.source_count();
    let mut spectra = vec![Spectrogram::zeros(config, mixture.frames); count];
    let mut prev: Vec<Option<PhaseFrame>> = vec![None; count];
    let mut columns: Vec<Vec<Complex64>> = vec![Vec::new(); count];
    for t in 0..mixture.frames {
        for j in 0..count {
            let phase = match scheme {
                PhaseInit::Mixture => mixture_phase(mixture.frame(t)),
                PhaseInit::Sinusoidal => match &prev[j] {
                    None => mixture_phase(mixture.frame(t)),
                    Some(p) => sinusoidal_phase(p, targets.source(j).column(t), &config),
                },
            };
            columns[j] = phase
                .phases
                .iter()
                .enumerate()
                .map(|(f, &phi)| Complex64::from_polar(targets.source(j).value(f, t), phi))
                .collect();
        }
        distribute_column(&mut columns, mixture.frame(t));
        for j in 0..count {
            spectra[j].frame_mut(t).copy_from_slice(&columns[j]);
            prev[j] = Some(mixture_phase(&columns[j]));
        }
    }
    spectra
}

/// In-place mixing distribution of one frame column:
/// `S_j(f) += (X(f) - sum_p S_p(f)) / J`.
pub(crate) fn distribute_column(columns: &mut [Vec<Complex64>], mixture: &[Complex64]) {
    let count = columns.len() as f64;
    for f in 0..mixture.len() {
        let total: Complex64 = columns.iter().map(|c| c[f]).sum();
        let residual = (mixture[f] - total) / count;
        for column in columns.iter_mut() {
            column[f] += residual;
        }
    }
}

/// Offline MISI.
///
/// Starting from `V_j exp(i phi_init)` with the mixing residual distributed,
/// repeat `n_iter` times: re-analyze the synthesized sources, project onto
/// the target magnitudes, distribute the mixing error. Returns the final
/// spectra, time-domain sources (with the residual versus the original
/// mixture distributed so they sum to it exactly), and the objective value
/// of every iterate.
pub fn misi(
    mixture: &TimeSignal,
    targets: &MagnitudeSet,
    config: &StftConfig,
    n_iter: usize,
    init: PhaseInit,
) -> Result<InversionResult> {
    let analysis = make_analysis_window(config);
    let synthesis = make_synthesis_window(&analysis, config.hop)?;
    let mixture_spec = stft(mixture, config, &analysis)?;
    if targets.bins() != mixture_spec.bin_count() || targets.frames() != mixture_spec.frames {
        return Err(Error::ShapeMismatch(format!(
            "magnitudes are {}x{}, mixture spectrogram is {}x{}",
            targets.bins(),
            targets.frames(),
            mixture_spec.bin_count(),
            mixture_spec.frames
        )));
    }

    // Re-analysis of the plain overlap-add synthesis; this is also exactly
    // what the streaming separator computes, so a full-lookahead stream and
    // this loop perform the same iteration.
    let reanalyze = |s: &Spectrogram| -> Result<Spectrogram> {
        let resynth = TimeSignal {
            samples: overlap_add(s, &synthesis)?,
            sample_rate: config.sample_rate,
        };
        stft(&resynth, config, &analysis)
    };

    let mut spectra = initial_spectra(&mixture_spec, targets, init);
    let mut loss_trace = Vec::with_capacity(n_iter + 1);
    for _ in 0..n_iter {
        let consistent: Vec<Spectrogram> =
            spectra.iter().map(&reanalyze).collect::<Result<_>>()?;
        loss_trace.push(
            consistent
                .iter()
                .zip(targets.iter())
                .map(|(z, v)| magnitude_mismatch(z, v))
                .sum(),
        );
        let projected: Vec<Spectrogram> = consistent
            .iter()
            .zip(targets.iter())
            .map(|(z, v)| magnitude_projection(z, v))
            .collect::<Result<_>>()?;
        spectra = mix_error_distribute(&projected, &mixture_spec)?;
    }
    // Objective of the final iterate.
    let mut final_loss = 0.0;
    for (s, v) in spectra.iter().zip(targets.iter()) {
        let z = reanalyze(s)?;
        final_loss += magnitude_mismatch(&z, v);
    }
    loss_trace.push(final_loss);

    // Time-domain outputs plus the mixing distribution against the original
    // mixture, which pins the sum constraint in the sample domain.
    let mut signals: Vec<Vec<f64>> = spectra
        .iter()
        .map(|s| istft(s, &synthesis).map(|t| t.samples))
        .collect::<Result<_>>()?;
    let out_len = signals[0].len().min(mixture.len());
    let count = signals.len() as f64;
    for n in 0..out_len {
        let residual = mixture.samples[n] - signals.iter().map(|s| s[n]).sum::<f64>();
        for s in signals.iter_mut() {
            s[n] += residual / count;
        }
    }
    let signals = signals
        .into_iter()
        .map(|samples| TimeSignal {
            samples,
            sample_rate: config.sample_rate,
        })
        .collect();

    Ok(InversionResult {
        spectra,
        signals,
        loss_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{amplitude_mask, oracle_magnitudes};
    use crate::metrics::si_sdr_improvement;
    use crate::stft::WindowKind;
    use crate::synth::speech_like;

    fn cfg() -> StftConfig {
        StftConfig::new(256, 128, 512, 16_000, WindowKind::HannPeriodic).unwrap()
    }

    fn two_source_fixture(seed: u64, len: usize) -> (Vec<TimeSignal>, TimeSignal) {
        let a = speech_like(seed, 16_000, len, 120.0);
        let b = speech_like(seed.wrapping_add(1000), 16_000, len, 205.0);
        let mix = TimeSignal::new(
            a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect(),
            16_000,
        )
        .unwrap();
        (vec![a, b], mix)
    }

    #[test]
    fn spectral_loss_zero_on_exact_match() {
        let config = cfg();
        let (sources, _) = two_source_fixture(1, 4000);
        let v = oracle_magnitudes(&sources, &config).unwrap();
        let loss = spectral_loss(&sources, &v, &config).unwrap();
        assert!(loss < 1e-18, "loss {loss}");
    }

    #[test]
    fn spectral_loss_of_silence_against_ones() {
        let config = cfg();
        let zero = TimeSignal::new(vec![0.0; 1024], 16_000).unwrap();
        let frames = config.num_frames(1024).unwrap();
        let bins = config.bin_count();
        let ones = MagnitudeSet::new(vec![
            MagnitudeMatrix::new(bins, frames, vec![1.0; bins * frames]).unwrap(),
        ])
        .unwrap();
        let loss = spectral_loss(&[zero], &ones, &config).unwrap();
        assert!((loss - (bins * frames) as f64).abs() < 1e-9);
    }

    #[test]
    fn spectral_loss_matches_scalar_oracle() {
        use rand::{Rng, SeedableRng};
        let config = cfg();
        let (sources, _) = two_source_fixture(3, 1024);
        let analysis = make_analysis_window(&config);
        let specs: Vec<Spectrogram> = sources
            .iter()
            .map(|s| stft(s, &config, &analysis).unwrap())
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mats: Vec<MagnitudeMatrix> = specs
            .iter()
            .map(|s| {
                MagnitudeMatrix::new(
                    s.bin_count(),
                    s.frames,
                    (0..s.bin_count() * s.frames)
                        .map(|_| rng.random_range(0.0..2.0))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let targets = MagnitudeSet::new(mats).unwrap();
        let got = spectral_loss(&sources, &targets, &config).unwrap();

        let mut want = 0.0;
        for (spec, target) in specs.iter().zip(targets.iter()) {
            for t in 0..spec.frames {
                for f in 0..spec.bin_count() {
                    let d = spec.value(f, t).norm() - target.value(f, t);
                    want += d * d;
                }
            }
        }
        assert!((got - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn projection_identity_when_magnitudes_already_match() {
        let config = cfg();
        let (sources, _) = two_source_fixture(5, 2000);
        let analysis = make_analysis_window(&config);
        let z = stft(&sources[0], &config, &analysis).unwrap();
        let v = MagnitudeMatrix::from_spectrogram(&z);
        let y = magnitude_projection(&z, &v).unwrap();
        for (a, b) in y.bins().iter().zip(z.bins()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_zero_spectrogram_takes_phase_zero() {
        let config = cfg();
        let z = Spectrogram::zeros(config, 3);
        let v = MagnitudeMatrix::new(
            config.bin_count(),
            3,
            (0..config.bin_count() * 3).map(|i| i as f64 * 0.01).collect(),
        )
        .unwrap();
        let y = magnitude_projection(&z, &v).unwrap();
        for (c, &m) in y.bins().iter().zip(v.values()) {
            assert_eq!(c.im, 0.0);
            assert!((c.re - m).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_scales_along_the_ray() {
        let config = StftConfig::new(4, 2, 4, 16_000, WindowKind::HannPeriodic).unwrap();
        let mut z = Spectrogram::zeros(config, 1);
        z.frame_mut(0)[1] = Complex64::new(3.0, 4.0);
        let mut values = vec![0.0; config.bin_count()];
        values[1] = 10.0;
        let v = MagnitudeMatrix::new(config.bin_count(), 1, values).unwrap();
        let y = magnitude_projection(&z, &v).unwrap();
        let got = y.value(1, 0);
        assert!((got - Complex64::new(6.0, 8.0)).norm() < 1e-12);
    }

    #[test]
    fn projection_is_closest_point_on_magnitude_set() {
        use rand::{Rng, SeedableRng};
        let config = StftConfig::new(4, 2, 8, 16_000, WindowKind::HannPeriodic).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let frames = 2;
        let n = config.bin_count() * frames;
        let bins: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let z = Spectrogram::from_bins(config, frames, bins).unwrap();
        let v = MagnitudeMatrix::new(
            config.bin_count(),
            frames,
            (0..n).map(|_| rng.random_range(0.0..2.0)).collect(),
        )
        .unwrap();
        let y = magnitude_projection(&z, &v).unwrap();
        let dist: f64 = y
            .bins()
            .iter()
            .zip(z.bins())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();

        // Coarse grid over per-bin phases; the projection must not be beaten.
        let grid = 64;
        let mut best = f64::INFINITY;
        let mut grid_dist = 0.0;
        for (i, zc) in z.bins().iter().enumerate() {
            let mut bin_best = f64::INFINITY;
            for k in 0..grid {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
                let cand = Complex64::from_polar(v.values()[i], phi);
                bin_best = bin_best.min((cand - zc).norm_sqr());
            }
            grid_dist += bin_best;
        }
        best = best.min(grid_dist);
        assert!(dist <= best + 1e-9, "projection {dist} vs grid {best}");
    }

    #[test]
    fn distribute_examples() {
        let config = StftConfig::new(4, 2, 4, 16_000, WindowKind::HannPeriodic).unwrap();
        let mut x = Spectrogram::zeros(config, 1);
        for (i, c) in x.bins_mut().iter_mut().enumerate() {
            *c = Complex64::new(i as f64 + 1.0, -(i as f64));
        }

        // Estimates already summing to the mixture stay untouched.
        let mut y1 = Spectrogram::zeros(config, 1);
        let mut y2 = Spectrogram::zeros(config, 1);
        for i in 0..x.bins().len() {
            y1.bins_mut()[i] = x.bins()[i] * 0.25;
            y2.bins_mut()[i] = x.bins()[i] * 0.75;
        }
        let out = mix_error_distribute(&[y1.clone(), y2.clone()], &x).unwrap();
        for (a, b) in out[0].bins().iter().zip(y1.bins()) {
            assert!((a - b).norm() < 1e-12);
        }

        // A single source is forced to the mixture.
        let out = mix_error_distribute(&[y1.clone()], &x).unwrap();
        for (a, b) in out[0].bins().iter().zip(x.bins()) {
            assert!((a - b).norm() < 1e-12);
        }

        // Zero estimates split the mixture evenly.
        let zero = Spectrogram::zeros(config, 1);
        let out = mix_error_distribute(&[zero.clone(), zero], &x).unwrap();
        for (a, b) in out[1].bins().iter().zip(x.bins()) {
            assert!((a - b * 0.5).norm() < 1e-12);
        }
    }

    #[test]
    fn distribute_enforces_sum_constraint() {
        use rand::{Rng, SeedableRng};
        let config = cfg();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let frames = 4;
        let n = config.bin_count() * frames;
        let rand_spec = |rng: &mut rand_chacha::ChaCha8Rng| {
            Spectrogram::from_bins(
                config,
                frames,
                (0..n)
                    .map(|_| {
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    })
                    .collect(),
            )
            .unwrap()
        };
        let x = rand_spec(&mut rng);
        let ys = [rand_spec(&mut rng), rand_spec(&mut rng), rand_spec(&mut rng)];
        let out = mix_error_distribute(&ys, &x).unwrap();
        for i in 0..n {
            let total: Complex64 = out.iter().map(|s| s.bins()[i]).sum();
            assert!((total - x.bins()[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn misi_zero_iterations_yields_masked_initialization() {
        let config = cfg();
        let (sources, mix) = two_source_fixture(7, 4000);
        let v = oracle_magnitudes(&sources, &config).unwrap();
        let result = misi(&mix, &v, &config, 0, PhaseInit::Mixture).unwrap();
        assert_eq!(result.loss_trace.len(), 1);

        // Spectra are V_j at the mixture's phase plus one mixing
        // distribution.
        let analysis = make_analysis_window(&config);
        let x = stft(&mix, &config, &analysis).unwrap();
        for t in 0..x.frames {
            let phases = mixture_phase(x.frame(t));
            for f in 0..x.bin_count() {
                let raw: Vec<Complex64> = (0..2)
                    .map(|j| Complex64::from_polar(v.source(j).value(f, t), phases.phases[f]))
                    .collect();
                let residual = (x.value(f, t) - raw[0] - raw[1]) / 2.0;
                for (j, spec) in result.spectra.iter().enumerate() {
                    assert!((spec.value(f, t) - (raw[j] + residual)).norm() < 1e-9);
                }
            }
        }
        // Time outputs still sum to the mixture exactly.
        let len = result.signals[0].len();
        for n in 0..len.min(mix.len()) {
            let total: f64 = result.signals.iter().map(|s| s.samples[n]).sum();
            assert!((total - mix.samples[n]).abs() < 1e-9);
        }
    }

    #[test]
    fn misi_true_phase_initialization_is_a_fixpoint() {
        let config = cfg();
        let (sources, mix) = two_source_fixture(9, 4000);
        let v = oracle_magnitudes(&sources, &config).unwrap();

        // Start from the true spectra: the loss is zero at every iterate and
        // the outputs reproduce the true sources.
        let analysis = make_analysis_window(&config);
        let synthesis = make_synthesis_window(&analysis, config.hop).unwrap();
        let true_specs: Vec<Spectrogram> = sources
            .iter()
            .map(|s| stft(s, &config, &analysis).unwrap())
            .collect();
        let _ = synthesis;

        // Drive the misi iteration with the true phases swapped in:
        // V_j exp(i angle(S_true_j)) equals S_true_j here. The sources start
        // and end in silence, so the overlap-add re-synthesis reproduces them
        // exactly and the loss stays at zero.
        let result = {
            let mut spectra = true_specs.clone();
            let mixture_spec = stft(&mix, &config, &analysis).unwrap();
            for _ in 0..5 {
                let consistent: Vec<Spectrogram> = spectra
                    .iter()
                    .map(|s| {
                        let resynth = TimeSignal {
                            samples: overlap_add(s, &synthesis).unwrap(),
                            sample_rate: config.sample_rate,
                        };
                        stft(&resynth, &config, &analysis).unwrap()
                    })
                    .collect();
                let loss: f64 = consistent
                    .iter()
                    .zip(v.iter())
                    .map(|(z, t)| magnitude_mismatch(z, t))
                    .sum();
                assert!(loss < 1e-16, "loss {loss}");
                let projected: Vec<Spectrogram> = consistent
                    .iter()
                    .zip(v.iter())
                    .map(|(z, t)| magnitude_projection(z, t).unwrap())
                    .collect();
                spectra = mix_error_distribute(&projected, &mixture_spec).unwrap();
            }
            spectra
        };
        for (spec, src) in result.iter().zip(&sources) {
            let rec = istft(spec, &make_synthesis_window(&analysis, config.hop).unwrap()).unwrap();
            for n in 0..rec.len() {
                assert!((rec.samples[n] - src.samples[n]).abs() < 1e-8, "sample {n}");
            }
        }
    }

    #[test]
    fn misi_loss_is_monotone_and_beats_amplitude_mask() {
        let config = cfg();
        let (sources, mix) = two_source_fixture(11, 16_000);
        let v = oracle_magnitudes(&sources, &config).unwrap();
        let result = misi(&mix, &v, &config, 15, PhaseInit::Mixture).unwrap();
        assert_eq!(result.loss_trace.len(), 16);
        for k in 0..result.loss_trace.len() - 1 {
            assert!(
                result.loss_trace[k + 1] <= result.loss_trace[k] + 1e-9,
                "iteration {k}: {} -> {}",
                result.loss_trace[k],
                result.loss_trace[k + 1]
            );
        }

        let analysis = make_analysis_window(&config);
        let synthesis = make_synthesis_window(&analysis, config.hop).unwrap();
        let x = stft(&mix, &config, &analysis).unwrap();
        let masked = amplitude_mask(&v, &x).unwrap();
        let mut misi_mean = 0.0;
        let mut mask_mean = 0.0;
        for j in 0..2 {
            let am = istft(&masked[j], &synthesis).unwrap();
            misi_mean += si_sdr_improvement(&result.signals[j], &sources[j], &mix).unwrap();
            mask_mean += si_sdr_improvement(&am, &sources[j], &mix).unwrap();
        }
        assert!(
            misi_mean / 2.0 > mask_mean / 2.0,
            "misi {misi_mean} vs mask {mask_mean}"
        );
    }

    #[test]
    fn misi_single_source_returns_the_mixture() {
        let config = cfg();
        let (_, mix) = two_source_fixture(13, 4000);
        let frames = config.num_frames(mix.len()).unwrap();
        let bins = config.bin_count();
        // Arbitrary magnitudes: the mixing constraint overrides them at J=1.
        let v = MagnitudeSet::new(vec![
            MagnitudeMatrix::new(bins, frames, vec![0.3; bins * frames]).unwrap(),
        ])
        .unwrap();
        for n_iter in [0, 3] {
            let result = misi(&mix, &v, &config, n_iter, PhaseInit::Mixture).unwrap();
            let out = &result.signals[0];
            for n in 0..out.len().min(mix.len()) {
                assert!(
                    (out.samples[n] - mix.samples[n]).abs() < 1e-9,
                    "n_iter {n_iter} sample {n}"
                );
            }
        }
    }

    #[test]
    fn misi_rejects_mismatched_shapes() {
        let config = cfg();
        let (_, mix) = two_source_fixture(15, 4000);
        let v = MagnitudeSet::new(vec![
            MagnitudeMatrix::new(config.bin_count(), 3, vec![0.0; config.bin_count() * 3]).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            misi(&mix, &v, &config, 1, PhaseInit::Mixture),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
