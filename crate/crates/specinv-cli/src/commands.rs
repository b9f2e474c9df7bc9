use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::Serialize;

use specinv::streaming::default_iterations;
use specinv::{
    amplitude_mask, istft, latency_samples, make_analysis_window, make_synthesis_window, misi,
    oracle_magnitudes, si_sdr, si_sdr_improvement, stft, MagnitudeMatrix, MagnitudeSet,
    OnlineSeparator, PhaseInit, Spectrogram, StftConfig, StreamConfig, TimeSignal,
};

use crate::wav::{read_mono_wav, write_mono_wav_f32, write_mono_wav_pcm16};
use crate::{ensure_out_dir, magfile, AppError, PhaseInitArg, StftArgs};

const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Input WAV (mono, 16-bit PCM or 32-bit float).
    input: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    stft: StftArgs,
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), AppError> {
    let audio = read_mono_wav(&args.input)?;
    let config = args.stft.to_config(audio.sample_rate)?;
    let signal = TimeSignal::new(audio.samples, audio.sample_rate)?;
    let analysis = make_analysis_window(&config);
    let spec = stft(&signal, &config, &analysis)?;
    let targets = MagnitudeSet::new(vec![MagnitudeMatrix::from_spectrogram(&spec)])?;

    ensure_out_dir(&args.out)?;
    let stem = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "analysis".into());
    let mag_path = args.out.join(format!("{stem}.mspc"));
    let phase_path = args.out.join(format!("{stem}.mphs"));
    magfile::write_magnitudes(&mag_path, &targets)?;
    let columns: Vec<Vec<Vec<(f64, f64)>>> = vec![(0..spec.frames)
        .map(|t| spec.frame(t).iter().map(|c| (c.re, c.im)).collect())
        .collect()];
    magfile::write_phases(&phase_path, spec.bin_count(), spec.frames, &columns)?;
    println!(
        "analyzed {} -> {} ({} bins x {} frames), sidecar {}",
        args.input.display(),
        mag_path.display(),
        spec.bin_count(),
        spec.frames,
        phase_path.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct SynthesizeArgs {
    /// Magnitude file written by `analyze` or an external estimator.
    #[arg(long)]
    magnitudes: PathBuf,
    /// Complex sidecar providing the phases.
    #[arg(long)]
    phases: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
    /// Write 16-bit PCM instead of 32-bit float.
    #[arg(long)]
    pcm16: bool,
    #[command(flatten)]
    stft: StftArgs,
}

pub fn synthesize(args: SynthesizeArgs) -> Result<(), AppError> {
    let targets = magfile::read_magnitudes(&args.magnitudes)?;
    let phases = magfile::read_phases(&args.phases)?;
    if phases.bins != targets.bins()
        || phases.frames != targets.frames()
        || phases.columns.len() != targets.source_count()
    {
        return Err(AppError::data(format!(
            "{} and {} disagree on dimensions",
            args.magnitudes.display(),
            args.phases.display()
        )));
    }
    let config = args.stft.to_config(args.sample_rate)?;
    if config.bin_count() != targets.bins() {
        return Err(AppError::data(format!(
            "magnitude file has {} bins but the analysis configuration needs {}",
            targets.bins(),
            config.bin_count()
        )));
    }
    let analysis = make_analysis_window(&config);
    let synthesis =
        make_synthesis_window(&analysis, config.hop).map_err(|e| AppError::data(e.to_string()))?;
    ensure_out_dir(&args.out)?;
    for j in 0..targets.source_count() {
        let mut spec = Spectrogram::zeros(config, targets.frames());
        for t in 0..targets.frames() {
            let column = &phases.columns[j][t];
            for (f, slot) in spec.frame_mut(t).iter_mut().enumerate() {
                let (re, im) = column[f];
                let phase = if re == 0.0 && im == 0.0 {
                    0.0
                } else {
                    im.atan2(re)
                };
                *slot = specinv::Complex64::from_polar(targets.source(j).value(f, t), phase);
            }
        }
        let signal = istft(&spec, &synthesis)?;
        let path = args.out.join(format!("synthesized_src{j}.wav"));
        if args.pcm16 {
            write_mono_wav_pcm16(&path, &signal.samples, args.sample_rate)?;
        } else {
            write_mono_wav_f32(&path, &signal.samples, args.sample_rate)?;
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    /// Ground-truth sources are given; magnitudes are their true spectra.
    Oracle,
    /// A premixed mixture plus externally estimated magnitudes.
    External,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Am,
    Misi,
    Omisi,
}

#[derive(Args)]
pub struct SeparateArgs {
    /// Source WAVs (oracle scenario, at least one).
    sources: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScenarioArg::Oracle)]
    scenario: ScenarioArg,
    /// Premixed mixture WAV (external scenario).
    #[arg(long)]
    mixture: Option<PathBuf>,
    /// Magnitude file with one matrix per source (external scenario).
    #[arg(long)]
    magnitudes: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [AlgorithmArg::Am, AlgorithmArg::Misi])]
    algorithms: Vec<AlgorithmArg>,
    /// Lookahead frames for the streaming separator; repeat for several runs.
    #[arg(long = "lookahead")]
    lookahead: Vec<usize>,
    /// Offline iteration budget; the streaming budget is round(iters/(K+1)).
    #[arg(long, default_value_t = 15)]
    iters: usize,
    #[arg(long, value_enum, default_value_t = PhaseInitArg::Mixture)]
    phase_init: PhaseInitArg,
    #[arg(long)]
    out: PathBuf,
    /// Recorded in the report; separation itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rescale stems to peak 0.99 when they would clip.
    #[arg(long)]
    normalize: bool,
    /// Rescale sources 2.. to this SNR against source 1 before mixing.
    #[arg(long)]
    snr_db: Option<f64>,
    #[command(flatten)]
    stft: StftArgs,
}

#[derive(Serialize)]
struct RunReport {
    algorithm: String,
    lookahead: Option<usize>,
    iterations: Option<usize>,
    latency_samples: Option<usize>,
    stems: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    si_sdr_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    si_sdri_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_si_sdri_db: Option<f64>,
}

#[derive(Serialize)]
struct SeparationFileReport {
    schema_version: u32,
    seed: u64,
    sample_rate: u32,
    scenario: &'static str,
    stft: StftConfig,
    source_count: usize,
    runs: Vec<RunReport>,
}

struct Experiment {
    config: StftConfig,
    mixture: TimeSignal,
    mixture_spec: Spectrogram,
    targets: MagnitudeSet,
    references: Option<Vec<TimeSignal>>,
}

fn load_oracle_experiment(args: &SeparateArgs) -> Result<Experiment, AppError> {
    if args.sources.is_empty() {
        return Err(AppError::usage(
            "oracle scenario needs at least one source WAV",
        ));
    }
    let mut raw = Vec::with_capacity(args.sources.len());
    for path in &args.sources {
        raw.push((path, read_mono_wav(path)?));
    }
    let sample_rate = raw[0].1.sample_rate;
    if let Some((path, _)) = raw.iter().find(|(_, w)| w.sample_rate != sample_rate) {
        return Err(AppError::data(format!(
            "{}: sample rate differs from the first source; resampling is not supported",
            path.display()
        )));
    }
    let len = raw.iter().map(|(_, w)| w.samples.len()).min().unwrap();
    let mut sources: Vec<TimeSignal> = raw
        .into_iter()
        .map(|(_, w)| TimeSignal::new(w.samples[..len].to_vec(), sample_rate))
        .collect::<Result<_, _>>()?;
    if let Some(snr_db) = args.snr_db {
        let energy: Vec<f64> = sources
            .iter()
            .map(|s| s.samples.iter().map(|x| x * x).sum::<f64>())
            .collect();
        for (j, source) in sources.iter_mut().enumerate().skip(1) {
            if energy[j] > 0.0 {
                let scale = (energy[0] / (energy[j] * 10f64.powf(snr_db / 10.0))).sqrt();
                for s in source.samples.iter_mut() {
                    *s *= scale;
                }
            }
        }
    }
    let mixture = TimeSignal::new(
        (0..len)
            .map(|n| sources.iter().map(|s| s.samples[n]).sum())
            .collect(),
        sample_rate,
    )?;
    let config = args.stft.to_config(sample_rate)?;
    let targets = oracle_magnitudes(&sources, &config)?;
    let analysis = make_analysis_window(&config);
    let mixture_spec = stft(&mixture, &config, &analysis)?;
    Ok(Experiment {
        config,
        mixture,
        mixture_spec,
        targets,
        references: Some(sources),
    })
}

fn load_external_experiment(args: &SeparateArgs) -> Result<Experiment, AppError> {
    let mixture_path = args
        .mixture
        .as_ref()
        .ok_or_else(|| AppError::usage("external scenario needs --mixture"))?;
    let magnitudes_path = args
        .magnitudes
        .as_ref()
        .ok_or_else(|| AppError::usage("external scenario needs --magnitudes"))?;
    let audio = read_mono_wav(mixture_path)?;
    let config = args.stft.to_config(audio.sample_rate)?;
    let mixture = TimeSignal::new(audio.samples, audio.sample_rate)?;
    let analysis = make_analysis_window(&config);
    let mixture_spec = stft(&mixture, &config, &analysis)?;
    let targets = magfile::read_magnitudes(magnitudes_path)?;
    if targets.bins() != mixture_spec.bin_count() || targets.frames() != mixture_spec.frames {
        return Err(AppError::data(format!(
            "magnitudes are {}x{} but the mixture analyzes to {}x{}",
            targets.bins(),
            targets.frames(),
            mixture_spec.bin_count(),
            mixture_spec.frames
        )));
    }
    Ok(Experiment {
        config,
        mixture,
        mixture_spec,
        targets,
        references: None,
    })
}

pub fn run_stream_frames(
    config: &StftConfig,
    mixture_spec: &Spectrogram,
    targets: &MagnitudeSet,
    lookahead: usize,
    iterations: usize,
    phase_init: PhaseInit,
    mut on_push: impl FnMut(usize, f64),
) -> Result<(Vec<TimeSignal>, Vec<specinv::streaming::IterationLoss>), AppError> {
    let stream_config = StreamConfig::new(*config, targets.source_count(), lookahead, phase_init)?
        .with_iterations(iterations)?;
    let mut separator = OnlineSeparator::open(stream_config)?;
    let mut out = vec![Vec::new(); targets.source_count()];
    for t in 0..mixture_spec.frames {
        let mags: Vec<&[f64]> = (0..targets.source_count())
            .map(|j| targets.source(j).column(t))
            .collect();
        let began = Instant::now();
        let emitted = separator.push(mixture_spec.frame(t), &mags)?;
        on_push(t, began.elapsed().as_secs_f64() * 1e3);
        if let Some(blocks) = emitted {
            for (o, b) in out.iter_mut().zip(blocks) {
                o.extend(b);
            }
        }
    }
    let losses = separator.loss_log().to_vec();
    for (o, trail) in out.iter_mut().zip(separator.close()?) {
        o.extend(trail);
    }
    let signals = out
        .into_iter()
        .map(|samples| TimeSignal::new(samples, config.sample_rate))
        .collect::<Result<_, _>>()?;
    Ok((signals, losses))
}

fn write_stems(
    out: &Path,
    label: &str,
    stems: &[TimeSignal],
    normalize: bool,
) -> Result<Vec<String>, AppError> {
    let peak = stems
        .iter()
        .flat_map(|s| s.samples.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let scale = if peak > 1.0 {
        if normalize {
            0.99 / peak
        } else {
            eprintln!("warning: {label} stems peak at {peak:.3}; pass --normalize to rescale");
            1.0
        }
    } else {
        1.0
    };
    let mut paths = Vec::with_capacity(stems.len());
    for (j, stem) in stems.iter().enumerate() {
        let path = out.join(format!("stem_{label}_src{j}.wav"));
        let samples: Vec<f64> = stem.samples.iter().map(|s| s * scale).collect();
        write_mono_wav_f32(&path, &samples, stem.sample_rate)?;
        paths.push(path.to_string_lossy().into_owned());
    }
    Ok(paths)
}

fn score(
    estimates: &[TimeSignal],
    experiment: &Experiment,
) -> Result<(Option<Vec<f64>>, Option<Vec<f64>>, Option<f64>), AppError> {
    let Some(references) = &experiment.references else {
        return Ok((None, None, None));
    };
    let mut sdr = Vec::with_capacity(estimates.len());
    let mut sdri = Vec::with_capacity(estimates.len());
    for (est, reference) in estimates.iter().zip(references) {
        sdr.push(si_sdr(est, reference)?);
        sdri.push(si_sdr_improvement(est, reference, &experiment.mixture)?);
    }
    let mean = sdri.iter().sum::<f64>() / sdri.len().max(1) as f64;
    Ok((Some(sdr), Some(sdri), Some(mean)))
}

pub fn separate(args: SeparateArgs) -> Result<(), AppError> {
    if args.algorithms.is_empty() {
        return Err(AppError::usage("--algorithms must name at least one of am,misi,omisi"));
    }
    let experiment = match args.scenario {
        ScenarioArg::Oracle => load_oracle_experiment(&args)?,
        ScenarioArg::External => load_external_experiment(&args)?,
    };
    ensure_out_dir(&args.out)?;
    let config = experiment.config;
    let analysis = make_analysis_window(&config);
    let synthesis =
        make_synthesis_window(&analysis, config.hop).map_err(|e| AppError::data(e.to_string()))?;
    let phase_init: PhaseInit = args.phase_init.into();
    let lookaheads = if args.lookahead.is_empty() {
        vec![1usize]
    } else {
        args.lookahead.clone()
    };

    let mut runs = Vec::new();
    for algorithm in &args.algorithms {
        match algorithm {
            AlgorithmArg::Am => {
                let masked = amplitude_mask(&experiment.targets, &experiment.mixture_spec)?;
                let stems: Vec<TimeSignal> = masked
                    .iter()
                    .map(|s| istft(s, &synthesis))
                    .collect::<Result<_, _>>()?;
                let paths = write_stems(&args.out, "am", &stems, args.normalize)?;
                let (sdr, sdri, mean) = score(&stems, &experiment)?;
                runs.push(RunReport {
                    algorithm: "am".into(),
                    lookahead: None,
                    iterations: None,
                    latency_samples: Some(config.win_len),
                    stems: paths,
                    loss_csv: None,
                    si_sdr_db: sdr,
                    si_sdri_db: sdri,
                    mean_si_sdri_db: mean,
                });
            }
            AlgorithmArg::Misi => {
                let result = misi(
                    &experiment.mixture,
                    &experiment.targets,
                    &config,
                    args.iters,
                    phase_init,
                )?;
                let paths = write_stems(&args.out, "misi", &result.signals, args.normalize)?;
                let mut csv = String::from("iteration,loss\n");
                for (i, loss) in result.loss_trace.iter().enumerate() {
                    let _ = writeln!(csv, "{i},{loss}");
                }
                let csv_path = args.out.join("loss_misi.csv");
                std::fs::write(&csv_path, csv)?;
                let (sdr, sdri, mean) = score(&result.signals, &experiment)?;
                runs.push(RunReport {
                    algorithm: "misi".into(),
                    lookahead: None,
                    iterations: Some(args.iters),
                    latency_samples: None,
                    stems: paths,
                    loss_csv: Some(csv_path.to_string_lossy().into_owned()),
                    si_sdr_db: sdr,
                    si_sdri_db: sdri,
                    mean_si_sdri_db: mean,
                });
            }
            AlgorithmArg::Omisi => {
                for &k in &lookaheads {
                    let iterations =
                        ((args.iters as f64 / (k as f64 + 1.0)).round() as usize).max(1);
                    let (stems, losses) = run_stream_frames(
                        &config,
                        &experiment.mixture_spec,
                        &experiment.targets,
                        k,
                        iterations,
                        phase_init,
                        |_, _| {},
                    )?;
                    let label = format!("omisi_k{k}");
                    let paths = write_stems(&args.out, &label, &stems, args.normalize)?;
                    let mut csv = String::from("frame,iteration,loss\n");
                    for entry in &losses {
                        let _ = writeln!(csv, "{},{},{}", entry.frame, entry.iteration, entry.loss);
                    }
                    let csv_path = args.out.join(format!("loss_{label}.csv"));
                    std::fs::write(&csv_path, csv)?;
                    let (sdr, sdri, mean) = score(&stems, &experiment)?;
                    let stream_config =
                        StreamConfig::new(config, experiment.targets.source_count(), k, phase_init)?;
                    runs.push(RunReport {
                        algorithm: "omisi".into(),
                        lookahead: Some(k),
                        iterations: Some(iterations),
                        latency_samples: Some(latency_samples(&stream_config)),
                        stems: paths,
                        loss_csv: Some(csv_path.to_string_lossy().into_owned()),
                        si_sdr_db: sdr,
                        si_sdri_db: sdri,
                        mean_si_sdri_db: mean,
                    });
                }
            }
        }
    }

    let report = SeparationFileReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed: args.seed,
        sample_rate: config.sample_rate,
        scenario: match args.scenario {
            ScenarioArg::Oracle => "oracle",
            ScenarioArg::External => "external",
        },
        stft: config,
        source_count: experiment.targets.source_count(),
        runs,
    };
    let report_path = args.out.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())?;
    for run in &report.runs {
        let label = match run.lookahead {
            Some(k) => format!("{} (K={k})", run.algorithm),
            None => run.algorithm.clone(),
        };
        match run.mean_si_sdri_db {
            Some(mean) => println!("{label}: mean SI-SDRi {mean:.2} dB"),
            None => println!("{label}: stems written (no references to score against)"),
        }
    }
    println!("report: {}", report_path.display());
    Ok(())
}

#[derive(Args)]
pub struct StreamArgs {
    /// Mixture WAV to separate.
    #[arg(long)]
    mixture: PathBuf,
    /// Magnitude file with one matrix per source.
    #[arg(long)]
    magnitudes: PathBuf,
    #[arg(long, default_value_t = 1)]
    lookahead: usize,
    /// Iterations per pushed frame; defaults to round(15 / (lookahead + 1)).
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_enum, default_value_t = PhaseInitArg::Mixture)]
    phase_init: PhaseInitArg,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    stft: StftArgs,
}

pub fn stream(args: StreamArgs) -> Result<(), AppError> {
    let audio = read_mono_wav(&args.mixture)?;
    let config = args.stft.to_config(audio.sample_rate)?;
    let mixture = TimeSignal::new(audio.samples, audio.sample_rate)?;
    let analysis = make_analysis_window(&config);
    let mixture_spec = stft(&mixture, &config, &analysis)?;
    let targets = magfile::read_magnitudes(&args.magnitudes)?;
    if targets.frames() != mixture_spec.frames || targets.bins() != mixture_spec.bin_count() {
        return Err(AppError::data(format!(
            "magnitude file has {} frames x {} bins, the mixture analyzes to {} frames x {} bins",
            targets.frames(),
            targets.bins(),
            mixture_spec.frames,
            mixture_spec.bin_count()
        )));
    }
    ensure_out_dir(&args.out)?;
    let iterations = args
        .iters
        .unwrap_or_else(|| default_iterations(args.lookahead));

    let mut timing = String::from("frame,millis\n");
    let (stems, _) = run_stream_frames(
        &config,
        &mixture_spec,
        &targets,
        args.lookahead,
        iterations,
        args.phase_init.into(),
        |frame, millis| {
            let _ = writeln!(timing, "{frame},{millis:.4}");
        },
    )?;
    let timing_path = args.out.join("frame_times.csv");
    std::fs::write(&timing_path, &timing)?;
    for (j, stem) in stems.iter().enumerate() {
        let path = args.out.join(format!("stream_src{j}.wav"));
        write_mono_wav_f32(&path, &stem.samples, stem.sample_rate)?;
        println!("wrote {}", path.display());
    }

    let stream_config = StreamConfig::new(
        config,
        targets.source_count(),
        args.lookahead,
        args.phase_init.into(),
    )?;
    let hop_ms = config.hop as f64 / config.sample_rate as f64 * 1e3;
    let times: Vec<f64> = timing
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(1)?.parse().ok())
        .collect();
    let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
    let max = times.iter().fold(0.0f64, |m, &v| m.max(v));
    println!(
        "latency {} samples; per-frame wall clock mean {mean:.3} ms, max {max:.3} ms (hop is {hop_ms:.1} ms); log {}",
        latency_samples(&stream_config),
        timing_path.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Estimate WAVs, index-aligned with --reference.
    #[arg(long = "estimate", required = true)]
    estimates: Vec<PathBuf>,
    /// Reference WAVs.
    #[arg(long = "reference", required = true)]
    references: Vec<PathBuf>,
    /// Mixture WAV for the SI-SDRi baseline.
    #[arg(long)]
    mixture: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct MetricsEntry {
    estimate: String,
    reference: String,
    si_sdr_db: f64,
    si_sdri_db: f64,
}

#[derive(Serialize)]
struct MetricsFileReport {
    schema_version: u32,
    per_source: Vec<MetricsEntry>,
    mean_si_sdri_db: f64,
}

pub fn metrics(args: MetricsArgs) -> Result<(), AppError> {
    if args.estimates.len() != args.references.len() {
        return Err(AppError::usage(format!(
            "{} estimates but {} references",
            args.estimates.len(),
            args.references.len()
        )));
    }
    let mixture_audio = read_mono_wav(&args.mixture)?;
    let mixture = TimeSignal::new(mixture_audio.samples, mixture_audio.sample_rate)?;
    let mut per_source = Vec::with_capacity(args.estimates.len());
    for (est_path, ref_path) in args.estimates.iter().zip(&args.references) {
        let est_audio = read_mono_wav(est_path)?;
        let ref_audio = read_mono_wav(ref_path)?;
        if est_audio.sample_rate != mixture_audio.sample_rate
            || ref_audio.sample_rate != mixture_audio.sample_rate
        {
            return Err(AppError::data(format!(
                "{} / {}: sample rates differ from the mixture",
                est_path.display(),
                ref_path.display()
            )));
        }
        let est = TimeSignal::new(est_audio.samples, est_audio.sample_rate)?;
        let reference = TimeSignal::new(ref_audio.samples, ref_audio.sample_rate)?;
        per_source.push(MetricsEntry {
            estimate: est_path.to_string_lossy().into_owned(),
            reference: ref_path.to_string_lossy().into_owned(),
            si_sdr_db: si_sdr(&est, &reference)?,
            si_sdri_db: si_sdr_improvement(&est, &reference, &mixture)?,
        });
    }
    let mean_si_sdri_db =
        per_source.iter().map(|e| e.si_sdri_db).sum::<f64>() / per_source.len().max(1) as f64;
    let report = MetricsFileReport {
        schema_version: REPORT_SCHEMA_VERSION,
        per_source,
        mean_si_sdri_db,
    };
    let json = serde_json::to_string_pretty(&report).unwrap();
    match &args.out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}
