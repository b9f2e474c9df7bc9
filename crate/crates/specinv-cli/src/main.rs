//! Command-line harness for spectrogram-inversion source separation: analyze
//! and synthesize WAV/magnitude files, run the amplitude-mask baseline, the
//! offline inverter and the streaming separator, and score the results.

mod commands;
mod magfile;
mod wav;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use specinv::{PhaseInit, StftConfig, WindowKind};

/// Exit code 1: the invocation itself was wrong. Exit code 2: the inputs
/// could not be processed.
#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Data(String),
}

impl AppError {
    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        AppError::Data(msg.into())
    }
}

impl From<specinv::Error> for AppError {
    fn from(e: specinv::Error) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "specinv",
    version,
    about = "Spectrogram inversion toolkit: offline and streaming phase recovery for source separation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute STFT magnitudes (and a complex sidecar) of a WAV file.
    Analyze(commands::AnalyzeArgs),
    /// Reconstruct WAV audio from a magnitude file plus phase sidecar.
    Synthesize(commands::SynthesizeArgs),
    /// Separate a mixture with the amplitude mask, offline or streaming
    /// inversion, and report SI-SDR when references are available.
    Separate(commands::SeparateArgs),
    /// Drive the streaming separator frame by frame over a mixture WAV and
    /// an external magnitude file, logging per-frame wall-clock times.
    Stream(commands::StreamArgs),
    /// Score estimate WAVs against references with SI-SDR / SI-SDRi.
    Metrics(commands::MetricsArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Hann,
    SqrtHann,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum PhaseInitArg {
    Mixture,
    Sinusoidal,
}

impl From<PhaseInitArg> for PhaseInit {
    fn from(v: PhaseInitArg) -> Self {
        match v {
            PhaseInitArg::Mixture => PhaseInit::Mixture,
            PhaseInitArg::Sinusoidal => PhaseInit::Sinusoidal,
        }
    }
}

/// Analysis geometry flags shared by every subcommand.
#[derive(Args, Clone, Copy)]
pub struct StftArgs {
    /// Window length in milliseconds.
    #[arg(long, default_value_t = 16.0)]
    win_ms: f64,
    /// Window-to-hop ratio; 2 means 50% overlap.
    #[arg(long, default_value_t = 2)]
    hop_ratio: usize,
    /// Zero-padding factor: DFT size = zpf * window length.
    #[arg(long, default_value_t = 2)]
    zpf: usize,
    /// Analysis window shape.
    #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
    window: WindowArg,
}

impl StftArgs {
    pub fn to_config(self, sample_rate: u32) -> Result<StftConfig, AppError> {
        if self.win_ms <= 0.0 {
            return Err(AppError::usage("--win-ms must be positive"));
        }
        if self.hop_ratio == 0 || self.zpf == 0 {
            return Err(AppError::usage("--hop-ratio and --zpf must be positive"));
        }
        let win_len = (self.win_ms * sample_rate as f64 / 1000.0).round() as usize;
        if win_len == 0 || win_len % self.hop_ratio != 0 {
            return Err(AppError::usage(format!(
                "window of {win_len} samples is not divisible by --hop-ratio {}",
                self.hop_ratio
            )));
        }
        let kind = match self.window {
            WindowArg::Hann => WindowKind::HannPeriodic,
            WindowArg::SqrtHann => WindowKind::SqrtHannPeriodic,
        };
        StftConfig::new(
            win_len,
            win_len / self.hop_ratio,
            win_len * self.zpf,
            sample_rate,
            kind,
        )
        .map_err(|e| AppError::usage(e.to_string()))
    }
}

pub fn ensure_out_dir(dir: &PathBuf) -> Result<(), AppError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| AppError::data(format!("cannot create {}: {e}", dir.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => commands::analyze(args),
        Command::Synthesize(args) => commands::synthesize(args),
        Command::Separate(args) => commands::separate(args),
        Command::Stream(args) => commands::stream(args),
        Command::Metrics(args) => commands::metrics(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
