//! Binary magnitude files and complex sidecars.
//!
//! Magnitude file (`.mspc`): magic "MSPC", version 1, then `bins`, `frames`,
//! `sources` as little-endian u32, then `sources * frames * bins` nonnegative
//! little-endian f32 values, source-major then frame-major. Any external
//! magnitude estimator can emit this layout directly.
//!
//! Phase sidecar (`.mphs`): magic "MPHS", same header, payload of f64
//! (re, im) pairs in the same order.

use std::fs;
use std::path::Path;

use specinv::{MagnitudeMatrix, MagnitudeSet};

use crate::AppError;

pub const MAGNITUDE_MAGIC: &[u8; 4] = b"MSPC";
pub const PHASE_MAGIC: &[u8; 4] = b"MPHS";
pub const FORMAT_VERSION: u32 = 1;

pub struct PhaseData {
    pub bins: usize,
    pub frames: usize,
    /// Per source, per frame, `bins` complex values as (re, im).
    pub columns: Vec<Vec<Vec<(f64, f64)>>>,
}

fn header(magic: &[u8; 4], bins: usize, frames: usize, sources: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(20);
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(bins as u32).to_le_bytes());
    out.extend_from_slice(&(frames as u32).to_le_bytes());
    out.extend_from_slice(&(sources as u32).to_le_bytes());
    out
}

fn parse_header(
    bytes: &[u8],
    magic: &[u8; 4],
    path: &Path,
) -> Result<(usize, usize, usize), AppError> {
    let bad = |msg: &str| AppError::data(format!("{}: {msg}", path.display()));
    if bytes.len() < 20 {
        return Err(bad("file too small for a header"));
    }
    if &bytes[0..4] != magic {
        return Err(bad(&format!(
            "bad magic {:?}, expected {:?}",
            &bytes[0..4],
            magic
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let bins = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let frames = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let sources = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    if bins == 0 || frames == 0 || sources == 0 {
        return Err(bad("empty dimensions"));
    }
    Ok((bins, frames, sources))
}

pub fn write_magnitudes(path: &Path, targets: &MagnitudeSet) -> Result<(), AppError> {
    let mut out = header(
        MAGNITUDE_MAGIC,
        targets.bins(),
        targets.frames(),
        targets.source_count(),
    );
    for source in targets.iter() {
        for t in 0..source.frames() {
            for &v in source.column(t) {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(|e| AppError::data(format!("cannot write {}: {e}", path.display())))
}

pub fn read_magnitudes(path: &Path) -> Result<MagnitudeSet, AppError> {
    let bytes = fs::read(path)
        .map_err(|e| AppError::data(format!("cannot read {}: {e}", path.display())))?;
    let (bins, frames, sources) = parse_header(&bytes, MAGNITUDE_MAGIC, path)?;
    let expected = 20 + sources * frames * bins * 4;
    if bytes.len() != expected {
        return Err(AppError::data(format!(
            "{}: payload is {} bytes, header implies {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let mut at = 20usize;
    let mut matrices = Vec::with_capacity(sources);
    for _ in 0..sources {
        // Stored frame-major; MagnitudeMatrix uses the same layout.
        let mut values = Vec::with_capacity(frames * bins);
        for _ in 0..frames * bins {
            let v = f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64;
            at += 4;
            values.push(v);
        }
        matrices.push(
            MagnitudeMatrix::new(bins, frames, values)
                .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?,
        );
    }
    MagnitudeSet::new(matrices).map_err(|e| AppError::data(format!("{}: {e}", path.display())))
}

pub fn write_phases(
    path: &Path,
    bins: usize,
    frames: usize,
    sources: &[Vec<Vec<(f64, f64)>>],
) -> Result<(), AppError> {
    let mut out = header(PHASE_MAGIC, bins, frames, sources.len());
    for source in sources {
        for column in source {
            for &(re, im) in column {
                out.extend_from_slice(&re.to_le_bytes());
                out.extend_from_slice(&im.to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(|e| AppError::data(format!("cannot write {}: {e}", path.display())))
}

pub fn read_phases(path: &Path) -> Result<PhaseData, AppError> {
    let bytes = fs::read(path)
        .map_err(|e| AppError::data(format!("cannot read {}: {e}", path.display())))?;
    let (bins, frames, sources) = parse_header(&bytes, PHASE_MAGIC, path)?;
    let expected = 20 + sources * frames * bins * 16;
    if bytes.len() != expected {
        return Err(AppError::data(format!(
            "{}: payload is {} bytes, header implies {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let mut at = 20usize;
    let mut read_f64 = || {
        let v = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        at += 8;
        v
    };
    let mut columns = Vec::with_capacity(sources);
    for _ in 0..sources {
        let mut per_frame = Vec::with_capacity(frames);
        for _ in 0..frames {
            let mut column = Vec::with_capacity(bins);
            for _ in 0..bins {
                let re = read_f64();
                let im = read_f64();
                column.push((re, im));
            }
            per_frame.push(column);
        }
        columns.push(per_frame);
    }
    Ok(PhaseData {
        bins,
        frames,
        columns,
    })
}
