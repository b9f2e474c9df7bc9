//! Minimal RIFF/WAVE reader and writer: mono, 16-bit PCM or 32-bit float.

use std::fs;
use std::io;
use std::path::Path;

use crate::AppError;

pub struct WavData {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

fn u16le(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32le(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

pub fn read_mono_wav(path: &Path) -> Result<WavData, AppError> {
    let bytes = fs::read(path)
        .map_err(|e| AppError::data(format!("cannot read {}: {e}", path.display())))?;
    let bad = |msg: &str| AppError::data(format!("{}: {msg}", path.display()));
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("not a RIFF/WAVE file"));
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<(usize, usize)> = None;
    let mut offset = 12usize;
    while offset + 8 <= bytes.len() {
        let id = &bytes[offset..offset + 4];
        let size = u32le(&bytes, offset + 4) as usize;
        let body = offset + 8;
        if body + size > bytes.len() {
            return Err(bad("truncated chunk"));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bad("fmt chunk too small"));
                }
                fmt = Some((
                    u16le(&bytes, body),
                    u16le(&bytes, body + 2),
                    u32le(&bytes, body + 4),
                    u16le(&bytes, body + 14),
                ));
            }
            b"data" => data = Some((body, size)),
            _ => {}
        }
        offset = body + size + (size & 1);
    }
    let (format, channels, sample_rate, bits) = fmt.ok_or_else(|| bad("missing fmt chunk"))?;
    let (data_at, data_len) = data.ok_or_else(|| bad("missing data chunk"))?;
    if channels != 1 {
        return Err(bad(&format!("only mono is supported, got {channels} channels")));
    }
    let samples = match (format, bits) {
        (1, 16) => bytes[data_at..data_at + data_len]
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (3, 32) => bytes[data_at..data_at + data_len]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        _ => {
            return Err(bad(&format!(
                "unsupported encoding (format {format}, {bits} bits); expected 16-bit PCM or 32-bit float"
            )))
        }
    };
    Ok(WavData {
        samples,
        sample_rate,
    })
}

fn write_riff(path: &Path, fmt_body: &[u8], fact: Option<u32>, data: &[u8]) -> io::Result<()> {
    let fact_len = if fact.is_some() { 12 } else { 0 };
    let riff_len = 4 + 8 + fmt_body.len() + fact_len + 8 + data.len();
    let mut out = Vec::with_capacity(8 + riff_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(riff_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&(fmt_body.len() as u32).to_le_bytes());
    out.extend_from_slice(fmt_body);
    if let Some(n) = fact {
        out.extend_from_slice(b"fact");
        out.extend_from_slice(&4u32.to_le_bytes());
        out.extend_from_slice(&n.to_le_bytes());
    }
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(data);
    fs::write(path, out)
}

fn fmt_chunk(format: u16, sample_rate: u32, bits: u16) -> Vec<u8> {
    let block_align = bits / 8;
    let mut body = Vec::with_capacity(16);
    body.extend_from_slice(&format.to_le_bytes());
    body.extend_from_slice(&1u16.to_le_bytes());
    body.extend_from_slice(&sample_rate.to_le_bytes());
    body.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    body.extend_from_slice(&block_align.to_le_bytes());
    body.extend_from_slice(&bits.to_le_bytes());
    body
}

pub fn write_mono_wav_f32(path: &Path, samples: &[f64], sample_rate: u32) -> io::Result<()> {
    let mut data = Vec::with_capacity(samples.len() * 4);
    for &s in samples {
        data.extend_from_slice(&(s as f32).to_le_bytes());
    }
    write_riff(
        path,
        &fmt_chunk(3, sample_rate, 32),
        Some(samples.len() as u32),
        &data,
    )
}

pub fn write_mono_wav_pcm16(path: &Path, samples: &[f64], sample_rate: u32) -> io::Result<()> {
    let mut data = Vec::with_capacity(samples.len() * 2);
    for &s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        data.extend_from_slice(&q.to_le_bytes());
    }
    write_riff(path, &fmt_chunk(1, sample_rate, 16), None, &data)
}
