//! PCM16 mono RIFF/WAVE reading and writing.
//!
//! Only one layout is accepted: format tag 1, one channel, 16 bits per
//! sample. Anything else is rejected with the name of the offending field.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{AudioClip, AudioError};

const FORMAT_PCM: u16 = 1;
const FULL_SCALE: f64 = 32768.0;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV: {0}")]
    Malformed(String),
    #[error("unsupported format: {field} = {value} (expected {expected})")]
    Unsupported {
        field: &'static str,
        value: u32,
        expected: u32,
    },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

impl WavError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        WavError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, WavError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| WavError::io(path, e))?;
    decode_wav(&bytes)
}

pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), WavError> {
    let path = path.as_ref();
    fs::write(path, encode_wav(clip)).map_err(|e| WavError::io(path, e))
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    sample_rate_hz: u32,
}

fn parse_fmt(body: &[u8]) -> Result<Format, WavError> {
    if body.len() < 16 {
        return Err(WavError::Malformed(format!(
            "fmt chunk is {} bytes, need at least 16",
            body.len()
        )));
    }
    let tag = u16_at(body, 0);
    if tag != FORMAT_PCM {
        return Err(WavError::Unsupported {
            field: "format_tag",
            value: tag.into(),
            expected: FORMAT_PCM.into(),
        });
    }
    let channels = u16_at(body, 2);
    if channels != 1 {
        return Err(WavError::Unsupported {
            field: "channels",
            value: channels.into(),
            expected: 1,
        });
    }
    let bits = u16_at(body, 14);
    if bits != 16 {
        return Err(WavError::Unsupported {
            field: "bits_per_sample",
            value: bits.into(),
            expected: 16,
        });
    }
    let block_align = u16_at(body, 12);
    if block_align != 2 {
        return Err(WavError::Malformed(format!(
            "block_align is {block_align}, expected 2 for 16-bit mono"
        )));
    }
    let sample_rate_hz = u32_at(body, 4);
    if sample_rate_hz == 0 {
        return Err(WavError::Malformed("sample rate is zero".into()));
    }
    Ok(Format { sample_rate_hz })
}

/// Decode an in-memory WAV file. Unknown chunks (LIST, fact, ...) are skipped.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::Malformed("missing RIFF/WAVE header".into()));
    }

    let mut format: Option<Format> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = bytes.len() - body_start;

        if id == b"data" {
            let format = format.ok_or_else(|| {
                WavError::Malformed("data chunk appears before fmt chunk".into())
            })?;
            if size > available {
                return Err(WavError::Malformed(format!(
                    "data chunk truncated: declares {size} bytes, {available} present"
                )));
            }
            if size % 2 != 0 {
                return Err(WavError::Malformed(format!(
                    "data chunk length {size} is not a whole number of 16-bit samples"
                )));
            }
            let samples = bytes[body_start..body_start + size]
                .chunks_exact(2)
                .map(|b| f64::from(i16::from_le_bytes([b[0], b[1]])) / FULL_SCALE)
                .collect();
            return Ok(AudioClip::new(samples, format.sample_rate_hz)?);
        }

        if size > available {
            return Err(WavError::Malformed(format!(
                "chunk {:?} truncated: declares {size} bytes, {available} present",
                String::from_utf8_lossy(id)
            )));
        }
        if id == b"fmt " {
            format = Some(parse_fmt(&bytes[body_start..body_start + size])?);
        }
        // RIFF chunks are padded to even length.
        pos = body_start + size + (size & 1);
    }

    Err(WavError::Malformed(
        if format.is_some() {
            "no data chunk"
        } else {
            "no fmt chunk"
        }
        .into(),
    ))
}

/// Map a real sample to PCM16: clamp to `[-1, 1 - 1/32768]`, scale by 32768,
/// round half away from zero.
pub fn quantize(sample: f64) -> i16 {
    let clamped = sample.clamp(-1.0, 1.0 - 1.0 / FULL_SCALE);
    (clamped * FULL_SCALE).round() as i16
}

pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let rate = clip.sample_rate_hz();
    let data_len = (clip.len() * 2) as u32;

    let mut buf = Vec::with_capacity(44 + clip.len() * 2);
    buf.extend_from_slice(b"RIFF");
    buf.extend_from_slice(&(36 + data_len).to_le_bytes());
    buf.extend_from_slice(b"WAVE");

    buf.extend_from_slice(b"fmt ");
    buf.extend_from_slice(&16u32.to_le_bytes());
    buf.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    buf.extend_from_slice(&1u16.to_le_bytes()); // channels
    buf.extend_from_slice(&rate.to_le_bytes());
    buf.extend_from_slice(&(rate * 2).to_le_bytes()); // byte rate
    buf.extend_from_slice(&2u16.to_le_bytes()); // block align
    buf.extend_from_slice(&16u16.to_le_bytes());

    buf.extend_from_slice(b"data");
    buf.extend_from_slice(&data_len.to_le_bytes());
    for &s in clip.samples() {
        buf.extend_from_slice(&quantize(s).to_le_bytes());
    }
    buf
}
