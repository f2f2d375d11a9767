//! Waveform model and the numeric kernel of the pipeline: L2 norms,
//! equal-norm normalization and splicing.

mod wav;

pub use wav::{decode_wav, encode_wav, quantize, read_wav, write_wav, WavError};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AudioError {
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("empty clip sequence")]
    EmptySequence,
    #[error("silent fragment at index {index}: L2 norm is zero")]
    SilentFragment { index: usize },
    #[error("rate mismatch at index {index}: expected {expected} Hz, found {found} Hz")]
    RateMismatch {
        index: usize,
        expected: u32,
        found: u32,
    },
    #[error("gap must be a finite non-negative number of milliseconds, got {0}")]
    InvalidGap(f64),
}

/// Mono waveform with real-valued samples.
///
/// Samples are nominally in `[-1, 1]` but may exceed it in memory; clamping
/// only happens when a clip is written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if sample_rate_hz == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// A run of zeros.
    pub fn silence(len: usize, sample_rate_hz: u32) -> Result<Self, AudioError> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Multiply every sample by `factor`. The factor must be finite.
    pub fn scaled(&self, factor: f64) -> AudioClip {
        debug_assert!(factor.is_finite());
        AudioClip {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Copy of the half-open sample range `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> AudioClip {
        AudioClip {
            samples: self.samples[start..end].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// `sqrt(Σ x²)`, summed left to right. Zero for an empty clip.
pub fn l2_norm(clip: &AudioClip) -> f64 {
    clip.samples.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Output of [`normalize_energy`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationResult {
    pub clips: Vec<AudioClip>,
    /// Mean of the input L2 norms; every output clip has this norm.
    pub target_energy: f64,
}

/// Rescale a sequence of clips so they all share the mean of their L2 norms.
///
/// With `E = (1/n) Σ ‖aᵢ‖₂`, clip `i` becomes `aᵢ · (E / ‖aᵢ‖₂)`. The mean is
/// accumulated as a running mean so that `n` identical norms give back that
/// norm bit-for-bit, which makes the single-clip and repeated-clip cases exact
/// identities.
pub fn normalize_energy(clips: &[AudioClip]) -> Result<NormalizationResult, AudioError> {
    let first = clips.first().ok_or(AudioError::EmptySequence)?;
    let rate = first.sample_rate_hz;

    let mut norms = Vec::with_capacity(clips.len());
    for (index, clip) in clips.iter().enumerate() {
        if clip.sample_rate_hz != rate {
            return Err(AudioError::RateMismatch {
                index,
                expected: rate,
                found: clip.sample_rate_hz,
            });
        }
        let norm = l2_norm(clip);
        if norm == 0.0 {
            return Err(AudioError::SilentFragment { index });
        }
        norms.push(norm);
    }

    let mut mean = 0.0;
    for (k, norm) in norms.iter().enumerate() {
        mean += (norm - mean) / (k + 1) as f64;
    }

    let clips = clips
        .iter()
        .zip(&norms)
        .map(|(clip, norm)| clip.scaled(mean / norm))
        .collect();

    Ok(NormalizationResult {
        clips,
        target_energy: mean,
    })
}

/// Number of zero samples inserted for a gap of `gap_ms` at `sample_rate_hz`.
pub fn gap_samples(gap_ms: f64, sample_rate_hz: u32) -> Result<usize, AudioError> {
    if !gap_ms.is_finite() || gap_ms < 0.0 {
        return Err(AudioError::InvalidGap(gap_ms));
    }
    Ok((gap_ms * f64::from(sample_rate_hz) / 1000.0).round() as usize)
}

/// Join clips in order with `gap_ms` of silence between neighbours.
pub fn concatenate(clips: &[AudioClip], gap_ms: f64) -> Result<AudioClip, AudioError> {
    let first = clips.first().ok_or(AudioError::EmptySequence)?;
    let rate = first.sample_rate_hz;
    let gap = gap_samples(gap_ms, rate)?;

    let total = clips.iter().map(AudioClip::len).sum::<usize>() + gap * (clips.len() - 1);
    let mut samples = Vec::with_capacity(total);
    for (index, clip) in clips.iter().enumerate() {
        if clip.sample_rate_hz != rate {
            return Err(AudioError::RateMismatch {
                index,
                expected: rate,
                found: clip.sample_rate_hz,
            });
        }
        if index > 0 {
            samples.resize(samples.len() + gap, 0.0);
        }
        samples.extend_from_slice(&clip.samples);
    }
    Ok(AudioClip {
        samples,
        sample_rate_hz: rate,
    })
}
