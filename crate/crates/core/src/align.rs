//! Forced-alignment ingestion.
//!
//! Input is a CTM-like text file with one character per line:
//!
//! ```text
//! # utt_id start_sec dur_sec char
//! utt001 0.50 0.22 家
//! ```
//!
//! A standard 5-column CTM (`utt channel start dur token`) converts with
//! `awk '{print $1, $3, $4, $5}'`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::audio::{read_wav, AudioClip, WavError};

/// Tolerance when deciding whether two segments overlap, in seconds.
const OVERLAP_EPSILON_SEC: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("utterance {utt_id}: segments overlap ({first}) and ({second})")]
    Overlap {
        utt_id: String,
        first: String,
        second: String,
    },
    #[error("utterance {utt_id}: segment [{start}, {end}) is out of range for {len} samples")]
    OutOfRange {
        utt_id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("utterance {utt_id}: audio file {path} not found")]
    MissingAudio { utt_id: String, path: String },
    #[error("utterance {utt_id}: {source}")]
    Audio {
        utt_id: String,
        #[source]
        source: WavError,
    },
}

/// Utterance ids double as file names, so path separators and leading dots
/// are not allowed.
pub fn is_valid_utt_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && !id.chars().any(|c| c == '/' || c == '\\' || c.is_whitespace() || c.is_control())
}

/// One aligned character.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSegment {
    pub utt_id: String,
    pub ch: char,
    pub start_sec: f64,
    pub dur_sec: f64,
}

impl AlignmentSegment {
    pub fn end_sec(&self) -> f64 {
        self.start_sec + self.dur_sec
    }

    /// Sample range `[round(start·rate), round((start+dur)·rate))`, rounding
    /// half away from zero on each end independently.
    pub fn sample_range(&self, sample_rate_hz: u32) -> (usize, usize) {
        let rate = f64::from(sample_rate_hz);
        let start = (self.start_sec * rate).round() as usize;
        let end = (self.end_sec() * rate).round() as usize;
        (start, end)
    }
}

fn parse_line(line_no: usize, row: &str) -> Result<AlignmentSegment, AlignError> {
    let err = |message: String| AlignError::Parse {
        line: line_no,
        message,
    };
    let fields: Vec<&str> = row.split_whitespace().collect();
    let [utt_id, start, dur, token] = fields[..] else {
        return Err(err(format!(
            "expected 4 fields <utt_id> <start_sec> <dur_sec> <char>, found {}",
            fields.len()
        )));
    };
    if !is_valid_utt_id(utt_id) {
        return Err(err(format!("invalid utterance id {utt_id:?}")));
    }
    let start_sec: f64 = start
        .parse()
        .map_err(|_| err(format!("start time {start:?} is not a number")))?;
    let dur_sec: f64 = dur
        .parse()
        .map_err(|_| err(format!("duration {dur:?} is not a number")))?;
    if !start_sec.is_finite() || start_sec < 0.0 {
        return Err(err(format!("start time {start_sec} must be finite and >= 0")));
    }
    if !dur_sec.is_finite() || dur_sec <= 0.0 {
        return Err(err(format!("duration {dur_sec} must be finite and > 0")));
    }
    let mut chars = token.chars();
    let ch = match (chars.next(), chars.next()) {
        (Some(c), None) => c,
        _ => return Err(err(format!("token {token:?} is not a single character"))),
    };
    Ok(AlignmentSegment {
        utt_id: utt_id.to_string(),
        ch,
        start_sec,
        dur_sec,
    })
}

/// Parse alignment text. Blank lines and `#` comments are skipped.
pub fn parse_alignment_str(text: &str) -> Result<Vec<AlignmentSegment>, AlignError> {
    let mut segments = Vec::new();
    let mut lines = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let row = row.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        segments.push(parse_line(i + 1, row)?);
        lines.push(i + 1);
    }
    check_overlaps(&segments, |i| {
        let s = &segments[i];
        format!("line {}: {} +{}", lines[i], s.start_sec, s.dur_sec)
    })?;
    Ok(segments)
}

pub fn parse_alignment(path: impl AsRef<Path>) -> Result<Vec<AlignmentSegment>, AlignError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| AlignError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_alignment_str(&text)
}

/// Reject overlapping segments within any utterance. `describe` renders a
/// segment (by index) for the error message.
pub fn check_overlaps(
    segments: &[AlignmentSegment],
    describe: impl Fn(usize) -> String,
) -> Result<(), AlignError> {
    for indices in group_by_utterance(segments).values() {
        for pair in indices.windows(2) {
            let (a, b) = (&segments[pair[0]], &segments[pair[1]]);
            if a.end_sec() > b.start_sec + OVERLAP_EPSILON_SEC {
                return Err(AlignError::Overlap {
                    utt_id: a.utt_id.clone(),
                    first: describe(pair[0]),
                    second: describe(pair[1]),
                });
            }
        }
    }
    Ok(())
}

/// Segment indices per utterance, each list sorted by start time (ties keep
/// input order).
pub fn group_by_utterance(segments: &[AlignmentSegment]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, seg) in segments.iter().enumerate() {
        groups.entry(seg.utt_id.as_str()).or_default().push(i);
    }
    for indices in groups.values_mut() {
        indices.sort_by(|&a, &b| segments[a].start_sec.total_cmp(&segments[b].start_sec));
    }
    groups
}

/// Shortest representation that round-trips, with at least six decimals.
fn format_time(t: f64) -> String {
    let shortest = format!("{t}");
    let decimals = shortest.split_once('.').map_or(0, |(_, d)| d.len());
    if decimals < 6 {
        format!("{t:.6}")
    } else {
        shortest
    }
}

pub fn serialize_alignment(segments: &[AlignmentSegment]) -> String {
    segments
        .iter()
        .map(|s| {
            format!(
                "{} {} {} {}\n",
                s.utt_id,
                format_time(s.start_sec),
                format_time(s.dur_sec),
                s.ch
            )
        })
        .collect()
}

/// Cut the samples covered by `seg` out of its utterance audio.
pub fn slice_fragment(clip: &AudioClip, seg: &AlignmentSegment) -> Result<AudioClip, AlignError> {
    let (start, end) = seg.sample_range(clip.sample_rate_hz());
    if start > end || end > clip.len() {
        return Err(AlignError::OutOfRange {
            utt_id: seg.utt_id.clone(),
            start,
            end,
            len: clip.len(),
        });
    }
    Ok(clip.slice(start, end))
}

/// Directory of utterance audio laid out as `<root>/<utt_id>.wav`.
#[derive(Debug, Clone)]
pub struct UtteranceAudioStore {
    root: PathBuf,
}

impl UtteranceAudioStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, utt_id: &str) -> PathBuf {
        self.root.join(format!("{utt_id}.wav"))
    }

    pub fn contains(&self, utt_id: &str) -> bool {
        self.path(utt_id).is_file()
    }

    pub fn load(&self, utt_id: &str) -> Result<AudioClip, AlignError> {
        let path = self.path(utt_id);
        if !path.is_file() {
            return Err(AlignError::MissingAudio {
                utt_id: utt_id.to_string(),
                path: path.display().to_string(),
            });
        }
        read_wav(&path).map_err(|source| AlignError::Audio {
            utt_id: utt_id.to_string(),
            source,
        })
    }
}
